#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "caplab/mat.hpp"

namespace caplab {

enum class NormKind { frobenius, spectral, euclidean, infinity };

std::string_view to_string(NormKind kind) noexcept;
NormKind norm_kind_from_string(std::string_view name);

/// Matrix norm. `euclidean` and `infinity` require a single column.
double norm(const Mat& m, NormKind kind);
/// Vector norm; `frobenius` is accepted as a synonym of `euclidean`.
double norm(std::span<const double> v, NormKind kind);

struct PowerIterationOptions {
  std::size_t max_iterations = 10000;
  double tolerance = 1e-10;
  std::uint64_t seed = 0x5eed;
};

/// Largest singular value by power iteration on MᵀM. Stops once the
/// eigen-residual ‖MᵀMv − λv‖ falls below tolerance·λ.
double spectral_norm(const Mat& m, const PowerIterationOptions& options = {});

/// Thin SVD M = U diag(s) Vᵀ with singular values in non-increasing order.
/// U is rows×k, V is cols×k, k = min(rows, cols).
struct Svd {
  Mat u;
  std::vector<double> singular_values;
  Mat v;
};

struct SvdOptions {
  double tolerance = 1e-12;
  std::size_t max_sweeps = 100;
};

/// One-sided Jacobi (Hestenes) SVD.
Svd svd(const Mat& m, const SvdOptions& options = {});

struct LowRank {
  Mat matrix;
  std::size_t rank = 0;
  /// Largest dropped singular value, i.e. the spectral-norm error.
  double dropped_max = 0.0;
  std::vector<double> singular_values;
};

/// Keeps singular directions with σ > eps; values within 1e-12 of eps are
/// dropped.
LowRank svd_truncate(const Mat& w, double eps);

struct BallNet {
  double radius = 0.0;
  std::size_t dim = 0;
  double resolution = 0.0;
  std::vector<Vec> centers;
};

/// (1 + 2B/eps)^r, the packing cardinality ceiling.
double ball_net_size_bound(std::size_t r, double radius, double eps);

/// eps-separated subset of the closed radius-B ball in ℝ^r that also covers
/// it at scale eps. Greedy over a Halton candidate stream, then completed by
/// a cell-refinement pass that either certifies coverage of each cell or
/// inserts an uncovered ball point as a new center.
BallNet ball_net(std::size_t r, double radius, double eps);

/// Distance from x to the nearest center.
double net_distance(const BallNet& net, std::span<const double> x);

std::string to_csv(const Mat& m);
Mat mat_from_csv(std::string_view text);
nlohmann::json mat_to_json(const Mat& m);
Mat mat_from_json(const nlohmann::json& j);

/// "%.17g" formatting shared by every textual artifact.
std::string format_real(double v);

}  // namespace caplab
