#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "caplab/lipschitz.hpp"
#include "caplab/numerics.hpp"
#include "caplab/sparse.hpp"

namespace caplab {

/// Bit i set means point i is labeled +eps.
using Labeling = std::uint64_t;

/// Largest m for which shattering is verified by full enumeration.
constexpr std::size_t kMaxVerifyPoints = 14;
/// Largest m the explicit constructions accept (implicit witnesses keep
/// this cheap even where enumeration is not).
constexpr std::size_t kMaxExplicitPoints = 16;

enum class InstanceKind { zero_init, nonzero_init, convex };
std::string_view to_string(InstanceKind kind) noexcept;
InstanceKind instance_kind_from_string(std::string_view name);

struct SeparatedFamily {
  std::size_t d = 0;
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<Vec> points;
  /// One n×d matrix per subset s ∈ [0, 2^m).
  std::vector<Mat> matrices;
  /// images[s·m + i] = matrices[s]·points[i].
  std::vector<Vec> images;
  /// Exact minimum over distinct (s, i) ≠ (t, j) of ‖W_s x_i − W_t x_j‖.
  double separation = 0.0;
  bool below_target = false;
  std::size_t attempts = 0;
};

/// Unit points and Gaussian (variance 1/n) matrices with ‖W_s‖_F² ≤ 2d,
/// resampled until the image separation reaches 1/4 or the resample budget
/// runs out (then the best attempt is returned, flagged).
SeparatedFamily random_separated_family(std::size_t d, std::size_t m, std::size_t n, std::uint64_t seed,
                                        std::size_t max_resamples);

using WitnessFunction = std::variant<AnchoredLipschitz, MaxAffine>;

/// Witness matrices W_y = W0 + scale·Δ_y, stored implicitly.
struct OffsetFamily {
  enum class Kind { dense, unit_entry };
  Kind kind = Kind::unit_entry;
  /// Dense offsets Δ_y, one per labeling.
  std::vector<Mat> dense;
  /// Unit-entry offsets: Δ_y = e_{row_base + y} e_colᵀ.
  std::size_t row_base = 0;
  std::size_t col = 0;
};

class ShatterInstance {
 public:
  InstanceKind kind = InstanceKind::nonzero_init;
  std::size_t m = 0;
  std::size_t d = 0;
  std::size_t n = 0;
  double eps = 0.0;
  double threshold = 0.0;
  /// Frobenius radius around W0.
  double radius = 0.0;
  /// Declared spectral norm of W0.
  double w0_norm = 0.0;
  double domain_radius = 1.0;
  double kappa = 0.5;
  NormKind metric = NormKind::euclidean;
  std::uint64_t seed = 0;
  /// Lipschitz budget from the two-valued interpolation formula, and the
  /// slope actually used by the witness function.
  double lemma_budget = 0.0;
  double witness_lipschitz = 0.0;
  std::optional<double> minimal_slope;
  /// Zero-init only: measured separation of the underlying family.
  std::optional<double> family_separation;
  bool separation_below_target = false;
  /// Construction parameters needed to regenerate the instance.
  std::map<std::string, double> params;

  std::vector<Vec> points;
  Mat w0;
  double scale = 1.0;
  OffsetFamily offsets;
  std::shared_ptr<const WitnessFunction> witness_fn;

  std::size_t labelings() const noexcept { return std::size_t{1} << m; }
  /// Dense W_y.
  Mat witness(Labeling y) const;
  /// W_y x_i.
  SparseVec image(Labeling y, std::size_t i) const;
  /// f(W_y x_i).
  double evaluate(Labeling y, std::size_t i) const;
  double evaluate(const SparseVec& z) const;
  /// ‖W_y − W0‖_F.
  double offset_norm(Labeling y) const;

  /// Replaces W_y by an explicit matrix (used to probe the verifier).
  void override_witness(Labeling y, Mat w);
  /// Recomputes cached W0 images after points or W0 change.
  void refresh();

 private:
  friend ShatterInstance rescale_domain(const ShatterInstance& inst, double b);

  std::vector<SparseVec> sparse_points_;
  std::vector<SparseVec> w0_images_;
  std::map<Labeling, Mat> overrides_;
};

ShatterInstance zero_init_instance(double radius, double lipschitz, double eps, std::size_t m_cap, std::uint64_t seed,
                                   std::size_t n = 256, std::size_t max_resamples = 20);
ShatterInstance nonzero_init_instance(std::size_t m, double eps, bool unit_domain = true);
ShatterInstance convex_instance(std::size_t m, double eps, double kappa = 0.5, bool unit_domain = true);

struct ShatterFailure {
  Labeling labeling = 0;
  std::size_t point = 0;
  double value = 0.0;
  double slack = 0.0;
};

struct ShatterReport {
  bool pass = false;
  bool margins_ok = false;
  bool budgets_ok = false;
  bool w0_norm_ok = false;
  double worst_slack = 0.0;
  double max_offset_norm = 0.0;
  double w0_norm_measured = 0.0;
  std::size_t failure_count = 0;
  /// First failures in labeling order, capped at `max_failures`.
  std::vector<ShatterFailure> failures;
};

/// Checks every labeling and point against the margin, every offset against
/// the radius and W0 against its declared spectral norm.
ShatterReport verify_shattering(const ShatterInstance& inst, std::size_t threads = 0, std::size_t max_failures = 64);

/// Divides points by b, multiplies W0, offsets and budgets by b. The witness
/// function is unchanged, so every f(W x) is preserved up to rounding.
ShatterInstance rescale_domain(const ShatterInstance& inst, double b);

nlohmann::json manifest(const ShatterInstance& inst);
ShatterInstance instance_from_manifest(const nlohmann::json& j);

}  // namespace caplab
