#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "caplab/numerics.hpp"
#include "caplab/rng.hpp"
#include "caplab/sparse.hpp"

namespace caplab {

/// Closed form of (2/alpha)·min_C max_i |p_i − C|, i.e. (max − min)/alpha.
double budget(std::span<const double> values, double alpha);

/// Distance in the Euclidean or infinity metric.
double metric_distance(NormKind metric, std::span<const double> a, std::span<const double> b);
double metric_distance(NormKind metric, const SparseVec& a, const SparseVec& b);
/// Dual norm used for Lipschitz constants of linear maps (ℓ2 ↔ ℓ2, ℓ∞ ↔ ℓ1).
double dual_norm(NormKind metric, std::span<const double> direction);

/// Smallest L with |p_i − p_j| ≤ L·d(a_i, a_j) over all pairs. O(N²).
double minimal_feasible_slope(const SparseRows& anchors, std::span<const double> values, NormKind metric);

/// Smallest pairwise anchor distance. O(N²).
double min_anchor_separation(const SparseRows& anchors, NormKind metric);

/// McShane extension f(x) = min_i (p_i + L·d(x, a_i)). Anchors are kept in
/// compressed sparse form; when they are sparse, evaluation prunes anchors by
/// coordinate posting lists and stays exact.
class AnchoredLipschitz {
 public:
  AnchoredLipschitz(SparseRows anchors, Vec values, double lipschitz, NormKind metric);

  double evaluate(const SparseVec& x) const;
  double evaluate(std::span<const double> x) const;
  /// Reference evaluator: full scan, no pruning.
  double evaluate_scan(const SparseVec& x) const;

  std::size_t dim() const noexcept { return anchors_.dim(); }
  std::size_t size() const noexcept { return values_.size(); }
  double lipschitz() const noexcept { return lipschitz_; }
  NormKind metric() const noexcept { return metric_; }
  const SparseRows& anchors() const noexcept { return anchors_; }
  const Vec& values() const noexcept { return values_; }
  bool uses_posting_lists() const noexcept { return !postings_.empty(); }

 private:
  double distance(std::size_t j, const QueryScratch& q, std::span<const std::pair<std::uint32_t, double>> top) const;
  double scan(const QueryScratch& q, std::span<const std::pair<std::uint32_t, double>> top, double best) const;

  SparseRows anchors_;
  Vec values_;
  double lipschitz_;
  NormKind metric_;
  double min_value_ = 0.0;
  std::vector<std::vector<std::uint32_t>> postings_;
};

/// Validates anchors (distinct, finite, metric supported) and feasibility of
/// L; throws BudgetTooSmall carrying the minimal feasible slope otherwise.
AnchoredLipschitz mcshane_extend(SparseRows anchors, Vec values, double lipschitz, NormKind metric);
AnchoredLipschitz mcshane_extend(const std::vector<Vec>& anchors, Vec values, double lipschitz, NormKind metric);

/// f(x) = max(max_p ⟨d_p, x⟩ + o_p, κ) + shift.
class MaxAffine {
 public:
  MaxAffine(SparseRows directions, Vec offsets, double kappa, double shift);

  double evaluate(const SparseVec& x) const;
  double evaluate(std::span<const double> x) const;
  /// Index of the active piece (lowest index wins ties); size() denotes κ.
  std::size_t active_piece(const SparseVec& x) const;
  /// Element of the subdifferential at x, consistent with active_piece.
  SparseVec subgradient(const SparseVec& x) const;
  /// max_p dual_norm(d_p): the Lipschitz constant in `metric`.
  double lipschitz(NormKind metric) const;

  std::size_t dim() const noexcept { return directions_.dim(); }
  std::size_t size() const noexcept { return offsets_.size(); }
  double kappa() const noexcept { return kappa_; }
  double shift() const noexcept { return shift_; }
  const SparseRows& directions() const noexcept { return directions_; }
  const Vec& offsets() const noexcept { return offsets_; }

 private:
  SparseRows directions_;
  Vec offsets_;
  double kappa_;
  double shift_;
};

struct LipschitzMeasurement {
  double slope = 0.0;
  std::size_t pairs = 0;
  std::size_t skipped = 0;
  /// Sampling only certifies a lower bound on the true constant.
  bool is_lower_estimate = true;
};

using PointFunction = std::function<double(std::span<const double>)>;
using PairSampler = std::function<std::pair<Vec, Vec>(Rng&)>;

/// max over sampled pairs of |f(u) − f(v)| / d(u, v). Pair k draws from its
/// own derived stream, so the result does not depend on the worker count.
LipschitzMeasurement empirical_lipschitz(const PointFunction& f, const PairSampler& sampler, NormKind metric,
                                         std::size_t pairs, std::uint64_t seed, std::size_t threads = 0);

/// Uniform pairs in the box [lo, hi]^dim.
PairSampler uniform_box_sampler(std::size_t dim, double lo, double hi);

/// Half the pairs perturb a random anchor by at most `radius` per coordinate
/// on both ends, half are uniform in the anchors' bounding box widened by
/// `radius`. Typical radius: 0.1·min anchor separation.
PairSampler anchored_pair_sampler(const AnchoredLipschitz& f, double radius);

constexpr std::size_t kDefaultSerializationLimit = 1'000'000;

nlohmann::json to_json(const AnchoredLipschitz& f, std::size_t max_anchors = kDefaultSerializationLimit);
AnchoredLipschitz anchored_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MaxAffine& f, std::size_t max_pieces = kDefaultSerializationLimit);
MaxAffine max_affine_from_json(const nlohmann::json& j);

}  // namespace caplab
