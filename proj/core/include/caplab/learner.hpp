#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "caplab/constructions.hpp"
#include "caplab/mat.hpp"
#include "caplab/rng.hpp"

namespace caplab {

/// Euclidean projection onto {W : ‖W − W0‖_F ≤ radius}.
Mat project_frobenius_ball(const Mat& w, const Mat& w0, double radius);

struct SgdConfig {
  Mat w0;
  double radius = 1.0;
  std::size_t steps = 1;
  /// Unset means √(B²/(L²T)).
  std::optional<double> eta;
  /// Bound on ‖V_t‖_F the oracle promises.
  double lipschitz = 1.0;
  std::uint64_t seed = 0;
  bool record_trace = true;
};

struct OracleStep {
  double loss = 0.0;
  Mat subgradient;
};

/// Samples an example from `rng` and returns the loss and a subgradient at W.
using SubgradientOracle = std::function<OracleStep(const Mat& w, Rng& rng)>;

struct TraceRecord {
  std::size_t step = 0;
  double loss = 0.0;
  double subgradient_norm = 0.0;
  double distance_to_w0 = 0.0;
  /// The oracle broke its ‖V_t‖_F ≤ L promise at this step.
  bool violation = false;
};

struct SgdResult {
  Mat w_hat;
  std::vector<TraceRecord> trace;
  double eta = 0.0;
  double regret_lhs = 0.0;
  double regret_rhs = 0.0;
  std::size_t violations = 0;
  /// Largest ‖W_t − W0‖_F over iterates W_1..W_T.
  double max_distance = 0.0;
};

/// Projected SGD from W_1 = W0, output (1/T)·Σ_{t≤T} W_t. Regret terms are
/// taken against `comparator` (W0 when null). When `trace_stream` is set each
/// step is also written as one JSON object per line.
SgdResult sgd_run(const SgdConfig& cfg, const SubgradientOracle& oracle, const Mat* comparator = nullptr,
                  std::ostream* trace_stream = nullptr);

/// Loss W ↦ f(W x_i) with i uniform over the instance points; the witness
/// function must be max-affine.
SubgradientOracle instance_oracle(const ShatterInstance& inst);

/// Exact population loss (1/m)·Σ_i f(W x_i).
double population_loss(const ShatterInstance& inst, const Mat& w);

/// max_p ‖d_p‖₂ · max_i ‖x_i‖₂, the Lipschitz constant of W ↦ f(W x) in ‖·‖_F.
double instance_loss_lipschitz(const ShatterInstance& inst);

struct ExcessRow {
  std::size_t steps = 0;
  std::uint64_t seed = 0;
  double excess = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct ExcessSummary {
  std::size_t steps = 0;
  double mean_excess = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct ExcessRiskTable {
  std::vector<ExcessRow> rows;
  std::vector<ExcessSummary> summary;
  double best_loss = 0.0;
  Labeling best_labeling = 0;
  double lipschitz = 0.0;
  double radius = 0.0;
  double tolerance = 0.0;
};

/// SGD on the instance's convex loss for each T and seed; excess is the exact
/// population loss of Ŵ minus the best loss among enumerated witnesses, and
/// passes when ≤ B·L/√T + tolerance (per row and for the seed average).
ExcessRiskTable excess_risk_experiment(const ShatterInstance& inst, const std::vector<std::size_t>& step_grid,
                                       const std::vector<std::uint64_t>& seeds, double tolerance = 0.05,
                                       std::size_t threads = 0);

struct GapRow {
  std::size_t m = 0;
  std::uint64_t seed = 0;
  std::size_t sample_size = 0;
  std::size_t support = 0;
  double empirical = 0.0;
  double population = 0.0;
  double gap = 0.0;
  double bound = 0.0;
  bool pass = false;
};

/// Draws `sample_size` points with replacement, takes the witness labeled +eps
/// exactly on the drawn support and reports empirical minus population
/// average; passes when the gap is at least eps.
std::vector<GapRow> uc_gap_experiment(const ShatterInstance& inst, std::size_t sample_size,
                                      const std::vector<std::uint64_t>& seeds, std::size_t threads = 0);

}  // namespace caplab
