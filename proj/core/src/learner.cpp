#include "caplab/learner.hpp"

#include <bit>
#include <cmath>
#include <ostream>
#include <random>
#include <utility>

#include <nlohmann/json.hpp>

#include "caplab/error.hpp"
#include "caplab/parallel.hpp"

namespace caplab {

namespace {

double frobenius_distance(const Mat& a, const Mat& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a.entries()[k] - b.entries()[k];
    s += d * d;
  }
  return std::sqrt(s);
}

const MaxAffine& convex_witness(const ShatterInstance& inst) {
  require(inst.witness_fn != nullptr, "instance has no witness function");
  const auto* f = std::get_if<MaxAffine>(inst.witness_fn.get());
  require(f != nullptr, "the loss needs a convex (max-affine) witness function");
  return *f;
}

}  // namespace

Mat project_frobenius_ball(const Mat& w, const Mat& w0, double radius) {
  require(w.rows() == w0.rows() && w.cols() == w0.cols(), "projection: shape mismatch");
  require(std::isfinite(radius) && radius >= 0.0, "projection radius must be nonnegative");
  const double dist = frobenius_distance(w, w0);
  if (dist <= radius) return w;
  Mat out = w0;
  const double s = radius / dist;
  for (std::size_t k = 0; k < out.size(); ++k) out.entries()[k] += s * (w.entries()[k] - w0.entries()[k]);
  return out;
}

SgdResult sgd_run(const SgdConfig& cfg, const SubgradientOracle& oracle, const Mat* comparator,
                  std::ostream* trace_stream) {
  require(!cfg.w0.empty(), "SGD needs W0");
  require(cfg.steps >= 1, "SGD needs T >= 1");
  require(std::isfinite(cfg.radius) && cfg.radius > 0.0, "SGD radius B must be positive");
  require(std::isfinite(cfg.lipschitz) && cfg.lipschitz > 0.0, "SGD Lipschitz bound L must be positive");
  const Mat& target = comparator != nullptr ? *comparator : cfg.w0;
  require(target.rows() == cfg.w0.rows() && target.cols() == cfg.w0.cols(), "comparator shape differs from W0");

  SgdResult res;
  res.eta = cfg.eta.value_or(std::sqrt(cfg.radius * cfg.radius /
                                       (cfg.lipschitz * cfg.lipschitz * static_cast<double>(cfg.steps))));
  require(std::isfinite(res.eta) && res.eta > 0.0, "step size eta must be positive");
  if (cfg.record_trace) res.trace.reserve(cfg.steps);

  Rng rng = make_rng(cfg.seed, {0x56d});
  Mat w = cfg.w0;
  Mat mean = cfg.w0;
  double sum_sq = 0.0;
  for (std::size_t t = 1; t <= cfg.steps; ++t) {
    OracleStep step = oracle(w, rng);
    require(step.subgradient.rows() == w.rows() && step.subgradient.cols() == w.cols(),
            "oracle subgradient has the wrong shape");
    const double vnorm = norm2(step.subgradient.entries());
    const double dist = frobenius_distance(w, cfg.w0);
    TraceRecord rec{t, step.loss, vnorm, dist, vnorm > cfg.lipschitz * (1.0 + 1e-12)};
    if (rec.violation) ++res.violations;
    res.max_distance = std::max(res.max_distance, dist);
    if (cfg.record_trace) res.trace.push_back(rec);
    if (trace_stream != nullptr) {
      nlohmann::json line = {{"step", rec.step},
                             {"loss", rec.loss},
                             {"subgradient_norm", rec.subgradient_norm},
                             {"distance_to_w0", rec.distance_to_w0},
                             {"violation", rec.violation}};
      *trace_stream << line.dump() << '\n';
    }

    double inner = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k)
      inner += (w.entries()[k] - target.entries()[k]) * step.subgradient.entries()[k];
    res.regret_lhs += inner;
    sum_sq += vnorm * vnorm;
    // Running mean; stays exact for constant iterates.
    const double inv_t = 1.0 / static_cast<double>(t);
    for (std::size_t k = 0; k < w.size(); ++k) mean.entries()[k] += (w.entries()[k] - mean.entries()[k]) * inv_t;

    for (std::size_t k = 0; k < w.size(); ++k) w.entries()[k] -= res.eta * step.subgradient.entries()[k];
    w = project_frobenius_ball(w, cfg.w0, cfg.radius);
  }
  const double d0 = frobenius_distance(target, cfg.w0);
  res.regret_rhs = d0 * d0 / (2.0 * res.eta) + 0.5 * res.eta * sum_sq;
  res.w_hat = std::move(mean);
  return res;
}

SubgradientOracle instance_oracle(const ShatterInstance& inst) {
  convex_witness(inst);
  std::vector<SparseVec> xs;
  for (const Vec& x : inst.points) xs.push_back(SparseVec::from_dense(x));
  const std::size_t m = inst.m;
  return [fn = inst.witness_fn, xs = std::move(xs), m](const Mat& w, Rng& rng) {
    const MaxAffine& f = std::get<MaxAffine>(*fn);
    std::uniform_int_distribution<std::size_t> pick(0, m - 1);
    const SparseVec& x = xs[pick(rng)];
    const SparseVec z = apply_sparse(w, x);
    OracleStep out{f.evaluate(z), Mat(w.rows(), w.cols())};
    const SparseVec g = f.subgradient(z);
    for (std::size_t a = 0; a < g.nnz(); ++a)
      for (std::size_t b = 0; b < x.nnz(); ++b) out.subgradient(g.index[a], x.index[b]) = g.value[a] * x.value[b];
    return out;
  };
}

double population_loss(const ShatterInstance& inst, const Mat& w) {
  require(w.rows() == inst.n && w.cols() == inst.d, "population loss: W has the wrong shape");
  double s = 0.0;
  for (const Vec& x : inst.points) s += inst.evaluate(apply_sparse(w, SparseVec::from_dense(x)));
  return s / static_cast<double>(inst.m);
}

double instance_loss_lipschitz(const ShatterInstance& inst) {
  const MaxAffine& f = convex_witness(inst);
  double xmax = 0.0;
  for (const Vec& x : inst.points) xmax = std::max(xmax, norm2(x));
  return f.lipschitz(NormKind::euclidean) * xmax;
}

ExcessRiskTable excess_risk_experiment(const ShatterInstance& inst, const std::vector<std::size_t>& step_grid,
                                       const std::vector<std::uint64_t>& seeds, double tolerance,
                                       std::size_t threads) {
  convex_witness(inst);
  require(!step_grid.empty() && !seeds.empty(), "excess-risk experiment needs T values and seeds");
  for (std::size_t t : step_grid) require(t >= 1, "every T must be at least 1");
  require(std::isfinite(tolerance) && tolerance >= 0.0, "tolerance must be nonnegative");
  if (inst.m > kMaxVerifyPoints)
    fail(ErrorKind::capacity_exceeded, "best-witness search enumerates 2^m labelings; m exceeds 14");

  ExcessRiskTable table;
  table.tolerance = tolerance;
  table.radius = inst.radius;
  table.lipschitz = instance_loss_lipschitz(inst);

  std::vector<double> witness_loss(inst.labelings());
  parallel_for(
      inst.labelings(),
      [&](std::size_t y) {
        double s = 0.0;
        for (std::size_t i = 0; i < inst.m; ++i) s += inst.evaluate(y, i);
        witness_loss[y] = s / static_cast<double>(inst.m);
      },
      threads);
  table.best_labeling = 0;
  for (Labeling y = 1; y < inst.labelings(); ++y)
    if (witness_loss[y] < witness_loss[table.best_labeling]) table.best_labeling = y;
  table.best_loss = witness_loss[table.best_labeling];

  const SubgradientOracle oracle = instance_oracle(inst);
  const std::size_t cells = step_grid.size() * seeds.size();
  table.rows.resize(cells);
  parallel_for(
      cells,
      [&](std::size_t c) {
        const std::size_t steps = step_grid[c / seeds.size()];
        const std::uint64_t seed = seeds[c % seeds.size()];
        SgdConfig cfg;
        cfg.w0 = inst.w0;
        cfg.radius = inst.radius;
        cfg.steps = steps;
        cfg.lipschitz = table.lipschitz;
        cfg.seed = derive_seed(seed, {steps});
        cfg.record_trace = false;
        const SgdResult r = sgd_run(cfg, oracle);
        ExcessRow& row = table.rows[c];
        row.steps = steps;
        row.seed = seed;
        row.excess = population_loss(inst, r.w_hat) - table.best_loss;
        row.bound = inst.radius * table.lipschitz / std::sqrt(static_cast<double>(steps));
        row.pass = row.excess <= row.bound + tolerance;
      },
      threads);

  for (std::size_t k = 0; k < step_grid.size(); ++k) {
    ExcessSummary s;
    s.steps = step_grid[k];
    for (std::size_t j = 0; j < seeds.size(); ++j) s.mean_excess += table.rows[k * seeds.size() + j].excess;
    s.mean_excess /= static_cast<double>(seeds.size());
    s.bound = table.rows[k * seeds.size()].bound;
    s.pass = s.mean_excess <= s.bound + tolerance;
    table.summary.push_back(s);
  }
  return table;
}

std::vector<GapRow> uc_gap_experiment(const ShatterInstance& inst, std::size_t sample_size,
                                      const std::vector<std::uint64_t>& seeds, std::size_t threads) {
  require(inst.witness_fn != nullptr, "instance has no witness function");
  require(sample_size >= 1, "sample size must be at least 1");
  require(sample_size <= inst.m, "sample size must not exceed the number of instance points");
  require(!seeds.empty(), "uc-gap experiment needs seeds");
  std::vector<GapRow> rows(seeds.size());
  parallel_for(
      seeds.size(),
      [&](std::size_t k) {
        Rng rng = make_rng(seeds[k], {0x9a9});
        std::uniform_int_distribution<std::size_t> pick(0, inst.m - 1);
        std::vector<std::size_t> sample(sample_size);
        Labeling y = 0;
        for (std::size_t& i : sample) {
          i = pick(rng);
          y |= Labeling{1} << i;
        }
        GapRow& row = rows[k];
        row.m = inst.m;
        row.seed = seeds[k];
        row.sample_size = sample_size;
        row.support = static_cast<std::size_t>(std::popcount(y));
        std::vector<double> value(inst.m);
        for (std::size_t i = 0; i < inst.m; ++i) value[i] = inst.evaluate(y, i);
        for (std::size_t i : sample) row.empirical += value[i];
        row.empirical /= static_cast<double>(sample_size);
        for (double v : value) row.population += v;
        row.population /= static_cast<double>(inst.m);
        row.gap = row.empirical - row.population;
        row.bound = inst.eps;
        row.pass = row.gap >= inst.eps - 1e-12;
      },
      threads);
  return rows;
}

}  // namespace caplab
