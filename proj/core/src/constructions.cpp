#include "caplab/constructions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "caplab/error.hpp"
#include "caplab/parallel.hpp"
#include "caplab/rng.hpp"

namespace caplab {

std::string_view to_string(InstanceKind kind) noexcept {
  switch (kind) {
    case InstanceKind::zero_init:
      return "zero-init";
    case InstanceKind::nonzero_init:
      return "nonzero-init";
    case InstanceKind::convex:
      return "convex";
  }
  return "unknown";
}

InstanceKind instance_kind_from_string(std::string_view name) {
  if (name == "zero-init") return InstanceKind::zero_init;
  if (name == "nonzero-init") return InstanceKind::nonzero_init;
  if (name == "convex") return InstanceKind::convex;
  fail(ErrorKind::invalid_input, "unknown instance kind '" + std::string(name) +
                                     "' (expected zero-init, nonzero-init or convex)");
}

namespace {

constexpr double kSeparationTarget = 0.25;
constexpr double kMaxFamilyEntries = 67108864.0;  // 2^26 doubles

double min_pairwise_distance(const std::vector<Vec>& v) {
  std::vector<double> per_row(v.size(), std::numeric_limits<double>::infinity());
  parallel_for(v.size(), [&](std::size_t a) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t b = a + 1; b < v.size(); ++b) best = std::min(best, distance2(v[a], v[b]));
    per_row[a] = best;
  });
  return *std::min_element(per_row.begin(), per_row.end());
}

SparseRows anchor_rows(const ShatterInstance& inst, Vec& values) {
  SparseRows rows(inst.n);
  values.clear();
  for (Labeling y = 0; y < inst.labelings(); ++y) {
    for (std::size_t i = 0; i < inst.m; ++i) {
      rows.push_back(inst.image(y, i));
      values.push_back((y >> i & 1U) ? inst.eps : -inst.eps);
    }
  }
  return rows;
}

void check_explicit_args(std::size_t m, double eps) {
  require(m >= 1, "m must be at least 1");
  if (m > kMaxExplicitPoints)
    fail(ErrorKind::capacity_exceeded, "m = " + std::to_string(m) + " exceeds the cap of " +
                                           std::to_string(kMaxExplicitPoints));
  require(std::isfinite(eps) && eps > 0.0 && eps <= 0.5, "eps must lie in (0, 0.5]");
}

/// Shared skeleton of the explicit constructions: points e_i + e_m in ℝ^{m+1},
/// W0 = w0_scale·[I | 0], unit-entry offsets in the last column.
ShatterInstance explicit_skeleton(InstanceKind kind, std::size_t m, double eps, double w0_scale) {
  ShatterInstance inst;
  inst.kind = kind;
  inst.m = m;
  inst.d = m + 1;
  inst.n = (std::size_t{1} << m) + m;
  inst.eps = eps;
  inst.threshold = 0.0;
  inst.radius = 1.0;
  inst.w0_norm = w0_scale;
  inst.domain_radius = std::sqrt(2.0);
  inst.metric = NormKind::infinity;
  inst.params = {{"m", static_cast<double>(m)}, {"eps", eps}, {"rescale", 1.0}};
  for (std::size_t i = 0; i < m; ++i) {
    Vec x(inst.d, 0.0);
    x[i] = 1.0;
    x[m] = 1.0;
    inst.points.push_back(std::move(x));
  }
  inst.w0 = Mat(inst.n, inst.d);
  for (std::size_t i = 0; i < m; ++i) inst.w0(i, i) = w0_scale;
  inst.scale = 1.0;
  inst.offsets.kind = OffsetFamily::Kind::unit_entry;
  inst.offsets.row_base = m;
  inst.offsets.col = m;
  inst.refresh();
  return inst;
}

}  // namespace

SeparatedFamily random_separated_family(std::size_t d, std::size_t m, std::size_t n, std::uint64_t seed,
                                        std::size_t max_resamples) {
  require(d >= 20, "d >= 20 is required (got " + std::to_string(d) + ")");
  require(m >= 1 && n >= 1, "m and n must be positive");
  if (m > kMaxVerifyPoints)
    fail(ErrorKind::capacity_exceeded, "m = " + std::to_string(m) + " exceeds the cap of 14");
  const double entries = std::ldexp(1.0, static_cast<int>(m)) * static_cast<double>(n) * static_cast<double>(d);
  if (entries > kMaxFamilyEntries)
    fail(ErrorKind::capacity_exceeded, "family would hold " + format_real(entries) + " matrix entries (cap 2^26)");

  const std::size_t count = std::size_t{1} << m;
  const double frob_cap = std::sqrt(2.0 * static_cast<double>(d));
  SeparatedFamily best;
  best.separation = -1.0;
  std::size_t attempts = 0;
  for (std::size_t attempt = 0; attempt <= max_resamples; ++attempt) {
    ++attempts;
    SeparatedFamily fam;
    fam.d = d;
    fam.m = m;
    fam.n = n;
    Rng rng = make_rng(seed, {attempt, 0});
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < m; ++i) {
      Vec x(d);
      double nx = 0.0;
      while (nx == 0.0) {
        for (double& v : x) v = gauss(rng);
        nx = norm2(x);
      }
      for (double& v : x) v /= nx;
      fam.points.push_back(std::move(x));
    }
    fam.matrices.resize(count);
    parallel_for(count, [&](std::size_t s) {
      Rng local = make_rng(seed, {attempt, 1, s});
      std::normal_distribution<double> entry(0.0, 1.0 / std::sqrt(static_cast<double>(n)));
      Mat w(n, d);
      for (double& v : w.entries()) v = entry(local);
      double f = norm2(w.entries());
      while (f > frob_cap) {
        w *= (frob_cap / f) * (1.0 - 1e-15);
        f = norm2(w.entries());
      }
      fam.matrices[s] = std::move(w);
    });
    fam.images.resize(count * m);
    parallel_for(count, [&](std::size_t s) {
      for (std::size_t i = 0; i < m; ++i) fam.images[s * m + i] = fam.matrices[s].apply(fam.points[i]);
    });
    fam.separation = fam.images.size() > 1 ? min_pairwise_distance(fam.images) : std::numeric_limits<double>::infinity();
    const bool better = fam.separation > best.separation;
    if (better) best = std::move(fam);
    if (best.separation >= kSeparationTarget) break;
  }
  best.attempts = attempts;
  best.below_target = best.separation < kSeparationTarget;
  return best;
}

Mat ShatterInstance::witness(Labeling y) const {
  require(y < labelings(), "labeling out of range");
  if (auto it = overrides_.find(y); it != overrides_.end()) return it->second;
  Mat w = w0;
  if (offsets.kind == OffsetFamily::Kind::dense) {
    const Mat& delta = offsets.dense.at(y);
    for (std::size_t k = 0; k < w.size(); ++k) w.entries()[k] += scale * delta.entries()[k];
  } else {
    w(offsets.row_base + y, offsets.col) += scale;
  }
  return w;
}

SparseVec ShatterInstance::image(Labeling y, std::size_t i) const {
  require(y < labelings() && i < m, "labeling or point index out of range");
  if (auto it = overrides_.find(y); it != overrides_.end()) return apply_sparse(it->second, sparse_points_[i]);
  if (offsets.kind == OffsetFamily::Kind::dense)
    return w0_images_[i] + scale * apply_sparse(offsets.dense.at(y), sparse_points_[i]);
  const double xc = points[i][offsets.col];
  if (xc == 0.0) return w0_images_[i];
  SparseVec bump{n, {static_cast<std::uint32_t>(offsets.row_base + y)}, {scale * xc}};
  return w0_images_[i] + bump;
}

double ShatterInstance::evaluate(const SparseVec& z) const {
  return std::visit([&](const auto& f) { return f.evaluate(z); }, *witness_fn);
}

double ShatterInstance::evaluate(Labeling y, std::size_t i) const { return evaluate(image(y, i)); }

double ShatterInstance::offset_norm(Labeling y) const {
  require(y < labelings(), "labeling out of range");
  if (auto it = overrides_.find(y); it != overrides_.end()) return norm2((it->second - w0).entries());
  if (offsets.kind == OffsetFamily::Kind::dense) return std::abs(scale) * norm2(offsets.dense.at(y).entries());
  return std::abs(scale);
}

void ShatterInstance::override_witness(Labeling y, Mat w) {
  require(y < labelings(), "labeling out of range");
  require(w.rows() == n && w.cols() == d, "override has the wrong shape");
  overrides_[y] = std::move(w);
}

void ShatterInstance::refresh() {
  sparse_points_.clear();
  w0_images_.clear();
  for (const Vec& x : points) {
    sparse_points_.push_back(SparseVec::from_dense(x));
    w0_images_.push_back(apply_sparse(w0, sparse_points_.back()));
  }
}

ShatterInstance zero_init_instance(double radius, double lipschitz, double eps, std::size_t m_cap, std::uint64_t seed,
                                   std::size_t n, std::size_t max_resamples) {
  require(std::isfinite(radius) && radius >= 1.0, "B >= 1 is required");
  require(std::isfinite(lipschitz) && lipschitz >= 1.0, "L >= 1 is required");
  require(std::isfinite(eps) && eps > 0.0 && eps <= 1.0, "0 < eps <= 1 is required");
  const double ratio = lipschitz * lipschitz * radius * radius / (128.0 * eps * eps);
  require(ratio >= 20.0, "L^2 B^2 / (128 eps^2) >= 20 is violated (value " + format_real(ratio) + ")");
  require(m_cap >= 1, "m_cap must be at least 1");
  if (m_cap > kMaxVerifyPoints)
    fail(ErrorKind::capacity_exceeded, "m_cap = " + std::to_string(m_cap) + " exceeds the cap of 14");

  ShatterInstance inst;
  inst.kind = InstanceKind::zero_init;
  inst.d = static_cast<std::size_t>(std::floor(ratio));
  inst.n = n;
  inst.m = std::min(m_cap, std::max<std::size_t>(1, n / 10));
  inst.eps = eps;
  inst.threshold = 0.0;
  inst.radius = radius;
  inst.w0_norm = 0.0;
  inst.domain_radius = 1.0;
  inst.metric = NormKind::euclidean;
  inst.seed = seed;
  inst.params = {{"B", radius},
                 {"L", lipschitz},
                 {"eps", eps},
                 {"m_cap", static_cast<double>(m_cap)},
                 {"n", static_cast<double>(n)},
                 {"max_resamples", static_cast<double>(max_resamples)},
                 {"rescale", 1.0}};

  SeparatedFamily fam = random_separated_family(inst.d, inst.m, n, seed, max_resamples);
  inst.family_separation = fam.separation;
  inst.separation_below_target = fam.below_target;
  inst.points = std::move(fam.points);
  inst.w0 = Mat(n, inst.d);
  inst.scale = 8.0 * eps / lipschitz;
  inst.offsets.kind = OffsetFamily::Kind::dense;
  inst.offsets.dense = std::move(fam.matrices);
  inst.refresh();

  if (!(fam.separation > 0.0))
    fail(ErrorKind::numerical_failure, "separated family has coincident images");
  Vec values;
  SparseRows anchors = anchor_rows(inst, values);
  const double alpha = inst.scale * fam.separation;
  inst.lemma_budget = budget(values, alpha);
  inst.minimal_slope = minimal_feasible_slope(anchors, values, inst.metric);
  inst.witness_lipschitz = std::max(inst.lemma_budget, *inst.minimal_slope);
  inst.witness_fn = std::make_shared<const WitnessFunction>(
      mcshane_extend(std::move(anchors), std::move(values), inst.witness_lipschitz, inst.metric));
  return inst;
}

ShatterInstance nonzero_init_instance(std::size_t m, double eps, bool unit_domain) {
  check_explicit_args(m, eps);
  ShatterInstance inst = explicit_skeleton(InstanceKind::nonzero_init, m, eps, 2.0 * eps);
  Vec values;
  SparseRows anchors = anchor_rows(inst, values);
  // Images are 2eps apart in ℓ∞ (same labeling) or at least 1 apart.
  inst.lemma_budget = budget(values, 2.0 * eps);
  inst.witness_lipschitz = inst.lemma_budget;
  inst.witness_fn = std::make_shared<const WitnessFunction>(
      mcshane_extend(std::move(anchors), std::move(values), inst.witness_lipschitz, inst.metric));
  return unit_domain ? rescale_domain(inst, std::sqrt(2.0)) : inst;
}

ShatterInstance convex_instance(std::size_t m, double eps, double kappa, bool unit_domain) {
  check_explicit_args(m, eps);
  require(std::isfinite(kappa), "kappa must be finite");
  ShatterInstance inst = explicit_skeleton(InstanceKind::convex, m, eps, 4.0 * eps);
  inst.kappa = kappa;
  inst.params["kappa"] = kappa;

  SparseRows pieces(inst.n);
  pieces.reserve(m << (m - 1), m << m);
  for (Labeling z = 0; z < inst.labelings(); ++z) {
    for (std::size_t j = 0; j < m; ++j) {
      if (!(z >> j & 1U)) continue;
      pieces.push_back(SparseVec{inst.n, {static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(m + z)}, {0.5, 0.5}});
    }
  }
  Vec offsets(pieces.size(), 0.0);
  MaxAffine f(std::move(pieces), std::move(offsets), kappa, -(0.5 + eps));
  inst.witness_lipschitz = f.lipschitz(NormKind::infinity);
  inst.lemma_budget = inst.witness_lipschitz;
  inst.witness_fn = std::make_shared<const WitnessFunction>(std::move(f));
  return unit_domain ? rescale_domain(inst, std::sqrt(2.0)) : inst;
}

ShatterReport verify_shattering(const ShatterInstance& inst, std::size_t threads, std::size_t max_failures) {
  if (inst.m > kMaxVerifyPoints)
    fail(ErrorKind::capacity_exceeded, "verification enumerates 2^m labelings; m = " + std::to_string(inst.m) +
                                           " exceeds the cap of 14");
  require(inst.witness_fn != nullptr, "instance has no witness function");

  struct Cell {
    double worst = std::numeric_limits<double>::infinity();
    double offset = 0.0;
    std::size_t failures = 0;
    std::vector<ShatterFailure> listed;
  };
  const std::size_t count = inst.labelings();
  std::vector<Cell> cells(count);
  parallel_for(
      count,
      [&](std::size_t y) {
        Cell& c = cells[y];
        for (std::size_t i = 0; i < inst.m; ++i) {
          const double v = inst.evaluate(y, i);
          const double slack =
              (y >> i & 1U) ? v - (inst.threshold + inst.eps) : (inst.threshold - inst.eps) - v;
          c.worst = std::min(c.worst, slack);
          if (slack < -1e-12) {
            ++c.failures;
            if (c.listed.size() < max_failures) c.listed.push_back({y, i, v, slack});
          }
        }
        c.offset = inst.offset_norm(y);
      },
      threads);

  ShatterReport rep;
  rep.worst_slack = std::numeric_limits<double>::infinity();
  for (const Cell& c : cells) {
    rep.worst_slack = std::min(rep.worst_slack, c.worst);
    rep.max_offset_norm = std::max(rep.max_offset_norm, c.offset);
    rep.failure_count += c.failures;
    for (const auto& f : c.listed)
      if (rep.failures.size() < max_failures) rep.failures.push_back(f);
  }
  rep.margins_ok = rep.worst_slack >= -1e-12;
  rep.budgets_ok = rep.max_offset_norm <= inst.radius * (1.0 + 1e-12);
  rep.w0_norm_measured = spectral_norm(inst.w0);
  rep.w0_norm_ok = std::abs(rep.w0_norm_measured - inst.w0_norm) <= 1e-9;
  rep.pass = rep.margins_ok && rep.budgets_ok && rep.w0_norm_ok;
  return rep;
}

ShatterInstance rescale_domain(const ShatterInstance& inst, double b) {
  require(std::isfinite(b) && b > 0.0, "rescale factor b_x must be positive");
  ShatterInstance out = inst;
  for (Vec& x : out.points)
    for (double& v : x) v /= b;
  out.w0 *= b;
  out.scale *= b;
  out.radius *= b;
  out.w0_norm *= b;
  out.domain_radius /= b;
  for (auto& entry : out.overrides_) entry.second *= b;
  out.params["rescale"] = inst.params.count("rescale") ? inst.params.at("rescale") * b : b;
  out.refresh();
  return out;
}

nlohmann::json manifest(const ShatterInstance& inst) {
  nlohmann::json fn;
  if (const auto* a = std::get_if<AnchoredLipschitz>(inst.witness_fn.get())) {
    fn = {{"type", "anchored-lipschitz"},
          {"anchors", a->size()},
          {"L", a->lipschitz()},
          {"metric", std::string(to_string(a->metric()))}};
  } else if (const auto* f = std::get_if<MaxAffine>(inst.witness_fn.get())) {
    fn = {{"type", "max-affine"}, {"pieces", f->size()}, {"kappa", f->kappa()}, {"shift", f->shift()}};
  }
  fn["regenerate"] = "kind + params + seed";
  nlohmann::json j = {{"kind", std::string(to_string(inst.kind))},
                      {"m", inst.m},
                      {"eps", inst.eps},
                      {"d", inst.d},
                      {"n", inst.n},
                      {"B", inst.radius},
                      {"W0_norm", inst.w0_norm},
                      {"metric", std::string(to_string(inst.metric))},
                      {"threshold", inst.threshold},
                      {"domain_radius", inst.domain_radius},
                      {"kappa", inst.kappa},
                      {"seed", inst.seed},
                      {"lemma_budget", inst.lemma_budget},
                      {"witness_lipschitz", inst.witness_lipschitz},
                      {"witness_fn", fn},
                      {"params", inst.params}};
  if (inst.minimal_slope) j["minimal_slope"] = *inst.minimal_slope;
  if (inst.family_separation) {
    j["family_separation"] = *inst.family_separation;
    j["separation_below_target"] = inst.separation_below_target;
  }
  return j;
}

ShatterInstance instance_from_manifest(const nlohmann::json& j) {
  try {
    const InstanceKind kind = instance_kind_from_string(j.at("kind").get<std::string>());
    const auto params = j.at("params").get<std::map<std::string, double>>();
    auto param = [&](const char* key) {
      auto it = params.find(key);
      require(it != params.end(), std::string("manifest params lack '") + key + "'");
      return it->second;
    };
    const double rescale = params.count("rescale") ? params.at("rescale") : 1.0;
    ShatterInstance inst;
    switch (kind) {
      case InstanceKind::zero_init:
        inst = zero_init_instance(param("B"), param("L"), param("eps"), static_cast<std::size_t>(param("m_cap")),
                                  j.at("seed").get<std::uint64_t>(), static_cast<std::size_t>(param("n")),
                                  static_cast<std::size_t>(param("max_resamples")));
        break;
      case InstanceKind::nonzero_init:
        inst = nonzero_init_instance(static_cast<std::size_t>(param("m")), param("eps"), false);
        break;
      case InstanceKind::convex:
        inst = convex_instance(static_cast<std::size_t>(param("m")), param("eps"), param("kappa"), false);
        break;
    }
    return rescale == 1.0 ? inst : rescale_domain(inst, rescale);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::invalid_input, std::string("malformed instance manifest: ") + e.what());
  }
}

}  // namespace caplab
