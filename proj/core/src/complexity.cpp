#include "caplab/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_map>

#include "caplab/error.hpp"
#include "caplab/parallel.hpp"
#include "caplab/rng.hpp"

namespace caplab {

std::string_view to_string(SupStrategy s) noexcept {
  switch (s) {
    case SupStrategy::enumerate_witnesses:
      return "enumerate-witnesses";
    case SupStrategy::linear_closed_form:
      return "linear-closed-form";
    case SupStrategy::projected_ascent:
      return "projected-ascent";
  }
  return "unknown";
}

SupStrategy sup_strategy_from_string(std::string_view name) {
  if (name == "enumerate-witnesses" || name == "enumerate") return SupStrategy::enumerate_witnesses;
  if (name == "linear-closed-form" || name == "closed-form") return SupStrategy::linear_closed_form;
  if (name == "projected-ascent") return SupStrategy::projected_ascent;
  fail(ErrorKind::invalid_input, "unknown sup strategy '" + std::string(name) + "'");
}

namespace {

constexpr std::size_t kMaxEnumerated = std::size_t{1} << 20;
constexpr std::size_t kMaxMemoPoints = 20;

/// Signs for m > 64 come from several independent words.
bool sign_bit(std::uint64_t seed, std::size_t draw, std::size_t i) {
  const std::uint64_t word = mix64(derive_seed(seed, {draw, i / 64}));
  return (word >> (i % 64)) & 1U;
}

RademacherEstimate summarize(const std::vector<double>& values, std::size_t m, SupStrategy s, bool lower) {
  RademacherEstimate e;
  e.draws = values.size();
  e.m = m;
  e.strategy = s;
  e.is_lower_estimate = lower;
  double sum = 0.0;
  for (double v : values) sum += v;
  e.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - e.mean) * (v - e.mean);
    e.std_error = std::sqrt(ss / static_cast<double>(values.size() - 1)) / std::sqrt(static_cast<double>(values.size()));
  }
  return e;
}

std::size_t class_points(const FunctionClass& cls) {
  return std::visit(
      [](const auto& c) -> std::size_t {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, FiniteClass>)
          return c.table.empty() ? 0 : c.table.front().size();
        else
          return c.points.size();
      },
      cls);
}

double finite_sup(const FiniteClass& cls, const std::vector<double>& sigma) {
  double best = -std::numeric_limits<double>::infinity();
  for (const Vec& row : cls.table) {
    double s = 0.0;
    for (std::size_t i = 0; i < sigma.size(); ++i) s += sigma[i] * row[i];
    best = std::max(best, s);
  }
  return best / static_cast<double>(sigma.size());
}

std::vector<double> signs_of(std::uint64_t seed, std::size_t draw, std::size_t m) {
  std::vector<double> s(m);
  for (std::size_t i = 0; i < m; ++i) s[i] = sign_bit(seed, draw, i) ? 1.0 : -1.0;
  return s;
}

std::vector<double> enumerate_draws(const FiniteClass& cls, std::size_t draws, std::uint64_t seed, std::size_t threads) {
  require(!cls.table.empty(), "finite class is empty");
  if (cls.table.size() > kMaxEnumerated)
    fail(ErrorKind::capacity_exceeded, "enumeration over " + std::to_string(cls.table.size()) +
                                           " functions exceeds the cap of 2^20");
  const std::size_t m = cls.table.front().size();
  require(m >= 1, "finite class needs at least one point");
  for (const Vec& row : cls.table) require(row.size() == m, "finite class rows differ in length");

  std::vector<double> values(draws);
  if (m <= kMaxMemoPoints) {
    // Two passes: collect distinct sign patterns, then one sup per pattern.
    std::vector<std::uint64_t> pattern(draws);
    for (std::size_t k = 0; k < draws; ++k) pattern[k] = rademacher_signs(seed, k, m);
    std::vector<std::uint64_t> distinct = pattern;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<double> sup(distinct.size());
    parallel_for(
        distinct.size(),
        [&](std::size_t p) {
          std::vector<double> sigma(m);
          for (std::size_t i = 0; i < m; ++i) sigma[i] = (distinct[p] >> i & 1U) ? 1.0 : -1.0;
          sup[p] = finite_sup(cls, sigma);
        },
        threads);
    for (std::size_t k = 0; k < draws; ++k) {
      auto it = std::lower_bound(distinct.begin(), distinct.end(), pattern[k]);
      values[k] = sup[static_cast<std::size_t>(it - distinct.begin())];
    }
    return values;
  }
  parallel_for(
      draws, [&](std::size_t k) { values[k] = finite_sup(cls, signs_of(seed, k, m)); }, threads);
  return values;
}

std::vector<double> closed_form_draws(const std::vector<Vec>& points, double radius, std::size_t draws,
                                      std::uint64_t seed, std::size_t threads) {
  require(!points.empty(), "linear class needs at least one point");
  require(std::isfinite(radius) && radius >= 0.0, "radius must be nonnegative");
  const std::size_t dim = points.front().size();
  for (const Vec& x : points) require(x.size() == dim, "points differ in dimension");
  const std::size_t m = points.size();
  std::vector<double> values(draws);
  parallel_for(
      draws,
      [&](std::size_t k) {
        Vec acc(dim, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
          const double s = sign_bit(seed, k, i) ? 1.0 : -1.0;
          for (std::size_t t = 0; t < dim; ++t) acc[t] += s * points[i][t];
        }
        values[k] = radius * norm2(acc) / static_cast<double>(m);
      },
      threads);
  return values;
}

void project_ball(Mat& w, const Mat& center, double radius) {
  double dist = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double d = w.entries()[k] - center.entries()[k];
    dist += d * d;
  }
  dist = std::sqrt(dist);
  if (dist <= radius) return;
  const double s = radius / dist;
  for (std::size_t k = 0; k < w.size(); ++k)
    w.entries()[k] = center.entries()[k] + s * (w.entries()[k] - center.entries()[k]);
}

std::vector<double> ascent_draws(const MatrixBallClass& cls, std::size_t draws, std::uint64_t seed,
                                 std::size_t threads, const AscentOptions& opt) {
  require(!cls.points.empty(), "matrix class needs at least one point");
  require(cls.f && cls.gradient, "matrix class needs f and its gradient");
  require(!cls.w0.empty(), "matrix class needs W0");
  for (const Vec& x : cls.points) require(x.size() == cls.w0.cols(), "point dimension differs from W0 columns");
  require(opt.restarts >= 1 && opt.steps >= 1, "ascent needs at least one restart and one step");
  const std::size_t m = cls.points.size();
  const double inv_m = 1.0 / static_cast<double>(m);
  std::vector<double> values(draws);
  parallel_for(
      draws,
      [&](std::size_t k) {
        const std::vector<double> sigma = signs_of(seed, k, m);
        auto objective = [&](const Mat& w) {
          double s = 0.0;
          for (std::size_t i = 0; i < m; ++i) s += sigma[i] * cls.f(w.apply(cls.points[i]));
          return s * inv_m;
        };
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < opt.restarts; ++r) {
          Rng rng = make_rng(seed, {k, r, 0xa5c3});
          std::normal_distribution<double> gauss;
          Mat w = cls.w0;
          if (r > 0) {
            Mat dir(cls.w0.rows(), cls.w0.cols());
            for (double& v : dir.entries()) v = gauss(rng);
            const double nd = norm2(dir.entries());
            std::uniform_real_distribution<double> u(0.0, 1.0);
            const double len = cls.radius * u(rng);
            if (nd > 0.0)
              for (std::size_t t = 0; t < w.size(); ++t) w.entries()[t] += len * dir.entries()[t] / nd;
          }
          best = std::max(best, objective(w));
          for (std::size_t t = 1; t <= opt.steps; ++t) {
            Mat g(w.rows(), w.cols());
            for (std::size_t i = 0; i < m; ++i) {
              const Vec grad = cls.gradient(w.apply(cls.points[i]));
              for (std::size_t a = 0; a < g.rows(); ++a) {
                const double ga = sigma[i] * grad[a] * inv_m;
                if (ga == 0.0) continue;
                auto row = g.row(a);
                for (std::size_t b = 0; b < g.cols(); ++b) row[b] += ga * cls.points[i][b];
              }
            }
            const double step = opt.step_scale * cls.radius / std::sqrt(static_cast<double>(t));
            const double gn = norm2(g.entries());
            if (gn == 0.0) break;
            for (std::size_t q = 0; q < w.size(); ++q) w.entries()[q] += step * g.entries()[q] / gn;
            project_ball(w, cls.w0, cls.radius);
            best = std::max(best, objective(w));
          }
        }
        values[k] = best;
      },
      threads);
  return values;
}

MatrixBallClass as_matrix_class(const LinearBallClass& c) {
  require(!c.points.empty(), "linear class needs at least one point");
  MatrixBallClass out;
  out.points = c.points;
  out.w0 = Mat(1, c.points.front().size());
  out.radius = c.radius;
  out.f = [](const Vec& z) { return z[0]; };
  out.gradient = [](const Vec&) { return Vec{1.0}; };
  return out;
}

}  // namespace

std::uint64_t rademacher_signs(std::uint64_t seed, std::size_t draw, std::size_t m) {
  require(m <= 64, "sign bitmask holds at most 64 points");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < m; ++i)
    if (sign_bit(seed, draw, i)) bits |= std::uint64_t{1} << i;
  return bits;
}

RademacherEstimate rademacher_mc(const FunctionClass& cls, std::size_t draws, std::uint64_t seed,
                                 std::optional<SupStrategy> strategy, std::size_t threads, const AscentOptions& ascent) {
  require(draws >= 1, "draws must be at least 1");
  SupStrategy s = strategy.value_or(std::holds_alternative<FiniteClass>(cls)       ? SupStrategy::enumerate_witnesses
                                    : std::holds_alternative<LinearBallClass>(cls) ? SupStrategy::linear_closed_form
                                                                                   : SupStrategy::projected_ascent);
  const std::size_t m = class_points(cls);
  switch (s) {
    case SupStrategy::enumerate_witnesses: {
      const auto* c = std::get_if<FiniteClass>(&cls);
      require(c != nullptr, "enumerate-witnesses needs a finite class");
      return summarize(enumerate_draws(*c, draws, seed, threads), m, s, false);
    }
    case SupStrategy::linear_closed_form: {
      const auto* c = std::get_if<LinearBallClass>(&cls);
      require(c != nullptr, "linear-closed-form needs a linear ball class");
      return summarize(closed_form_draws(c->points, c->radius, draws, seed, threads), m, s, false);
    }
    case SupStrategy::projected_ascent: {
      if (const auto* c = std::get_if<MatrixBallClass>(&cls))
        return summarize(ascent_draws(*c, draws, seed, threads, ascent), m, s, true);
      const auto* lin = std::get_if<LinearBallClass>(&cls);
      require(lin != nullptr, "projected-ascent needs a matrix or linear ball class");
      return summarize(ascent_draws(as_matrix_class(*lin), draws, seed, threads, ascent), m, s, true);
    }
  }
  fail(ErrorKind::invalid_input, "unknown strategy");
}

RademacherEstimate rademacher_linear_closed_form(const std::vector<Vec>& points, double radius, std::size_t draws,
                                                 std::uint64_t seed, std::size_t threads) {
  require(draws >= 1, "draws must be at least 1");
  return summarize(closed_form_draws(points, radius, draws, seed, threads), points.size(),
                   SupStrategy::linear_closed_form, false);
}

FiniteClass finite_class_from_instance(const ShatterInstance& inst, std::size_t threads) {
  const std::size_t count = inst.labelings();
  if (count > kMaxEnumerated)
    fail(ErrorKind::capacity_exceeded, "instance has more than 2^20 witnesses");
  FiniteClass cls;
  cls.table.assign(count, Vec(inst.m));
  parallel_for(
      count,
      [&](std::size_t y) {
        for (std::size_t i = 0; i < inst.m; ++i) cls.table[y][i] = inst.evaluate(y, i);
      },
      threads);
  return cls;
}

double empirical_distance(const Vec& a, const Vec& b, std::size_t m) {
  require(a.size() == b.size(), "function rows differ in length");
  require(m >= 1, "m must be positive");
  double s = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    const double d = a[t] - b[t];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(m));
}

CoverResult empirical_cover(const std::vector<Vec>& table, double eps, std::size_t m) {
  require(!table.empty(), "function table is empty");
  require(std::isfinite(eps) && eps >= 0.0, "eps must be nonnegative");
  if (m == 0) m = table.front().size();
  for (const Vec& row : table) {
    require(row.size() == table.front().size(), "function rows differ in length");
    for (double v : row) require(std::isfinite(v), "function table holds non-finite values");
  }
  CoverResult out;
  std::vector<double> nearest(table.size(), std::numeric_limits<double>::infinity());
  std::size_t next = 0;
  while (true) {
    out.centers.push_back(next);
    for (std::size_t f = 0; f < table.size(); ++f)
      nearest[f] = std::min(nearest[f], empirical_distance(table[f], table[next], m));
    std::size_t far = 0;
    for (std::size_t f = 1; f < table.size(); ++f)
      if (nearest[f] > nearest[far]) far = f;
    out.radius = nearest[far];
    if (nearest[far] <= eps) break;
    next = far;
  }
  return out;
}

std::string_view to_string(CoverKind k) noexcept {
  switch (k) {
    case CoverKind::scalar_linear:
      return "scalar-linear";
    case CoverKind::matrix_linear:
      return "matrix-linear";
    case CoverKind::constants:
      return "constants";
    case CoverKind::lipschitz_composition:
      return "lipschitz-composition";
    case CoverKind::contraction:
      return "contraction";
  }
  return "unknown";
}

CoverKind cover_kind_from_string(std::string_view name) {
  for (CoverKind k : {CoverKind::scalar_linear, CoverKind::matrix_linear, CoverKind::constants,
                      CoverKind::lipschitz_composition, CoverKind::contraction})
    if (to_string(k) == name) return k;
  fail(ErrorKind::invalid_input, "unknown cover formula '" + std::string(name) + "'");
}

CoverBound cover_bound(const CoverFormula& f) {
  std::vector<std::string> required;
  std::map<std::string, double> optional;
  switch (f.kind) {
    case CoverKind::scalar_linear:
      required = {"B", "eps"};
      optional = {{"b_x", 1.0}, {"c", 1.0}};
      break;
    case CoverKind::matrix_linear:
      required = {"B", "eps", "r"};
      optional = {{"b_x", 1.0}, {"c", 1.0}};
      break;
    case CoverKind::constants:
      required = {"B", "eps"};
      break;
    case CoverKind::lipschitz_composition:
      required = {"B", "L", "eps", "r"};
      optional = {{"inner", 0.0}};
      break;
    case CoverKind::contraction:
      required = {"B", "L", "eps", "k"};
      optional = {{"b_x", 1.0}, {"c", 1.0}};
      break;
  }
  std::map<std::string, double> p = optional;
  for (const auto& [key, value] : f.params) {
    const bool known = std::find(required.begin(), required.end(), key) != required.end() || optional.count(key);
    require(known, "parameter '" + key + "' does not apply to the " + std::string(to_string(f.kind)) + " formula");
    p[key] = value;
  }
  for (const std::string& key : required)
    require(f.params.count(key) != 0, "missing parameter '" + key + "' for the " + std::string(to_string(f.kind)) +
                                          " formula");
  for (const auto& [key, value] : p) {
    require(std::isfinite(value), "parameter '" + key + "' must be finite");
    if (key == "inner")
      require(value >= 0.0, "parameter 'inner' must be nonnegative");
    else
      require(value > 0.0, "parameter '" + key + "' must be positive");
  }

  CoverBound out;
  switch (f.kind) {
    case CoverKind::scalar_linear: {
      const double s = p["c"] * p["B"] * p["b_x"] / p["eps"];
      out.log_cover = s * s;
      break;
    }
    case CoverKind::matrix_linear: {
      const double r = p["r"];
      out.log_cover = p["c"] * r * r * p["B"] * p["B"] * p["b_x"] * p["b_x"] / (p["eps"] * p["eps"]);
      break;
    }
    case CoverKind::constants: {
      require(p["B"] >= 2.0, "constants cover needs B >= 2");
      out.log_cover = std::log(std::ceil(p["B"] / p["eps"]));
      out.envelope = 2.0 * std::log2(p["B"]) / p["eps"];
      break;
    }
    case CoverKind::lipschitz_composition: {
      const double grid = std::pow(1.0 + 8.0 * p["B"] * p["L"] / p["eps"], p["r"]);
      out.log_cover = std::max(0.0, grid * std::log(8.0 * p["B"] / p["eps"])) + p["inner"];
      break;
    }
    case CoverKind::contraction: {
      const double k = p["k"];
      const double s = p["c"] * p["B"] * p["b_x"] * std::sqrt(k) * p["L"] / p["eps"];
      out.log_cover = k * s * s;
      break;
    }
  }
  return out;
}

}  // namespace caplab
