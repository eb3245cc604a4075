#include "caplab/numerics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "caplab/error.hpp"
#include "caplab/rng.hpp"

namespace caplab {

std::string_view to_string(NormKind kind) noexcept {
  switch (kind) {
    case NormKind::frobenius:
      return "frobenius";
    case NormKind::spectral:
      return "spectral";
    case NormKind::euclidean:
      return "euclidean";
    case NormKind::infinity:
      return "infinity";
  }
  return "unknown";
}

NormKind norm_kind_from_string(std::string_view name) {
  if (name == "frobenius") return NormKind::frobenius;
  if (name == "spectral") return NormKind::spectral;
  if (name == "euclidean" || name == "euclidean-vector") return NormKind::euclidean;
  if (name == "infinity" || name == "inf") return NormKind::infinity;
  fail(ErrorKind::invalid_input, "unknown norm kind '" + std::string(name) + "'");
}

namespace {
void require_finite(const Mat& m) {
  require(!m.empty(), "matrix is empty");
  require(m.all_finite(), "matrix has non-finite entries");
}
}  // namespace

double norm(std::span<const double> v, NormKind kind) {
  for (double x : v) require(std::isfinite(x), "vector has non-finite entries");
  switch (kind) {
    case NormKind::frobenius:
    case NormKind::euclidean:
      return norm2(v);
    case NormKind::infinity: {
      double s = 0.0;
      for (double x : v) s = std::max(s, std::abs(x));
      return s;
    }
    case NormKind::spectral:
      return norm2(v);
  }
  return 0.0;
}

double norm(const Mat& m, NormKind kind) {
  require_finite(m);
  switch (kind) {
    case NormKind::frobenius:
      return norm2(m.entries());
    case NormKind::spectral:
      return spectral_norm(m);
    case NormKind::euclidean:
    case NormKind::infinity:
      require(m.cols() == 1, std::string(to_string(kind)) + " norm applies to vectors (one column)");
      return norm(std::span<const double>(m.entries()), kind);
  }
  return 0.0;
}

double spectral_norm(const Mat& m, const PowerIterationOptions& options) {
  require_finite(m);
  if (norm2(m.entries()) == 0.0) return 0.0;

  Rng rng(options.seed);
  std::normal_distribution<double> gauss;
  Vec v(m.cols());
  for (double& x : v) x = gauss(rng);
  double nv = norm2(v);
  for (double& x : v) x /= nv;

  double lambda = 0.0;
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    Vec u = m.apply(v);
    Vec w = m.apply_transposed(u);
    lambda = dot(u, u);
    double residual = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double r = w[i] - lambda * v[i];
      residual += r * r;
    }
    residual = std::sqrt(residual);
    const double nw = norm2(w);
    if (nw == 0.0) {
      // Start vector fell in the null space; restart from a fresh direction.
      for (double& x : v) x = gauss(rng);
      nv = norm2(v);
      for (double& x : v) x /= nv;
      continue;
    }
    if (residual <= options.tolerance * lambda) return std::sqrt(lambda);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = w[i] / nw;
  }
  fail(ErrorKind::numerical_failure,
       "power iteration did not converge in " + std::to_string(options.max_iterations) + " iterations");
}

Svd svd(const Mat& input, const SvdOptions& options) {
  require_finite(input);
  const bool flip = input.rows() < input.cols();
  const Mat a_mat = flip ? input.transposed() : input;
  const std::size_t rows = a_mat.rows();
  const std::size_t k = a_mat.cols();

  // Column-major working copies.
  std::vector<Vec> a(k, Vec(rows));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < k; ++c) a[c][r] = a_mat(r, c);
  std::vector<Vec> v(k, Vec(k, 0.0));
  for (std::size_t c = 0; c < k; ++c) v[c][c] = 1.0;

  auto rotate = [](Vec& x, Vec& y, double c, double s) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double xi = x[i];
      const double yi = y[i];
      x[i] = c * xi - s * yi;
      y[i] = s * xi + c * yi;
    }
  };

  bool converged = false;
  for (std::size_t sweep = 0; sweep < options.max_sweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < k; ++p) {
      for (std::size_t q = p + 1; q < k; ++q) {
        const double alpha = dot(a[p], a[p]);
        const double beta = dot(a[q], a[q]);
        const double gamma = dot(a[p], a[q]);
        if (gamma == 0.0 || std::abs(gamma) <= options.tolerance * std::sqrt(alpha * beta)) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate(a[p], a[q], c, s);
        rotate(v[p], v[q], c, s);
      }
    }
  }
  if (!converged)
    fail(ErrorKind::numerical_failure,
         "Jacobi SVD did not converge in " + std::to_string(options.max_sweeps) + " sweeps");

  std::vector<double> sigma(k);
  for (std::size_t c = 0; c < k; ++c) sigma[c] = norm2(a[c]);
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  Mat u(rows, k);
  Mat vm(k, k);
  std::vector<double> s_sorted(k);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t c = order[j];
    s_sorted[j] = sigma[c];
    for (std::size_t r = 0; r < rows; ++r) u(r, j) = sigma[c] > 0.0 ? a[c][r] / sigma[c] : 0.0;
    for (std::size_t r = 0; r < k; ++r) vm(r, j) = v[c][r];
  }
  if (flip) return Svd{std::move(vm), std::move(s_sorted), std::move(u)};
  return Svd{std::move(u), std::move(s_sorted), std::move(vm)};
}

LowRank svd_truncate(const Mat& w, double eps) {
  require(std::isfinite(eps) && eps > 0.0, "svd_truncate needs eps > 0");
  Svd d = svd(w);
  constexpr double kTie = 1e-12;
  LowRank out{Mat(w.rows(), w.cols()), 0, 0.0, d.singular_values};
  for (std::size_t j = 0; j < d.singular_values.size(); ++j) {
    const double s = d.singular_values[j];
    if (s > eps + kTie) {
      ++out.rank;
      for (std::size_t r = 0; r < w.rows(); ++r) {
        const double us = d.u(r, j) * s;
        if (us == 0.0) continue;
        auto row = out.matrix.row(r);
        for (std::size_t c = 0; c < w.cols(); ++c) row[c] += us * d.v(c, j);
      }
    } else {
      out.dropped_max = std::max(out.dropped_max, s);
    }
  }
  return out;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string to_csv(const Mat& m) {
  std::string out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_real(m(r, c));
    }
    out += '\n';
  }
  return out;
}

namespace {
std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_real(std::string_view field) {
  field = trim(field);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  require(ec == std::errc() && ptr == field.data() + field.size(),
          "cannot parse '" + std::string(field) + "' as a real number");
  return v;
}
}  // namespace

Mat mat_from_csv(std::string_view text) {
  std::vector<double> entries;
  std::size_t rows = 0;
  std::size_t cols = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty()) continue;
    std::size_t count = 0;
    while (true) {
      const std::size_t comma = line.find(',');
      entries.push_back(parse_real(line.substr(0, comma)));
      ++count;
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (rows == 0) cols = count;
    require(count == cols, "CSV row " + std::to_string(rows + 1) + " has " + std::to_string(count) +
                               " fields, expected " + std::to_string(cols));
    ++rows;
  }
  require(rows > 0, "CSV holds no rows");
  Mat m(rows, cols, std::move(entries));
  require(m.all_finite(), "CSV holds non-finite entries");
  return m;
}

nlohmann::json mat_to_json(const Mat& m) {
  return nlohmann::json{{"rows", m.rows()}, {"cols", m.cols()}, {"entries", m.entries()}};
}

Mat mat_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("rows") && j.contains("cols") && j.contains("entries"),
          "matrix JSON needs rows, cols and entries");
  try {
    Mat m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
          j.at("entries").get<std::vector<double>>());
    require(m.all_finite(), "matrix JSON holds non-finite entries");
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::invalid_input, std::string("malformed matrix JSON: ") + e.what());
  }
}

}  // namespace caplab
