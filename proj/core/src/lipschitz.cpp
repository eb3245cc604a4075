#include "caplab/lipschitz.hpp"

#include <algorithm>
#include <cstring>
#include <cmath>
#include <random>
#include <string>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "caplab/error.hpp"
#include "caplab/parallel.hpp"

namespace caplab {

namespace {

using TopList = std::vector<std::pair<std::uint32_t, double>>;

/// Anchors with at most this many nonzeros use the sorted-magnitude shortcut
/// for infinity-metric distances.
constexpr std::size_t kShortcutNnz = 16;

void require_metric(NormKind metric) {
  require(metric == NormKind::euclidean || metric == NormKind::infinity,
          "metric must be euclidean or infinity, got " + std::string(to_string(metric)));
}

std::uint64_t hash_row(SparseRowView r) {
  std::uint64_t h = 0x9ae16a3b2f90404fULL ^ r.index.size();
  for (std::size_t t = 0; t < r.index.size(); ++t) {
    std::uint64_t bits;
    double v = r.value[t];
    static_assert(sizeof bits == sizeof v);
    std::memcpy(&bits, &v, sizeof bits);
    h = mix64(h ^ r.index[t]);
    h = mix64(h ^ bits);
  }
  return h;
}

bool same_row(SparseRowView a, SparseRowView b) {
  return std::equal(a.index.begin(), a.index.end(), b.index.begin(), b.index.end()) &&
         std::equal(a.value.begin(), a.value.end(), b.value.begin(), b.value.end());
}

SparseVec view_to_vec(std::size_t dim, SparseRowView r) {
  SparseVec s;
  s.dim = dim;
  s.index.assign(r.index.begin(), r.index.end());
  s.value.assign(r.value.begin(), r.value.end());
  return s;
}

double sparse_distance(NormKind metric, std::span<const std::uint32_t> ai, std::span<const double> av,
                       std::span<const std::uint32_t> bi, std::span<const double> bv) {
  double acc = 0.0;
  std::size_t i = 0, j = 0;
  auto take = [&](double d) {
    if (metric == NormKind::infinity)
      acc = std::max(acc, std::abs(d));
    else
      acc += d * d;
  };
  while (i < ai.size() || j < bi.size()) {
    if (j == bi.size() || (i < ai.size() && ai[i] < bi[j])) {
      take(av[i++]);
    } else if (i == ai.size() || bi[j] < ai[i]) {
      take(bv[j++]);
    } else {
      take(av[i++] - bv[j++]);
    }
  }
  return metric == NormKind::infinity ? acc : std::sqrt(acc);
}

}  // namespace

double budget(std::span<const double> values, double alpha) {
  require(!values.empty(), "budget needs at least one value");
  require(std::isfinite(alpha) && alpha > 0.0, "budget needs alpha > 0");
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return (*hi - *lo) / alpha;
}

double metric_distance(NormKind metric, std::span<const double> a, std::span<const double> b) {
  if (metric == NormKind::frobenius) metric = NormKind::euclidean;
  require_metric(metric);
  return metric == NormKind::infinity ? distance_inf(a, b) : distance2(a, b);
}

double metric_distance(NormKind metric, const SparseVec& a, const SparseVec& b) {
  if (metric == NormKind::frobenius) metric = NormKind::euclidean;
  require_metric(metric);
  require(a.dim == b.dim, "distance: dimension mismatch");
  return sparse_distance(metric, a.index, a.value, b.index, b.value);
}

double dual_norm(NormKind metric, std::span<const double> direction) {
  if (metric == NormKind::infinity) {
    double s = 0.0;
    for (double v : direction) s += std::abs(v);
    return s;
  }
  return norm2(direction);
}

double minimal_feasible_slope(const SparseRows& anchors, std::span<const double> values, NormKind metric) {
  require_metric(metric);
  require(anchors.size() == values.size(), "anchor and value counts differ");
  const std::size_t n = anchors.size();
  std::vector<double> per_row(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    auto a = anchors.row(i);
    double best = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dv = std::abs(values[i] - values[j]);
      if (dv == 0.0) continue;
      auto b = anchors.row(j);
      const double d = sparse_distance(metric, a.index, a.value, b.index, b.value);
      best = std::max(best, d > 0.0 ? dv / d : std::numeric_limits<double>::infinity());
    }
    per_row[i] = best;
  });
  double best = 0.0;
  for (double v : per_row) best = std::max(best, v);
  return best;
}

double min_anchor_separation(const SparseRows& anchors, NormKind metric) {
  require_metric(metric);
  const std::size_t n = anchors.size();
  std::vector<double> per_row(n, std::numeric_limits<double>::infinity());
  parallel_for(n, [&](std::size_t i) {
    auto a = anchors.row(i);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = i + 1; j < n; ++j) {
      auto b = anchors.row(j);
      best = std::min(best, sparse_distance(metric, a.index, a.value, b.index, b.value));
    }
    per_row[i] = best;
  });
  double best = std::numeric_limits<double>::infinity();
  for (double v : per_row) best = std::min(best, v);
  return best;
}

AnchoredLipschitz::AnchoredLipschitz(SparseRows anchors, Vec values, double lipschitz, NormKind metric)
    : anchors_(std::move(anchors)), values_(std::move(values)), lipschitz_(lipschitz), metric_(metric) {
  require_metric(metric_);
  require(!values_.empty(), "McShane extension needs at least one anchor");
  require(anchors_.size() == values_.size(), "anchor and value counts differ");
  require(std::isfinite(lipschitz_) && lipschitz_ >= 0.0, "Lipschitz budget must be finite and nonnegative");
  for (double v : values_) require(std::isfinite(v), "anchor values must be finite");
  min_value_ = *std::min_element(values_.begin(), values_.end());

  const std::size_t dim = anchors_.dim();
  if (dim > 0 && anchors_.nnz() * 8 <= anchors_.size() * dim) {
    postings_.assign(dim, {});
    for (std::size_t j = 0; j < anchors_.size(); ++j)
      for (std::uint32_t k : anchors_.row(j).index) postings_[k].push_back(static_cast<std::uint32_t>(j));
  }
}

double AnchoredLipschitz::distance(std::size_t j, const QueryScratch& q, std::span<const std::pair<std::uint32_t, double>> top) const {
  auto a = anchors_.row(j);
  if (metric_ == NormKind::infinity && !top.empty()) {
    double acc = 0.0;
    for (std::size_t t = 0; t < a.index.size(); ++t) acc = std::max(acc, std::abs(q[a.index[t]] - a.value[t]));
    for (const auto& [k, mag] : top) {
      if (!std::binary_search(a.index.begin(), a.index.end(), k)) {
        acc = std::max(acc, mag);
        break;
      }
    }
    return acc;
  }
  const SparseVec& x = q.query();
  return sparse_distance(metric_, a.index, a.value, x.index, x.value);
}

double AnchoredLipschitz::scan(const QueryScratch& q, std::span<const std::pair<std::uint32_t, double>> top, double best) const {
  for (std::size_t j = 0; j < values_.size(); ++j) {
    if (values_[j] >= best) continue;
    best = std::min(best, values_[j] + lipschitz_ * distance(j, q, top));
  }
  return best;
}

double AnchoredLipschitz::evaluate(const SparseVec& x) const {
  require(x.dim == dim(), "McShane evaluation: dimension mismatch");
  if (lipschitz_ == 0.0) return min_value_;
  QueryScratch q(x);

  TopList top;
  if (metric_ == NormKind::infinity && anchors_.max_row_nnz() < kShortcutNnz) {
    for (std::size_t t = 0; t < x.nnz(); ++t) top.emplace_back(x.index[t], std::abs(x.value[t]));
    const std::size_t keep = std::min(top.size(), anchors_.max_row_nnz() + 1);
    std::partial_sort(top.begin(), top.begin() + static_cast<std::ptrdiff_t>(keep), top.end(),
                      [](const auto& a, const auto& b) { return a.second > b.second || (a.second == b.second && a.first < b.first); });
    top.resize(keep);
    // An empty list would select the merge path; a zero sentinel keeps the shortcut.
    if (top.empty()) top.emplace_back(0, 0.0);
  }

  if (postings_.empty() || x.nnz() == 0) return scan(q, top, std::numeric_limits<double>::infinity());

  std::size_t lead = 0;
  for (std::size_t t = 1; t < x.nnz(); ++t)
    if (std::abs(x.value[t]) > std::abs(x.value[lead])) lead = t;
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t j : postings_[x.index[lead]])
    if (values_[j] < best) best = std::min(best, values_[j] + lipschitz_ * distance(j, q, top));
  if (!std::isfinite(best)) return scan(q, top, best);

  // Any anchor beating `best` lies within r of x, so it must be nonzero on
  // every coordinate where |x_k| > r.
  const double r = (best - min_value_) / lipschitz_;
  const std::vector<std::uint32_t>* shortest = nullptr;
  for (std::size_t t = 0; t < x.nnz(); ++t) {
    if (std::abs(x.value[t]) <= r) continue;
    const auto& list = postings_[x.index[t]];
    if (shortest == nullptr || list.size() < shortest->size()) shortest = &list;
  }
  if (shortest == nullptr) return scan(q, top, best);
  for (std::uint32_t j : *shortest)
    if (values_[j] < best) best = std::min(best, values_[j] + lipschitz_ * distance(j, q, top));
  return best;
}

double AnchoredLipschitz::evaluate(std::span<const double> x) const {
  require(x.size() == dim(), "McShane evaluation: dimension mismatch");
  return evaluate(SparseVec::from_dense(x));
}

double AnchoredLipschitz::evaluate_scan(const SparseVec& x) const {
  require(x.dim == dim(), "McShane evaluation: dimension mismatch");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < values_.size(); ++j) {
    auto a = anchors_.row(j);
    best = std::min(best, values_[j] + lipschitz_ * sparse_distance(metric_, a.index, a.value, x.index, x.value));
  }
  return best;
}

AnchoredLipschitz mcshane_extend(SparseRows anchors, Vec values, double lipschitz, NormKind metric) {
  for (std::size_t j = 0; j < anchors.size(); ++j)
    for (double v : anchors.row(j).value) require(std::isfinite(v), "anchor coordinates must be finite");

  std::unordered_map<std::uint64_t, std::vector<std::size_t>> seen;
  for (std::size_t j = 0; j < anchors.size(); ++j) {
    auto& bucket = seen[hash_row(anchors.row(j))];
    for (std::size_t other : bucket)
      require(!same_row(anchors.row(other), anchors.row(j)),
              "anchors " + std::to_string(other) + " and " + std::to_string(j) + " coincide");
    bucket.push_back(j);
  }

  AnchoredLipschitz f(std::move(anchors), std::move(values), lipschitz, metric);
  const std::size_t n = f.size();
  std::vector<char> ok(n, 1);
  parallel_for(n, [&](std::size_t i) {
    const double p = f.values()[i];
    const double got = f.evaluate(view_to_vec(f.dim(), f.anchors().row(i)));
    ok[i] = got >= p - 1e-12 * std::max(1.0, std::abs(p));
  });
  if (std::find(ok.begin(), ok.end(), 0) != ok.end())
    throw BudgetTooSmall(lipschitz, minimal_feasible_slope(f.anchors(), f.values(), metric));
  return f;
}

AnchoredLipschitz mcshane_extend(const std::vector<Vec>& anchors, Vec values, double lipschitz, NormKind metric) {
  require(!anchors.empty(), "McShane extension needs at least one anchor");
  SparseRows rows(anchors.front().size());
  for (const Vec& a : anchors) {
    require(a.size() == rows.dim(), "anchors differ in dimension");
    rows.push_back(SparseVec::from_dense(a));
  }
  return mcshane_extend(std::move(rows), std::move(values), lipschitz, metric);
}

MaxAffine::MaxAffine(SparseRows directions, Vec offsets, double kappa, double shift)
    : directions_(std::move(directions)), offsets_(std::move(offsets)), kappa_(kappa), shift_(shift) {
  require(directions_.size() == offsets_.size(), "piece and offset counts differ");
  require(std::isfinite(kappa_) && std::isfinite(shift_), "kappa and shift must be finite");
  for (double o : offsets_) require(std::isfinite(o), "piece offsets must be finite");
  for (std::size_t p = 0; p < directions_.size(); ++p)
    for (double v : directions_.row(p).value) require(std::isfinite(v), "piece directions must be finite");
}

std::size_t MaxAffine::active_piece(const SparseVec& x) const {
  require(x.dim == dim(), "max-affine evaluation: dimension mismatch");
  QueryScratch q(x);
  std::size_t arg = size();
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < size(); ++p) {
    auto d = directions_.row(p);
    double s = offsets_[p];
    for (std::size_t t = 0; t < d.index.size(); ++t) s += d.value[t] * q[d.index[t]];
    if (s > best) {
      best = s;
      arg = p;
    }
  }
  return kappa_ > best ? size() : arg;
}

double MaxAffine::evaluate(const SparseVec& x) const {
  require(x.dim == dim(), "max-affine evaluation: dimension mismatch");
  QueryScratch q(x);
  double best = kappa_;
  for (std::size_t p = 0; p < size(); ++p) {
    auto d = directions_.row(p);
    double s = offsets_[p];
    for (std::size_t t = 0; t < d.index.size(); ++t) s += d.value[t] * q[d.index[t]];
    best = std::max(best, s);
  }
  return best + shift_;
}

double MaxAffine::evaluate(std::span<const double> x) const {
  require(x.size() == dim(), "max-affine evaluation: dimension mismatch");
  return evaluate(SparseVec::from_dense(x));
}

SparseVec MaxAffine::subgradient(const SparseVec& x) const {
  const std::size_t p = active_piece(x);
  if (p == size()) return SparseVec{dim(), {}, {}};
  return directions_.row_vec(p);
}

double MaxAffine::lipschitz(NormKind metric) const {
  double best = 0.0;
  for (std::size_t p = 0; p < size(); ++p) best = std::max(best, dual_norm(metric, directions_.row(p).value));
  return best;
}

LipschitzMeasurement empirical_lipschitz(const PointFunction& f, const PairSampler& sampler, NormKind metric,
                                         std::size_t pairs, std::uint64_t seed, std::size_t threads) {
  require(pairs >= 1, "empirical_lipschitz needs at least one pair");
  if (metric == NormKind::frobenius) metric = NormKind::euclidean;
  require_metric(metric);
  std::vector<double> slopes(pairs, -1.0);
  parallel_for(
      pairs,
      [&](std::size_t k) {
        Rng rng = make_rng(seed, {k});
        auto [u, v] = sampler(rng);
        const double d = metric_distance(metric, u, v);
        if (d == 0.0) return;
        slopes[k] = std::abs(f(u) - f(v)) / d;
      },
      threads);
  LipschitzMeasurement out;
  for (double s : slopes) {
    if (s < 0.0) {
      ++out.skipped;
      continue;
    }
    ++out.pairs;
    out.slope = std::max(out.slope, s);
  }
  return out;
}

PairSampler uniform_box_sampler(std::size_t dim, double lo, double hi) {
  require(dim >= 1 && lo < hi, "uniform box sampler needs dim >= 1 and lo < hi");
  return [dim, lo, hi](Rng& rng) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vec a(dim), b(dim);
    for (double& x : a) x = u(rng);
    for (double& x : b) x = u(rng);
    return std::make_pair(std::move(a), std::move(b));
  };
}

PairSampler anchored_pair_sampler(const AnchoredLipschitz& f, double radius) {
  require(std::isfinite(radius) && radius > 0.0, "perturbation radius must be positive");
  const std::size_t dim = f.dim();
  Vec lo(dim, 0.0), hi(dim, 0.0);
  for (std::size_t j = 0; j < f.size(); ++j) {
    auto a = f.anchors().row(j);
    for (std::size_t t = 0; t < a.index.size(); ++t) {
      lo[a.index[t]] = std::min(lo[a.index[t]], a.value[t]);
      hi[a.index[t]] = std::max(hi[a.index[t]], a.value[t]);
    }
  }
  for (std::size_t k = 0; k < dim; ++k) {
    lo[k] -= radius;
    hi[k] += radius;
  }
  const AnchoredLipschitz* fp = &f;
  return [fp, radius, lo = std::move(lo), hi = std::move(hi)](Rng& rng) {
    const std::size_t dim = lo.size();
    Vec a(dim), b(dim);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) < 0.5) {
      std::uniform_int_distribution<std::size_t> pick(0, fp->size() - 1);
      const Vec base = fp->anchors().row_vec(pick(rng)).to_dense();
      std::uniform_real_distribution<double> jitter(-radius, radius);
      for (std::size_t k = 0; k < dim; ++k) {
        a[k] = base[k] + jitter(rng);
        b[k] = base[k] + jitter(rng);
      }
    } else {
      for (std::size_t k = 0; k < dim; ++k) {
        a[k] = lo[k] + (hi[k] - lo[k]) * unit(rng);
        b[k] = lo[k] + (hi[k] - lo[k]) * unit(rng);
      }
    }
    return std::make_pair(std::move(a), std::move(b));
  };
}

namespace {

nlohmann::json rows_to_json(const SparseRows& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t j = 0; j < rows.size(); ++j) {
    auto r = rows.row(j);
    out.push_back({{"index", std::vector<std::uint32_t>(r.index.begin(), r.index.end())},
                   {"value", std::vector<double>(r.value.begin(), r.value.end())}});
  }
  return out;
}

SparseRows rows_from_json(std::size_t dim, const nlohmann::json& j) {
  require(j.is_array(), "expected an array of sparse rows");
  SparseRows rows(dim);
  for (const auto& r : j) {
    auto idx = r.at("index").get<std::vector<std::uint32_t>>();
    auto val = r.at("value").get<std::vector<double>>();
    require(idx.size() == val.size(), "sparse row index/value lengths differ");
    std::vector<std::pair<std::uint32_t, double>> pairs;
    for (std::size_t t = 0; t < idx.size(); ++t) pairs.emplace_back(idx[t], val[t]);
    rows.push_back(SparseVec::from_pairs(dim, std::move(pairs)));
  }
  return rows;
}

template <class Fn>
auto parse_guard(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::invalid_input, std::string("malformed ") + what + " JSON: " + e.what());
  }
}

}  // namespace

nlohmann::json to_json(const AnchoredLipschitz& f, std::size_t max_anchors) {
  if (f.size() > max_anchors)
    fail(ErrorKind::capacity_exceeded, "refusing to serialize " + std::to_string(f.size()) +
                                           " anchors (limit " + std::to_string(max_anchors) + ")");
  return {{"type", "anchored-lipschitz"},
          {"dim", f.dim()},
          {"metric", std::string(to_string(f.metric()))},
          {"L", f.lipschitz()},
          {"anchors", rows_to_json(f.anchors())},
          {"values", f.values()}};
}

AnchoredLipschitz anchored_from_json(const nlohmann::json& j) {
  return parse_guard("anchored-lipschitz", [&] {
    const std::size_t dim = j.at("dim").get<std::size_t>();
    return mcshane_extend(rows_from_json(dim, j.at("anchors")), j.at("values").get<Vec>(), j.at("L").get<double>(),
                          norm_kind_from_string(j.at("metric").get<std::string>()));
  });
}

nlohmann::json to_json(const MaxAffine& f, std::size_t max_pieces) {
  if (f.size() > max_pieces)
    fail(ErrorKind::capacity_exceeded, "refusing to serialize " + std::to_string(f.size()) +
                                           " pieces (limit " + std::to_string(max_pieces) + ")");
  return {{"type", "max-affine"},
          {"dim", f.dim()},
          {"kappa", f.kappa()},
          {"shift", f.shift()},
          {"pieces", rows_to_json(f.directions())},
          {"offsets", f.offsets()}};
}

MaxAffine max_affine_from_json(const nlohmann::json& j) {
  return parse_guard("max-affine", [&] {
    const std::size_t dim = j.at("dim").get<std::size_t>();
    return MaxAffine(rows_from_json(dim, j.at("pieces")), j.at("offsets").get<Vec>(), j.at("kappa").get<double>(),
                     j.at("shift").get<double>());
  });
}

}  // namespace caplab
