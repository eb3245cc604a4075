#include "caplab/bounds.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "caplab/error.hpp"
#include "caplab/numerics.hpp"

namespace caplab {

namespace {

constexpr double kOverflow = 1e308;

void finish(BoundReport& r, double value, double log_value) {
  r.log_value = log_value;
  if (!std::isfinite(value) || value > kOverflow) {
    r.value = std::numeric_limits<double>::infinity();
    r.notes.push_back("value exceeds 1e308; see log_value");
  } else {
    r.value = value;
  }
}

void positive(double v, const char* name) {
  require(std::isfinite(v) && v > 0.0, std::string(name) + " must be positive");
}

void check_c(double c) { positive(c, "c"); }

double parse_real_string(const nlohmann::json& v) {
  if (v.is_number()) return v.get<double>();
  const std::string s = v.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  require(ec == std::errc() && ptr == s.data() + s.size(), "cannot parse real '" + s + "'");
  return out;
}

}  // namespace

BoundReport shatter_lower_bound(double B, double L, double eps, double c) {
  require(std::isfinite(B) && B >= 1.0, "B >= 1 is required");
  require(std::isfinite(L) && L >= 1.0, "L >= 1 is required");
  require(std::isfinite(eps) && eps > 0.0 && eps <= 1.0, "0 < eps <= 1 is required");
  check_c(c);
  const double ratio = L * L * B * B / (128.0 * eps * eps);
  require(ratio >= 20.0, "L^2 B^2 / (128 eps^2) >= 20 is violated (value " + format_real(ratio) + ")");
  BoundReport r{"shatter-lower", {{"B", B}, {"L", L}, {"eps", eps}, {"c", c}}, {}, c, 0, 0, {}};
  const double exponent = c * L * L * B * B / (eps * eps);
  finish(r, std::exp(exponent), exponent);
  return r;
}

BoundReport exp_class_sample_bound(double B, double L, double eps, double c) {
  require(std::isfinite(B) && B >= 1.0, "B >= 1 is required");
  require(std::isfinite(L) && L >= 1.0, "L >= 1 is required");
  require(std::isfinite(eps) && eps > 0.0 && eps <= 1.0, "0 < eps <= 1 is required");
  check_c(c);
  const double base = L * B / eps;
  require(base >= 1.0, "LB/eps >= 1 is required");
  BoundReport r{"exp-class", {{"B", B}, {"L", L}, {"eps", eps}, {"c", c}}, {}, c, 0, 0, {}};
  const double exponent = c * L * L * B * B / (eps * eps);
  finish(r, std::pow(base, exponent), exponent * std::log(base));
  return r;
}

BoundReport deep_general_bound(double B, const std::vector<double>& S, double eps, double c) {
  require(!S.empty(), "S_list must hold at least one spectral bound");
  for (double s : S) positive(s, "every S_j");
  require(std::isfinite(B) && B >= 1.0, "B >= 1 is required");
  require(std::isfinite(eps) && eps > 0.0 && B / eps >= 1.0, "B/eps >= 1 is required");
  double L = 1.0;
  for (double s : S) L *= s;
  BoundReport r = exp_class_sample_bound(B, L, eps, c);
  r.formula_id = "deep-general";
  r.inputs = {{"B", B}, {"eps", eps}, {"c", c}, {"L", L}};
  r.list_inputs = {{"S", S}};
  r.notes.push_back("L is the product of S_list");
  return r;
}

BoundReport sgd_sample_bound(double B, double L, double eps) {
  positive(B, "B");
  positive(L, "L");
  positive(eps, "eps");
  BoundReport r{"sgd-sample", {{"B", B}, {"L", L}, {"eps", eps}}, {}, 1.0, 0, 0, {}};
  const double v = B * B * L * L / (eps * eps);
  finish(r, v, std::log(v));
  return r;
}

BoundReport smooth_one_layer_bound(double b, double b_x, double B, double B0, double L, double mu, double eps,
                                   double c) {
  positive(b, "b");
  positive(b_x, "b_x");
  positive(B, "B");
  positive(L, "L");
  positive(eps, "eps");
  check_c(c);
  require(std::isfinite(B0) && B0 >= 0.0, "B0 must be nonnegative");
  require(std::isfinite(mu) && mu >= 0.0, "mu must be nonnegative");
  require(B * b_x >= 2.0, "B * b_x >= 2 is required");
  BoundReport r{"smooth-one-layer",
                {{"b", b}, {"b_x", b_x}, {"B", B}, {"B0", B0}, {"L", L}, {"mu", mu}, {"eps", eps}, {"c", c}},
                {},
                c,
                0,
                0,
                {"polylogarithmic factors in m, B, L, b_x are omitted"}};
  const double inner = 1.0 + b * b_x * (L * B0 + (mu + L) * B * (1.0 + B0 * b_x));
  const double v = c / (eps * eps) * inner * inner;
  finish(r, v, std::log(v));
  return r;
}

BoundReport deep_elementwise_bound(int k, double b, double b_x, double L, const std::vector<double>& S,
                                   const std::vector<double>& B_list, double eps, double m, double c) {
  require(k >= 2, "k >= 2 is required");
  const std::size_t layers = static_cast<std::size_t>(k - 1);
  require(S.size() == layers, "S_list must hold k-1 = " + std::to_string(layers) + " entries");
  require(B_list.size() == layers, "B_list must hold k-1 = " + std::to_string(layers) + " entries");
  positive(b, "b");
  positive(b_x, "b_x");
  positive(eps, "eps");
  positive(m, "m");
  check_c(c);
  require(std::isfinite(L) && L >= 1.0, "L >= 1 is required");
  for (double s : S) require(std::isfinite(s) && s >= 1.0, "every S_i >= 1 is required");
  for (double bi : B_list) positive(bi, "every B_i");

  double r_prev = b_x * std::pow(L, k - 2);
  for (std::size_t i = 0; i + 1 < layers; ++i) r_prev *= S[i];
  double prod_b = 1.0;
  for (double bi : B_list) prod_b *= bi;
  const double logm = std::log(m);
  const double inner = static_cast<double>(k) * std::pow(L, k - 1) * b * r_prev *
                       std::pow(logm, 1.5 * static_cast<double>(k - 1)) * prod_b;
  BoundReport r{"deep-elementwise",
                {{"k", static_cast<double>(k)}, {"b", b}, {"b_x", b_x}, {"L", L}, {"eps", eps}, {"m", m}, {"c", c},
                 {"R", r_prev}},
                {{"S", S}, {"B", B_list}},
                c,
                0,
                0,
                {}};
  const double v = c * inner * inner / (eps * eps);
  finish(r, v, std::log(v));
  return r;
}

const std::vector<std::string>& bound_formula_ids() {
  static const std::vector<std::string> ids = {"shatter-lower",    "exp-class",       "deep-general",
                                               "sgd-sample",       "smooth-one-layer", "deep-elementwise"};
  return ids;
}

BoundReport evaluate_bound(std::string_view id, const std::map<std::string, double>& in,
                           const std::map<std::string, std::vector<double>>& lists) {
  auto get = [&](const char* key) {
    auto it = in.find(key);
    require(it != in.end(), "formula " + std::string(id) + " needs input '" + key + "'");
    return it->second;
  };
  auto get_or = [&](const char* key, double fallback) {
    auto it = in.find(key);
    return it == in.end() ? fallback : it->second;
  };
  auto list = [&](const char* key) {
    auto it = lists.find(key);
    require(it != lists.end(), "formula " + std::string(id) + " needs list input '" + key + "'");
    return it->second;
  };
  const double c = get_or("c", 1.0);
  if (id == "shatter-lower") return shatter_lower_bound(get("B"), get("L"), get("eps"), c);
  if (id == "exp-class") return exp_class_sample_bound(get("B"), get("L"), get("eps"), c);
  if (id == "deep-general") return deep_general_bound(get("B"), list("S"), get("eps"), c);
  if (id == "sgd-sample") return sgd_sample_bound(get("B"), get("L"), get("eps"));
  if (id == "smooth-one-layer")
    return smooth_one_layer_bound(get("b"), get("b_x"), get("B"), get("B0"), get("L"), get("mu"), get("eps"), c);
  if (id == "deep-elementwise") {
    const double k = get("k");
    require(k == std::floor(k) && k >= 2.0 && k <= 1e6, "k must be an integer >= 2");
    return deep_elementwise_bound(static_cast<int>(k), get("b"), get("b_x"), get("L"), list("S"), list("B"),
                                  get("eps"), get("m"), c);
  }
  fail(ErrorKind::invalid_input, "unknown formula '" + std::string(id) + "'");
}

nlohmann::json to_json(const BoundReport& r) {
  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& [k, v] : r.inputs) inputs[k] = format_real(v);
  nlohmann::json lists = nlohmann::json::object();
  for (const auto& [k, v] : r.list_inputs) {
    nlohmann::json arr = nlohmann::json::array();
    for (double x : v) arr.push_back(format_real(x));
    lists[k] = arr;
  }
  return {{"formula_id", r.formula_id}, {"inputs", inputs},
          {"list_inputs", lists},       {"c", format_real(r.c)},
          {"value", format_real(r.value)}, {"log_value", format_real(r.log_value)},
          {"notes", r.notes}};
}

BoundReport bound_report_from_json(const nlohmann::json& j) {
  try {
    BoundReport r;
    r.formula_id = j.at("formula_id").get<std::string>();
    for (const auto& [k, v] : j.at("inputs").items()) r.inputs[k] = parse_real_string(v);
    for (const auto& [k, v] : j.at("list_inputs").items())
      for (const auto& x : v) r.list_inputs[k].push_back(parse_real_string(x));
    r.c = parse_real_string(j.at("c"));
    r.value = parse_real_string(j.at("value"));
    r.log_value = parse_real_string(j.at("log_value"));
    r.notes = j.at("notes").get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::invalid_input, std::string("malformed bound report JSON: ") + e.what());
  }
}

}  // namespace caplab
