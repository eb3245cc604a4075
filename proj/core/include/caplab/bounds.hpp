#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace caplab {

/// Result of a closed-form sample-complexity evaluator. Values beyond 1e308
/// are reported as +infinity; log_value always carries the natural log.
struct BoundReport {
  std::string formula_id;
  std::map<std::string, double> inputs;
  std::map<std::string, std::vector<double>> list_inputs;
  double c = 1.0;
  double value = 0.0;
  double log_value = 0.0;
  std::vector<std::string> notes;

  friend bool operator==(const BoundReport&, const BoundReport&) = default;
};

/// exp(c·L²B²/eps²) points shattered; needs B, L ≥ 1, 0 < eps ≤ 1 and
/// L²B²/(128·eps²) ≥ 20.
BoundReport shatter_lower_bound(double B, double L, double eps, double c = 1.0);

/// (LB/eps)^(c·L²B²/eps²); needs L, B ≥ 1, 0 < eps ≤ 1, LB/eps ≥ 1.
BoundReport exp_class_sample_bound(double B, double L, double eps, double c = 1.0);

/// exp_class_sample_bound with L = ∏ S_j.
BoundReport deep_general_bound(double B, const std::vector<double>& S, double eps, double c = 1.0);

/// B²L²/eps².
BoundReport sgd_sample_bound(double B, double L, double eps);

/// (c/eps²)·(1 + b·b_x·(L·B0 + (mu+L)·B·(1 + B0·b_x)))², polylog factors
/// omitted; needs B·b_x ≥ 2.
BoundReport smooth_one_layer_bound(double b, double b_x, double B, double B0, double L, double mu, double eps,
                                   double c = 1.0);

/// c·(k·L^{k−1}·b·R_{k−2}·log^{3(k−1)/2}(m)·∏B_i)²/eps² with
/// R_{k−2} = b_x·L^{k−2}·∏_{i≤k−2} S_i; S and B_list hold k−1 entries.
BoundReport deep_elementwise_bound(int k, double b, double b_x, double L, const std::vector<double>& S,
                                   const std::vector<double>& B_list, double eps, double m, double c = 1.0);

/// Identifiers accepted by evaluate_bound.
const std::vector<std::string>& bound_formula_ids();

/// Evaluates a formula by id from named inputs (missing c defaults to 1).
BoundReport evaluate_bound(std::string_view formula_id, const std::map<std::string, double>& inputs,
                           const std::map<std::string, std::vector<double>>& lists = {});

/// Reals are written as "%.17g" strings so reports round-trip exactly.
nlohmann::json to_json(const BoundReport& r);
BoundReport bound_report_from_json(const nlohmann::json& j);

}  // namespace caplab
