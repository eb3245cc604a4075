#include <cmath>
#include <functional>
#include <limits>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "caplab/bounds.hpp"
#include "expect.hpp"
#include "generators.hpp"

namespace caplab {
namespace {

const std::vector<double> kGrid{0.1, 0.25, 0.5, 1.0, 2.0, 4.0};

TEST(ShatterLower, PreconditionNamesInequality) {
  try {
    shatter_lower_bound(1, 1, 1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_input);
    EXPECT_NE(std::string(e.what()).find("L^2 B^2 / (128 eps^2) >= 20"), std::string::npos);
  }
}

TEST(ShatterLower, ExponentArithmetic) {
  const BoundReport r = shatter_lower_bound(8, 8, 1, 1);
  EXPECT_EQ(r.log_value, 4096.0);
  EXPECT_EQ(r.value, std::numeric_limits<double>::infinity());
  EXPECT_FALSE(r.notes.empty());
  const BoundReport small = shatter_lower_bound(8, 8, 1, 0.01);
  EXPECT_DOUBLE_EQ(small.value, std::exp(40.96));
}

TEST(ShatterLower, DoublingRadiusQuadruplesExponent) {
  for (double B : {8.0, 16.0, 32.0}) EXPECT_EQ(shatter_lower_bound(2 * B, 8, 1).log_value, 4 * shatter_lower_bound(B, 8, 1).log_value);
}

TEST(ExpClass, HandValues) {
  EXPECT_EQ(exp_class_sample_bound(1, 1, 1, 1).value, 1.0);
  EXPECT_EQ(exp_class_sample_bound(2, 1, 1, 1).value, 16.0);
  EXPECT_CAPLAB_ERROR(exp_class_sample_bound(0.5, 1, 0.5), ErrorKind::invalid_input);
  EXPECT_CAPLAB_ERROR(exp_class_sample_bound(1, 1, 1.5), ErrorKind::invalid_input);
}

TEST(ExpClass, LogMatchesShatteringUpToLogFactor) {
  for (double B : {8.0, 16.0, 30.0})
    for (double L : {8.0, 12.0})
      for (double eps : {0.5, 1.0}) {
        const double up = exp_class_sample_bound(B, L, eps).log_value;
        const double down = shatter_lower_bound(B, L, eps).log_value;
        EXPECT_NEAR(up / down, std::log(L * B / eps), 1e-12 * up / down);
      }
}

TEST(DeepGeneral, ReducesToExponentialClassBound) {
  const BoundReport a = deep_general_bound(2, {1.0, 1.0, 1.0}, 0.5);
  const BoundReport b = exp_class_sample_bound(2, 1, 0.5);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.log_value, b.log_value);
  EXPECT_EQ(deep_general_bound(2, {1.7}, 0.5, 0.3).log_value, exp_class_sample_bound(2, 1.7, 0.5, 0.3).log_value);
  EXPECT_CAPLAB_ERROR(deep_general_bound(2, {}, 0.5), ErrorKind::invalid_input);
}

TEST(DeepGeneralProperty, ProductIdentityIsExact) {
  testing::Gen g(5);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> S;
    double prod = 1.0;
    for (std::size_t j = 0; j < 1 + g.index(6); ++j) {
      S.push_back(g.uniform(1.0, 2.0));
      prod *= S.back();
    }
    const double B = g.uniform(1.0, 4.0);
    const double eps = g.uniform(0.1, 1.0);
    const double c = g.uniform(0.1, 2.0);
    const BoundReport a = deep_general_bound(B, S, eps, c);
    const BoundReport b = exp_class_sample_bound(B, prod, eps, c);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.log_value, b.log_value);
  }
}

TEST(SgdSample, HandValues) {
  EXPECT_EQ(sgd_sample_bound(1, 1, 1).value, 1.0);
  EXPECT_EQ(sgd_sample_bound(1, 2, 0.5).value, 16.0);
}

TEST(SmoothOneLayer, HandValueAndNote) {
  const BoundReport r = smooth_one_layer_bound(1, 1, 2, 0, 1, 0, 1, 1);
  EXPECT_EQ(r.value, 9.0);
  EXPECT_FALSE(r.notes.empty());
  EXPECT_CAPLAB_ERROR(smooth_one_layer_bound(1, 1, 1.5, 0, 1, 0, 1), ErrorKind::invalid_input);
}

TEST(SmoothOneLayer, ZeroInitScaling) {
  for (double B : {1e3, 1e5}) {
    const double v = smooth_one_layer_bound(1.5, 2, B, 0, 1, 0.5, 0.2).value;
    const double x = (0.5 + 1) * 1.5 * 2 * B;
    const double scale = x * x / (0.2 * 0.2);
    EXPECT_NEAR(v / scale, 1.0 + 2.0 / x + 1.0 / (x * x), 1e-12);
  }
}

TEST(SmoothOneLayer, QuadraticInSpectralNormOfInitialization) {
  for (double B0 : {32.0, 64.0, 256.0, 4096.0}) {
    const double ratio = smooth_one_layer_bound(1, 1, 2, 2 * B0, 1, 0.5, 0.5).value /
                         smooth_one_layer_bound(1, 1, 2, B0, 1, 0.5, 0.5).value;
    EXPECT_NEAR(ratio, 4.0, 0.2) << B0;
  }
}

TEST(DeepElementwise, HandValue) {
  const BoundReport r = deep_elementwise_bound(2, 1, 1, 1, {1}, {1}, 1, std::exp(1.0), 1);
  EXPECT_DOUBLE_EQ(r.value, 4.0);
  EXPECT_EQ(r.inputs.at("R"), 1.0);
}

TEST(DeepElementwise, TwoLayerForm) {
  const double b = 1.3, bx = 0.7, L = 1.5, B1 = 2.0, eps = 0.4, m = 50;
  const double expect = std::pow(2 * L * b * bx * std::pow(std::log(m), 1.5) * B1, 2) / (eps * eps);
  EXPECT_NEAR(deep_elementwise_bound(2, b, bx, L, {3.0}, {B1}, eps, m).value, expect, 1e-12 * expect);
}

TEST(DeepElementwise, ListLengthsAndGuards) {
  EXPECT_CAPLAB_ERROR(deep_elementwise_bound(3, 1, 1, 1, {1}, {1, 1}, 1, 10), ErrorKind::invalid_input);
  EXPECT_CAPLAB_ERROR(deep_elementwise_bound(3, 1, 1, 1, {1, 1}, {1}, 1, 10), ErrorKind::invalid_input);
  EXPECT_CAPLAB_ERROR(deep_elementwise_bound(1, 1, 1, 1, {}, {}, 1, 10), ErrorKind::invalid_input);
  EXPECT_CAPLAB_ERROR(deep_elementwise_bound(2, 1, 1, 0.5, {1}, {1}, 1, 10), ErrorKind::invalid_input);
  EXPECT_CAPLAB_ERROR(deep_elementwise_bound(2, 1, 1, 1, {0.5}, {1}, 1, 10), ErrorKind::invalid_input);
}

TEST(DeepElementwiseProperty, MonotoneInLayerBudgetsAndDepth) {
  for (double m : {3.0, 10.0, 1000.0})
    for (int k = 2; k <= 5; ++k) {
      const std::vector<double> S(static_cast<std::size_t>(k - 1), 1.5);
      std::vector<double> Bl(static_cast<std::size_t>(k - 1), 1.0);
      const double base = deep_elementwise_bound(k, 1, 1, 1.2, S, Bl, 0.5, m).log_value;
      for (std::size_t i = 0; i < Bl.size(); ++i) {
        auto bigger = Bl;
        bigger[i] = 2.0;
        EXPECT_GE(deep_elementwise_bound(k, 1, 1, 1.2, S, bigger, 0.5, m).log_value, base);
      }
      auto S2 = S;
      S2.push_back(1.5);
      auto B2 = Bl;
      B2.push_back(1.0);
      EXPECT_GE(deep_elementwise_bound(k + 1, 1, 1, 1.2, S2, B2, 0.5, m).log_value, base);
    }
}

struct Formula {
  std::string id;
  std::vector<std::string> budgets;
  std::function<BoundReport(const std::map<std::string, double>&)> eval;
};

std::vector<Formula> formulas() {
  return {
      {"exp-class", {"B", "L"}, [](const auto& p) { return exp_class_sample_bound(p.at("B"), p.at("L"), p.at("eps")); }},
      {"shatter-lower", {"B", "L"},
       [](const auto& p) { return shatter_lower_bound(32 * p.at("B"), 32 * p.at("L"), p.at("eps")); }},
      {"deep-general", {"B", "L"},
       [](const auto& p) { return deep_general_bound(p.at("B"), {p.at("L"), p.at("L")}, p.at("eps")); }},
      {"sgd-sample", {"B", "L"}, [](const auto& p) { return sgd_sample_bound(p.at("B"), p.at("L"), p.at("eps")); }},
      {"smooth-one-layer", {"b", "B", "B0", "L", "mu"},
       [](const auto& p) {
         return smooth_one_layer_bound(p.at("b"), 2.0, p.at("B"), p.at("B0"), p.at("L"), p.at("mu"), p.at("eps"));
       }},
      {"deep-elementwise", {"b", "L", "B"},
       [](const auto& p) {
         return deep_elementwise_bound(3, p.at("b"), 1.0, p.at("L"), {1.0, 2.0}, {p.at("B"), 1.0}, p.at("eps"), 20);
       }},
  };
}

TEST(BoundsProperty, MonotoneOverGrid) {
  for (const Formula& f : formulas()) {
    std::map<std::string, double> p{{"B", 1.0}, {"L", 1.0}, {"b", 1.0}, {"B0", 1.0}, {"mu", 1.0}, {"eps", 0.5}};
    auto value = [&](const std::map<std::string, double>& q) -> std::optional<double> {
      try {
        return f.eval(q).log_value;
      } catch (const Error&) {
        return std::nullopt;
      }
    };
    std::size_t checked = 0;
    for (double base : kGrid) {
      for (auto& [name, v] : p) v = base;
      for (std::size_t e = 0; e + 1 < kGrid.size(); ++e) {
        auto lo = p, hi = p;
        lo["eps"] = kGrid[e];
        hi["eps"] = kGrid[e + 1];
        const auto a = value(lo), b = value(hi);
        if (a && b) {
          EXPECT_GE(*a, *b) << f.id;
          ++checked;
        }
      }
      for (const std::string& budget : f.budgets)
        for (std::size_t i = 0; i + 1 < kGrid.size(); ++i) {
          auto lo = p, hi = p;
          lo[budget] = kGrid[i];
          hi[budget] = kGrid[i + 1];
          const auto a = value(lo), b = value(hi);
          if (a && b) {
            EXPECT_LE(*a, *b) << f.id << " " << budget;
            ++checked;
          }
        }
    }
    EXPECT_GT(checked, 10u) << f.id;
  }
}

TEST(Bounds, ReportsCarryNoSizeInputs) {
  const std::vector<BoundReport> reports{
      shatter_lower_bound(64, 1, 1),         exp_class_sample_bound(2, 2, 0.5),
      deep_general_bound(2, {1.5, 2}, 0.5), sgd_sample_bound(1, 1, 1),
      smooth_one_layer_bound(1, 1, 2, 1, 1, 1, 1), deep_elementwise_bound(2, 1, 1, 1, {1}, {1}, 1, 3)};
  for (const BoundReport& r : reports) {
    EXPECT_EQ(r.inputs.count("n"), 0u) << r.formula_id;
    EXPECT_EQ(r.inputs.count("d"), 0u) << r.formula_id;
    EXPECT_GE(r.value, 1.0) << r.formula_id;
  }
}

TEST(Bounds, JsonRoundTripIsLossless) {
  const std::vector<BoundReport> reports{shatter_lower_bound(8, 8, 1), exp_class_sample_bound(2, 1.1, 0.3, 0.7),
                                         deep_general_bound(2, {1.1, 1.3}, 0.9),
                                         smooth_one_layer_bound(0.3, 7, 0.5, 1.0 / 3.0, 1, 0.1, 0.05),
                                         deep_elementwise_bound(3, 1, 1, 1.1, {1, 2}, {0.7, 0.9}, 0.2, 77)};
  for (const BoundReport& r : reports) {
    const BoundReport back = bound_report_from_json(nlohmann::json::parse(to_json(r).dump()));
    EXPECT_EQ(back, r) << r.formula_id;
  }
}

TEST(Bounds, EvaluateByIdentifier) {
  EXPECT_EQ(bound_formula_ids().size(), 6u);
  const BoundReport r = evaluate_bound("sgd-sample", {{"B", 1}, {"L", 2}, {"eps", 0.5}});
  EXPECT_EQ(r.value, 16.0);
  EXPECT_CAPLAB_ERROR(evaluate_bound("nope", {}), ErrorKind::invalid_input);
  EXPECT_CAPLAB_ERROR(evaluate_bound("exp-class", {{"B", 1}}), ErrorKind::invalid_input);
}

}  // namespace
}  // namespace caplab
