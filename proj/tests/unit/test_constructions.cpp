#include <cmath>
#include <limits>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "caplab/constructions.hpp"
#include "expect.hpp"
#include "oracles.hpp"

namespace caplab {
namespace {

double exhaustive_separation(const std::vector<Vec>& images) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < images.size(); ++a)
    for (std::size_t b = a + 1; b < images.size(); ++b) {
      double s = 0.0;
      for (std::size_t k = 0; k < images[a].size(); ++k) s += (images[a][k] - images[b][k]) * (images[a][k] - images[b][k]);
      best = std::min(best, std::sqrt(s));
    }
  return best;
}

void expect_family_invariants(const SeparatedFamily& f) {
  for (const Vec& x : f.points) EXPECT_NEAR(norm2(x), 1.0, 1e-12);
  for (const Mat& w : f.matrices) {
    double s = 0.0;
    for (double v : w.entries()) s += v * v;
    EXPECT_LE(s, 2.0 * static_cast<double>(f.d));
  }
}

TEST(SeparatedFamily, InvariantsAndExactSeparation) {
  const SeparatedFamily f = random_separated_family(20, 4, 256, 7, 5);
  EXPECT_EQ(f.matrices.size(), 16u);
  EXPECT_EQ(f.images.size(), 64u);
  expect_family_invariants(f);
  std::vector<Vec> recomputed;
  for (std::size_t s = 0; s < 16; ++s)
    for (std::size_t i = 0; i < 4; ++i) recomputed.push_back(f.matrices[s].apply(f.points[i]));
  EXPECT_NEAR(f.separation, exhaustive_separation(recomputed), 1e-12);
  EXPECT_EQ(f.below_target, f.separation < 0.25);
}

TEST(SeparatedFamily, SinglePointFamily) {
  const SeparatedFamily f = random_separated_family(20, 1, 16, 2, 3);
  EXPECT_EQ(f.matrices.size(), 2u);
  expect_family_invariants(f);
  EXPECT_NEAR(f.separation, distance2(f.images[0], f.images[1]), 1e-12);
}

TEST(SeparatedFamily, ExhaustedResamplesAreFlaggedNotThrown) {
  const SeparatedFamily f = random_separated_family(20, 6, 1, 3, 0);
  EXPECT_EQ(f.attempts, 1u);
  EXPECT_TRUE(f.below_target);
  expect_family_invariants(f);
}

TEST(SeparatedFamily, Guards) {
  EXPECT_CAPLAB_ERROR(random_separated_family(19, 2, 8, 0, 1), ErrorKind::invalid_input);
  EXPECT_CAPLAB_ERROR(random_separated_family(20, 15, 8, 0, 1), ErrorKind::capacity_exceeded);
  EXPECT_CAPLAB_ERROR(random_separated_family(20, 2, 0, 0, 1), ErrorKind::invalid_input);
}

TEST(ZeroInit, WitnessesStayInsideRadius) {
  const ShatterInstance inst = zero_init_instance(4, 4, 0.25, 4, 1);
  EXPECT_EQ(inst.d, 32u);
  EXPECT_EQ(inst.w0_norm, 0.0);
  EXPECT_EQ(inst.threshold, 0.0);
  for (Labeling y = 0; y < inst.labelings(); ++y) EXPECT_LE(inst.offset_norm(y), inst.radius);
  EXPECT_GE(inst.witness_lipschitz, inst.lemma_budget);
  EXPECT_GE(inst.witness_lipschitz, *inst.minimal_slope);
}

TEST(ZeroInit, SinglePointBothLabelings) {
  const ShatterInstance inst = zero_init_instance(4, 4, 0.25, 1, 5);
  EXPECT_EQ(inst.m, 1u);
  EXPECT_EQ(inst.labelings(), 2u);
  EXPECT_TRUE(verify_shattering(inst).pass);
}

TEST(ZeroInit, EightPointsShatteredWhenSeparationMet) {
  const ShatterInstance inst = zero_init_instance(4, 4, 0.25, 8, 3);
  ASSERT_FALSE(inst.separation_below_target);
  const ShatterReport r = verify_shattering(inst);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(inst.labelings(), 256u);
}

TEST(ZeroInit, PreconditionNamesInequality) {
  try {
    zero_init_instance(1, 1, 0.5, 2, 0);
    FAIL() << "expected invalid-input";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_input);
    EXPECT_NE(std::string(e.what()).find("L^2 B^2 / (128 eps^2) >= 20"), std::string::npos) << e.what();
  }
  EXPECT_CAPLAB_ERROR(zero_init_instance(0.5, 100, 0.25, 2, 0), ErrorKind::invalid_input);
  EXPECT_CAPLAB_ERROR(zero_init_instance(4, 4, 1.5, 2, 0), ErrorKind::invalid_input);
  EXPECT_CAPLAB_ERROR(zero_init_instance(4, 4, 0.25, 15, 0), ErrorKind::capacity_exceeded);
}

TEST(NonzeroInit, TwoPointImages) {
  const ShatterInstance inst = nonzero_init_instance(2, 0.25, false);
  EXPECT_EQ(inst.points[0], (Vec{1.0, 0.0, 1.0}));
  EXPECT_EQ(inst.points[1], (Vec{0.0, 1.0, 1.0}));
  EXPECT_EQ(inst.n, 6u);
  for (Labeling y = 0; y < 4; ++y)
    for (std::size_t i = 0; i < 2; ++i) {
      Vec expect(inst.n, 0.0);
      expect[i] = 0.5;
      expect[2 + y] = 1.0;
      EXPECT_EQ(inst.witness(y).apply(inst.points[i]), expect);
      EXPECT_EQ(inst.image(y, i).to_dense(), expect);
    }
}

TEST(NonzeroInit, SinglePointShattered) {
  const ShatterReport r = verify_shattering(nonzero_init_instance(1, 0.3));
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.worst_slack, 0.0);
}

TEST(NonzeroInit, EncodedPointsAreTwoEpsApartInInfinityNorm) {
  const ShatterInstance inst = nonzero_init_instance(8, 0.25, false);
  std::vector<Vec> images;
  for (Labeling y = 0; y < inst.labelings(); ++y)
    for (std::size_t i = 0; i < inst.m; ++i) images.push_back(inst.image(y, i).to_dense());
  ASSERT_EQ(images.size(), 2048u);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < images.size(); ++a)
    for (std::size_t b = a + 1; b < images.size(); ++b) best = std::min(best, distance_inf(images[a], images[b]));
  EXPECT_EQ(best, 0.5);
}

TEST(NonzeroInit, ExactMarginsAndDeclaredNorms) {
  const ShatterInstance inst = nonzero_init_instance(8, 0.25);
  const ShatterReport r = verify_shattering(inst);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.worst_slack, 0.0);
  EXPECT_TRUE(r.w0_norm_ok);
  EXPECT_TRUE(r.budgets_ok);
  EXPECT_NEAR(inst.w0_norm, 2 * std::sqrt(2.0) * 0.25, 1e-15);
  EXPECT_NEAR(inst.radius, std::sqrt(2.0), 1e-15);
  for (const Vec& x : inst.points) EXPECT_LE(norm2(x), 1.0 + 1e-15);
}

TEST(NonzeroInit, Guards) {
  EXPECT_CAPLAB_ERROR(nonzero_init_instance(17, 0.25), ErrorKind::capacity_exceeded);
  EXPECT_CAPLAB_ERROR(nonzero_init_instance(3, 0.6), ErrorKind::invalid_input);
  EXPECT_CAPLAB_ERROR(nonzero_init_instance(3, 0.0), ErrorKind::invalid_input);
  EXPECT_CAPLAB_ERROR(verify_shattering(nonzero_init_instance(15, 0.25)), ErrorKind::capacity_exceeded);
}

TEST(Verify, ZeroedWitnessEntryIsReported) {
  ShatterInstance inst = nonzero_init_instance(3, 0.25, false);
  Mat w = inst.witness(0);
  w(inst.m + 0, inst.m) = 0.0;
  inst.override_witness(0, w);
  const ShatterReport r = verify_shattering(inst);
  EXPECT_FALSE(r.pass);
  EXPECT_FALSE(r.margins_ok);
  ASSERT_FALSE(r.failures.empty());
  EXPECT_EQ(r.failures.front().labeling, 0u);
  EXPECT_EQ(r.failures.front().point, 0u);
  EXPECT_LT(r.failures.front().slack, 0.0);
  EXPECT_EQ(r.failure_count, 3u);
}

TEST(Convex, CaseValues) {
  const double eps = 0.2;
  const ShatterInstance inst = convex_instance(5, eps);
  for (std::size_t i = 0; i < inst.m; ++i) {
    EXPECT_DOUBLE_EQ(inst.evaluate(Labeling{1} << i, i), eps);
    EXPECT_DOUBLE_EQ(inst.evaluate(0, i), -eps);
  }
  EXPECT_NEAR(inst.w0_norm, 4 * std::sqrt(2.0) * eps, 1e-15);
}

TEST(Convex, SixPointsShattered) {
  const ShatterReport r = verify_shattering(convex_instance(6, 0.2));
  EXPECT_TRUE(r.pass);
  EXPECT_GE(r.worst_slack, -1e-12);
}

TEST(Convex, MarginsAboveQuarterBreakExactness) {
  const ShatterReport r = verify_shattering(convex_instance(4, 0.3));
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.worst_slack, -0.1, 1e-12);
}

TEST(Convex, UnitConstantPieceBreaksNegativeCase) {
  const ShatterInstance inst = convex_instance(3, 0.2, 1.0);
  EXPECT_DOUBLE_EQ(inst.evaluate(0, 0), 0.5 - 0.2);
  EXPECT_FALSE(verify_shattering(inst).pass);
}

TEST(VerifyProperty, AgreesWithBruteForce) {
  std::vector<ShatterInstance> cases;
  for (std::size_t m = 1; m <= 6; ++m) {
    cases.push_back(nonzero_init_instance(m, 0.25));
    cases.push_back(nonzero_init_instance(m, 0.5, false));
    cases.push_back(convex_instance(m, 0.2));
    cases.push_back(convex_instance(m, 0.4));
  }
  cases.push_back(zero_init_instance(4, 4, 0.25, 3, 11));
  ShatterInstance broken = nonzero_init_instance(4, 0.25);
  Mat w = broken.witness(5);
  w(0, 0) = 0.0;
  broken.override_witness(5, w);
  cases.push_back(broken);
  for (const ShatterInstance& inst : cases) {
    SCOPED_TRACE(::testing::Message() << to_string(inst.kind) << " m=" << inst.m << " eps=" << inst.eps);
    const ShatterReport r = verify_shattering(inst, 2);
    const testing::BruteVerdict b = testing::brute_verify(inst);
    EXPECT_EQ(r.margins_ok, b.pass);
    EXPECT_EQ(r.failure_count, b.failures);
    EXPECT_NEAR(r.worst_slack, b.worst_slack, 1e-12);
  }
}

TEST(VerifyProperty, InstancesSatisfyDeclaredBudgets) {
  for (std::size_t m : {1u, 3u, 7u}) {
    for (const ShatterInstance& inst : {nonzero_init_instance(m, 0.1), convex_instance(m, 0.25)}) {
      for (Labeling y = 0; y < inst.labelings(); ++y) EXPECT_LE(inst.offset_norm(y), inst.radius * (1 + 1e-12));
      EXPECT_NEAR(norm(inst.w0, NormKind::spectral), inst.w0_norm, 1e-9);
    }
  }
}

TEST(Rescale, UnitFactorIsIdentity) {
  const ShatterInstance a = nonzero_init_instance(3, 0.25, false);
  const ShatterInstance b = rescale_domain(a, 1.0);
  EXPECT_EQ(a.points, b.points);
  EXPECT_EQ(a.w0, b.w0);
  EXPECT_EQ(a.radius, b.radius);
  for (Labeling y = 0; y < a.labelings(); ++y)
    for (std::size_t i = 0; i < a.m; ++i) EXPECT_EQ(a.evaluate(y, i), b.evaluate(y, i));
}

TEST(Rescale, BudgetsScaleAndOutputsArePreserved) {
  for (InstanceKind kind : {InstanceKind::nonzero_init, InstanceKind::convex}) {
    const ShatterInstance a =
        kind == InstanceKind::convex ? convex_instance(5, 0.2, 0.5, false) : nonzero_init_instance(5, 0.25, false);
    for (double b : {0.5, std::sqrt(2.0), 3.0}) {
      const ShatterInstance r = rescale_domain(a, b);
      EXPECT_NEAR(r.radius, b * a.radius, 1e-15);
      EXPECT_NEAR(r.w0_norm, b * a.w0_norm, 1e-15);
      EXPECT_NEAR(norm(r.w0, NormKind::spectral), b * a.w0_norm, 1e-9);
      for (Labeling y = 0; y < a.labelings(); ++y)
        for (std::size_t i = 0; i < a.m; ++i) EXPECT_NEAR(r.evaluate(y, i), a.evaluate(y, i), 1e-12);
      const ShatterReport ra = verify_shattering(a);
      const ShatterReport rr = verify_shattering(r);
      EXPECT_EQ(ra.pass, rr.pass);
      EXPECT_NEAR(ra.worst_slack, rr.worst_slack, 1e-9);
    }
  }
}

TEST(Rescale, NonzeroInitMovesOntoUnitBall) {
  const double eps = 0.25;
  const ShatterInstance raw = nonzero_init_instance(4, eps, false);
  EXPECT_NEAR(norm(raw.w0, NormKind::spectral), 2 * eps, 1e-12);
  for (const Vec& x : raw.points) EXPECT_NEAR(norm2(x), std::sqrt(2.0), 1e-15);
  const ShatterInstance unit = rescale_domain(raw, std::sqrt(2.0));
  EXPECT_NEAR(norm(unit.w0, NormKind::spectral), 2 * std::sqrt(2.0) * eps, 1e-12);
  for (const Vec& x : unit.points) EXPECT_NEAR(norm2(x), 1.0, 1e-15);
}

TEST(Rescale, RejectsNonPositiveFactor) {
  const ShatterInstance a = nonzero_init_instance(2, 0.25);
  EXPECT_CAPLAB_ERROR(rescale_domain(a, 0.0), ErrorKind::invalid_input);
  EXPECT_CAPLAB_ERROR(rescale_domain(a, -1.0), ErrorKind::invalid_input);
}

TEST(Determinism, ExplicitInstancesAreBitwiseReproducible) {
  for (int rep = 0; rep < 2; ++rep) {
    const ShatterInstance a = rep == 0 ? nonzero_init_instance(6, 0.2) : convex_instance(6, 0.2);
    const ShatterInstance b = rep == 0 ? nonzero_init_instance(6, 0.2) : convex_instance(6, 0.2);
    EXPECT_EQ(manifest(a).dump(), manifest(b).dump());
    EXPECT_EQ(a.points, b.points);
    EXPECT_EQ(a.w0, b.w0);
    for (Labeling y = 0; y < a.labelings(); ++y) EXPECT_EQ(a.witness(y), b.witness(y));
  }
}

TEST(Manifest, RegeneratesEquivalentInstances) {
  const std::vector<ShatterInstance> cases = {nonzero_init_instance(4, 0.25), convex_instance(4, 0.2, 0.5),
                                              zero_init_instance(4, 4, 0.25, 3, 9)};
  for (const ShatterInstance& inst : cases) {
    const nlohmann::json j = manifest(inst);
    for (const char* key : {"m", "eps", "d", "n", "B", "W0_norm", "metric", "witness_fn"})
      EXPECT_TRUE(j.contains(key)) << key;
    const ShatterInstance back = instance_from_manifest(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(back.kind, inst.kind);
    EXPECT_EQ(back.m, inst.m);
    EXPECT_EQ(back.radius, inst.radius);
    EXPECT_EQ(back.w0_norm, inst.w0_norm);
    EXPECT_EQ(back.points, inst.points);
    for (Labeling y = 0; y < inst.labelings(); ++y)
      for (std::size_t i = 0; i < inst.m; ++i) EXPECT_EQ(back.evaluate(y, i), inst.evaluate(y, i));
  }
}

}  // namespace
}  // namespace caplab
