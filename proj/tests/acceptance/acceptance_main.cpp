#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "caplab/bounds.hpp"
#include "caplab/complexity.hpp"
#include "caplab/constructions.hpp"
#include "caplab/error.hpp"
#include "caplab/learner.hpp"
#include "caplab/lipschitz.hpp"
#include "caplab/numerics.hpp"
#include "generators.hpp"
#include "losses.hpp"
#include "oracles.hpp"

namespace {

using namespace caplab;
using caplab::testing::frob;
using caplab::testing::Gen;
using caplab::testing::PiecewiseLinear;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) detail = what;
    pass = false;
  }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

Outcome nonzero_init_construction() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  const ShatterInstance inst = nonzero_init_instance(10, 0.25);
  const ShatterReport r = verify_shattering(inst);
  const double t = seconds_since(start);
  o.check(r.pass, "verification failed");
  o.check(inst.labelings() == 1024, "expected 1024 labelings");
  o.check(r.worst_slack == 0.0, "worst_slack " + fmt(r.worst_slack));
  o.check(std::abs(inst.w0_norm - 2 * std::sqrt(2.0) * 0.25) <= 1e-9, "W0 norm " + fmt(inst.w0_norm));
  o.check(r.w0_norm_ok, "measured W0 norm differs from declared");
  o.check(t < 10.0, "runtime " + fmt(t) + " s");
  return o;
}

Outcome convex_construction() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  const ShatterInstance inst = convex_instance(8, 0.2, 0.5);
  const ShatterReport r = verify_shattering(inst);
  o.check(r.pass, "verification failed");
  o.check(inst.labelings() == 256, "expected 256 labelings");
  const auto* f = std::get_if<MaxAffine>(inst.witness_fn.get());
  o.check(f != nullptr, "witness is not max-affine");
  if (f == nullptr) return o;
  Gen g(2);
  const std::size_t dim = f->dim();
  double worst_mid = 0.0, worst_lip = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const Vec a = g.vec(dim, -2.0, 2.0), b = g.vec(dim, -2.0, 2.0);
    Vec mid(dim);
    for (std::size_t j = 0; j < dim; ++j) mid[j] = 0.5 * (a[j] + b[j]);
    worst_mid = std::min(worst_mid, 0.5 * (f->evaluate(a) + f->evaluate(b)) - f->evaluate(mid));
  }
  for (int k = 0; k < 10000; ++k) {
    const Vec a = g.vec(dim, -2.0, 2.0);
    Vec b = a;
    for (double& v : b) v += g.uniform(-0.5, 0.5);
    double dist = 0.0;
    for (std::size_t j = 0; j < dim; ++j) dist = std::max(dist, std::abs(a[j] - b[j]));
    const double gap = std::abs(f->evaluate(a) - f->evaluate(b)) - dist;
    worst_lip = std::max(worst_lip, gap);
  }
  const double t = seconds_since(start);
  o.check(worst_mid >= -1e-12, "midpoint slack " + fmt(worst_mid));
  o.check(worst_lip <= 1e-9, "Lipschitz excess " + fmt(worst_lip));
  o.check(t < 30.0, "runtime " + fmt(t) + " s");
  return o;
}

Outcome non_decay_signature() {
  Outcome o;
  for (std::size_t m : {2u, 4u, 8u, 12u}) {
    const FiniteClass cls = finite_class_from_instance(nonzero_init_instance(m, 0.25));
    const RademacherEstimate e = rademacher_mc(cls, 100000, 11 + m);
    o.check(std::abs(e.mean - 0.25) <= 3 * e.std_error,
            "m=" + std::to_string(m) + " mean " + fmt(e.mean) + " stderr " + fmt(e.std_error));
  }
  return o;
}

Outcome decay_signature() {
  Outcome o;
  std::vector<Vec> ortho(4, Vec(4, 0.0));
  for (std::size_t i = 0; i < 4; ++i) ortho[i][i] = 1.0;
  const RademacherEstimate exact = rademacher_linear_closed_form(ortho, 1.0, 10000, 1);
  o.check(exact.mean == 0.5, "orthonormal mean " + fmt(exact.mean));
  o.check(exact.std_error == 0.0, "orthonormal stderr " + fmt(exact.std_error));
  Gen g(44);
  for (std::size_t m : {4u, 16u}) {
    std::vector<Vec> small, large;
    for (std::size_t i = 0; i < m; ++i) small.push_back(g.unit(10));
    for (std::size_t i = 0; i < 4 * m; ++i) large.push_back(g.unit(10));
    const double ratio = rademacher_linear_closed_form(small, 1.0, 100000, 1).mean /
                         rademacher_linear_closed_form(large, 1.0, 100000, 2).mean;
    o.check(ratio >= 1.6 && ratio <= 2.5, "m=" + std::to_string(m) + " ratio " + fmt(ratio));
  }
  return o;
}

std::vector<std::uint64_t> seeds(std::size_t n) {
  std::vector<std::uint64_t> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = i;
  return s;
}

Outcome sgd_guarantee() {
  Outcome o;
  Gen g(100);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t r = 1 + g.index(3), c = 1 + g.index(3);
    PiecewiseLinear loss;
    double L = 0.0;
    for (std::size_t p = 0; p < 1 + g.index(5); ++p) {
      loss.slopes.push_back(g.mat(r, c));
      loss.offsets.push_back(g.uniform(-1.0, 1.0));
      L = std::max(L, frob(loss.slopes.back()));
    }
    SgdConfig cfg;
    cfg.w0 = g.mat(r, c);
    cfg.radius = g.uniform(0.2, 3.0);
    cfg.steps = 1 + g.index(400);
    cfg.lipschitz = L;
    cfg.seed = static_cast<std::uint64_t>(rep);
    Mat comparator = project_frobenius_ball(cfg.w0 + g.mat(r, c), cfg.w0, cfg.radius * g.uniform(0.0, 1.0));
    const SgdResult res = sgd_run(cfg, loss, &comparator);
    o.check(res.regret_lhs <= res.regret_rhs + 1e-9, "regret violated on run " + std::to_string(rep));
    for (const TraceRecord& t : res.trace)
      o.check(t.distance_to_w0 <= cfg.radius * (1 + 1e-12), "left the ball on run " + std::to_string(rep));
  }
  const ExcessRiskTable t = excess_risk_experiment(convex_instance(6, 0.2), {100, 1000, 10000}, seeds(20), 0.05);
  for (const ExcessSummary& s : t.summary)
    o.check(s.mean_excess <= s.bound + 0.05, "T=" + std::to_string(s.steps) + " excess " + fmt(s.mean_excess));

  const ShatterInstance inst = convex_instance(6, 0.2);
  SgdConfig cfg;
  cfg.w0 = inst.w0;
  cfg.radius = inst.radius;
  cfg.steps = 1000;
  cfg.lipschitz = instance_loss_lipschitz(inst);
  const SgdResult res = sgd_run(cfg, instance_oracle(inst));
  o.check(res.max_distance <= inst.radius * (1 + 1e-12), "instance run left the ball");
  return o;
}

Outcome learnable_without_uniform_convergence() {
  Outcome o;
  const double eps = 0.2;
  const ExcessRiskTable t = excess_risk_experiment(convex_instance(6, eps), {100, 1000, 10000}, seeds(20), 0.05);
  for (const ExcessRow& row : t.rows) o.check(row.excess < eps, "excess " + fmt(row.excess));
  const std::vector<GapRow> gaps = uc_gap_experiment(convex_instance(16, eps), 8, seeds(20));
  for (const GapRow& r : gaps) o.check(r.gap >= eps - 1e-12, "seed " + std::to_string(r.seed) + " gap " + fmt(r.gap));
  return o;
}

Outcome truncation() {
  Outcome o;
  Gen g(3);
  for (int rep = 0; rep < 100; ++rep) {
    const double B = std::vector<double>{1.0, 2.0, 4.0}[static_cast<std::size_t>(rep % 3)];
    const double eps = g.uniform(0.2, 1.0);
    const Mat w = g.mat_with_frobenius(4 + g.index(8), 4 + g.index(8), B * g.uniform(0.3, 1.0));
    const LowRank r = svd_truncate(w, eps);
    o.check(static_cast<double>(r.rank) <= std::floor(B * B / (eps * eps)), "rank " + std::to_string(r.rank));
    o.check(caplab::testing::oracle_spectral_norm(w - r.matrix) <= eps * (1 + 1e-12), "error above eps");
    o.check(norm(r.matrix - caplab::testing::oracle_truncate(w, eps), NormKind::frobenius) <= 1e-9,
            "differs from oracle truncation");
    const double power = spectral_norm(w);
    o.check(std::abs(power - caplab::testing::oracle_spectral_norm(w)) <= 1e-8, "power iteration " + fmt(power));
  }
  return o;
}

Outcome covering() {
  Outcome o;
  Gen g(2024);
  for (std::size_t r = 1; r <= 3; ++r)
    for (int rep = 0; rep < 4; ++rep) {
      const double B = g.uniform(0.2, 2.0), eps = g.uniform(0.25, 1.0);
      const BallNet net = ball_net(r, B, eps);
      o.check(static_cast<double>(net.centers.size()) <= std::pow(1 + 2 * B / eps, static_cast<double>(r)),
              "ball_net too large at r=" + std::to_string(r));
    }
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<Vec> table;
    for (int f = 0; f < 10; ++f) table.push_back(g.vec(4, -1.0, 1.0));
    const double eps = g.uniform(0.2, 0.8);
    const CoverResult c = empirical_cover(table, eps);
    for (const Vec& f : table) {
      double best = INFINITY;
      for (std::size_t idx : c.centers) best = std::min(best, empirical_distance(f, table[idx], 4));
      o.check(best <= eps, "uncovered function");
    }
    o.check(c.centers.size() >= caplab::testing::optimal_cover_size(table, eps), "greedy below optimum");
  }
  const std::vector<double> grid{0.1, 0.25, 0.5, 1.0, 2.0, 4.0};
  for (CoverKind k : {CoverKind::scalar_linear, CoverKind::matrix_linear, CoverKind::lipschitz_composition,
                      CoverKind::contraction})
    for (double B : grid)
      for (std::size_t e = 0; e + 1 < grid.size(); ++e) {
        auto params = [&](double b, double eps) {
          std::map<std::string, double> p{{"B", b}, {"eps", eps}};
          if (k == CoverKind::matrix_linear || k == CoverKind::lipschitz_composition) p["r"] = 2;
          if (k == CoverKind::lipschitz_composition || k == CoverKind::contraction) p["L"] = 1.5;
          if (k == CoverKind::contraction) p["k"] = 2;
          return cover_bound({k, p}).log_cover;
        };
        o.check(params(B, grid[e]) >= params(B, grid[e + 1]), "not monotone in eps for " + std::string(to_string(k)));
        o.check(params(B, grid[e]) <= params(2 * B, grid[e]), "not monotone in B for " + std::string(to_string(k)));
      }
  return o;
}

Outcome bound_evaluators() {
  Outcome o;
  o.check(exp_class_sample_bound(1, 1, 1, 1).value == 1.0, "exp-class unit example");
  o.check(exp_class_sample_bound(2, 1, 1, 1).value == 16.0, "exp-class B=2 example");
  o.check(sgd_sample_bound(1, 1, 1).value == 1.0, "sgd unit example");
  o.check(sgd_sample_bound(1, 2, 0.5).value == 16.0, "sgd example");
  o.check(smooth_one_layer_bound(1, 1, 2, 0, 1, 0, 1, 1).value == 9.0, "smooth one-layer example");
  const double deep = deep_elementwise_bound(2, 1, 1, 1, {1}, {1}, 1, std::exp(1.0), 1).value;
  o.check(std::abs(deep - 4.0) <= 4 * std::numeric_limits<double>::epsilon() * 4.0, "deep elementwise " + fmt(deep));
  const BoundReport sh = shatter_lower_bound(8, 8, 1, 1);
  o.check(sh.log_value == 4096.0 && std::isinf(sh.value), "shatter exponent " + fmt(sh.log_value));
  bool rejected = false;
  try {
    shatter_lower_bound(1, 1, 1, 1);
  } catch (const Error&) {
    rejected = true;
  }
  o.check(rejected, "shatter precondition not enforced");
  Gen g(5);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> S;
    double prod = 1.0;
    for (std::size_t j = 0; j < 1 + g.index(6); ++j) {
      S.push_back(g.uniform(1.0, 2.0));
      prod *= S.back();
    }
    const double B = g.uniform(1.0, 4.0), eps = g.uniform(0.1, 1.0);
    o.check(deep_general_bound(B, S, eps).log_value == exp_class_sample_bound(B, prod, eps).log_value,
            "deep-general identity");
  }
  for (double B0 : {32.0, 64.0, 128.0, 1024.0}) {
    const double ratio = smooth_one_layer_bound(1, 1, 2, 2 * B0, 1, 0.5, 0.5).value /
                         smooth_one_layer_bound(1, 1, 2, B0, 1, 0.5, 0.5).value;
    o.check(std::abs(ratio - 4.0) <= 0.2, "B0 ratio " + fmt(ratio));
  }
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string without(std::string text, const std::string& needle) {
  for (std::size_t p; (p = text.find(needle)) != std::string::npos;) text.erase(p, needle.size());
  return text;
}

int run_cli(const std::string& threads, const std::string& args, const fs::path& out) {
  const std::string cmd = "CAPLAB_THREADS=" + threads + " '" + std::string(CAPLAB_CLI_PATH) + "' " + args +
                          " --out '" + out.string() + "' >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome cli_reproducibility() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / "caplab_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  o.check(run_cli("1", "construct --kind convex --m 6 --eps 0.2 --seed 4", dir / "inst") == 0, "construct failed");
  const std::string inst = "'" + (dir / "inst" / "manifest.json").string() + "'";
  std::ofstream(dir / "params.json") << R"([{"name":"a","B":2,"L":1.5,"eps":0.5,"b":1,"b_x":1,"B0":1,"mu":0.5,)"
                                     << R"("k":3,"m":10,"S":[1,2],"B_list":[1,1]}])";
  const std::vector<std::string> commands{
      "construct --kind zero-init --m 4 --eps 0.25 --B 4 --L 4 --n 32 --seed 5",
      "construct --kind nonzero-init --m 5 --eps 0.25",
      "verify --instance " + inst,
      "rademacher --instance " + inst + " --draws 3000 --seed 8",
      "rademacher --source linear --m 4,16 --draws 2000 --seed 2",
      "cover --kind matrix-linear --B 2 --r 2 --eps 0.1,0.5,1",
      "dudley --kind lipschitz-composition --B 1 --r 2 --L 1 --m 10,100,1000",
      "sgd --instance " + inst + " --steps 10,100 --seeds 5 --seed 3 --trace true",
      "uc-gap --instance " + inst + " --sample_size 3 --seeds 6 --seed 1",
      "bounds --params '" + (dir / "params.json").string() + "'",
  };
  for (std::size_t i = 0; i < commands.size(); ++i) {
    const fs::path a = dir / ("one_" + std::to_string(i)), b = dir / ("four_" + std::to_string(i));
    const int ca = run_cli("1", commands[i], a), cb = run_cli("4", commands[i], b);
    o.check(ca == cb && ca != 1, "exit codes differ or invalid: " + commands[i]);
    for (const char* file : {"results.csv", "manifest.json", "trace.ndjson"}) {
      if (!fs::exists(a / file) && !fs::exists(b / file)) continue;
      const std::string x = without(slurp(a / file), a.string()), y = without(slurp(b / file), b.string());
      o.check(!x.empty() && x == y, std::string(file) + " differs: " + commands[i]);
    }
  }
  fs::remove_all(dir);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"nonzero-init construction shatters m=10 exactly", nonzero_init_construction},
      {"convex construction shatters m=8 with a convex 1-Lipschitz witness", convex_construction},
      {"Rademacher estimate stays at eps for the shattered instance", non_decay_signature},
      {"linear class Rademacher complexity decays with m", decay_signature},
      {"SGD regret, excess risk and feasibility", sgd_guarantee},
      {"learnable without uniform convergence", learnable_without_uniform_convergence},
      {"svd_truncate rank and error against the oracle", truncation},
      {"covering nets, empirical covers and cover bounds", covering},
      {"bound evaluators", bound_evaluators},
      {"CLI byte-determinism across thread counts", cli_reproducibility},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first;
    if (!o.pass) std::cout << " (" << o.detail << ")";
    std::cout << std::endl;
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
