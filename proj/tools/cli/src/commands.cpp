#include "caplab/cli/commands.hpp"

#include <fstream>
#include <functional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "caplab/bounds.hpp"
#include "caplab/cli/artifacts.hpp"
#include "caplab/complexity.hpp"
#include "caplab/constructions.hpp"
#include "caplab/error.hpp"
#include "caplab/learner.hpp"
#include "caplab/rng.hpp"

namespace caplab::cli {

namespace {

using nlohmann::json;

struct Outcome {
  json manifest = json::object();
  std::string csv;
  int code = kExitOk;
  std::map<std::string, std::string> extra_files;
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::invalid_input, "cannot read '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::invalid_input, "'" + path + "' is not valid JSON: " + e.what());
  }
}

ShatterInstance load_instance(const json& params) {
  const json j = read_json(params.at("instance").get<std::string>());
  return instance_from_manifest(j.contains("instance") ? j.at("instance") : j);
}

std::optional<double> opt_real(const json& p, const char* name) {
  if (!p.contains(name)) return std::nullopt;
  return p.at(name).get<double>();
}

std::vector<std::uint64_t> seed_list(std::uint64_t base, std::uint64_t count) {
  require(count >= 1, "seeds must be at least 1");
  std::vector<std::uint64_t> seeds(count);
  for (std::uint64_t k = 0; k < count; ++k) seeds[k] = base + k;
  return seeds;
}

Outcome run_construct(const RunConfig& cfg) {
  const json& p = cfg.params;
  const InstanceKind kind = instance_kind_from_string(p.at("kind").get<std::string>());
  const auto m = p.at("m").get<std::size_t>();
  const double eps = p.at("eps").get<double>();
  const bool unit = p.at("unit_domain").get<bool>();
  ShatterInstance inst;
  switch (kind) {
    case InstanceKind::zero_init: {
      const auto B = opt_real(p, "B");
      const auto L = opt_real(p, "L");
      require(B && L, "zero-init needs B and L");
      inst = zero_init_instance(*B, *L, eps, m, cfg.seed, p.at("n").get<std::size_t>(),
                                p.at("max_resamples").get<std::size_t>());
      break;
    }
    case InstanceKind::nonzero_init:
      inst = nonzero_init_instance(m, eps, unit);
      break;
    case InstanceKind::convex:
      inst = convex_instance(m, eps, p.at("kappa").get<double>(), unit);
      break;
  }
  Outcome o;
  o.manifest["instance"] = manifest(inst);
  Csv csv({"kind", "m", "d", "n", "eps", "B", "W0_norm", "domain_radius", "witness_lipschitz", "lemma_budget"});
  csv.cell(to_string(inst.kind))
      .cell(std::uint64_t{inst.m})
      .cell(std::uint64_t{inst.d})
      .cell(std::uint64_t{inst.n})
      .cell(inst.eps)
      .cell(inst.radius)
      .cell(inst.w0_norm)
      .cell(inst.domain_radius)
      .cell(inst.witness_lipschitz)
      .cell(inst.lemma_budget)
      .end_row();
  o.csv = csv.str();
  return o;
}

Outcome run_verify(const RunConfig& cfg) {
  const ShatterInstance inst = load_instance(cfg.params);
  const ShatterReport r = verify_shattering(inst, 0, cfg.params.at("max_failures").get<std::size_t>());
  Outcome o;
  json failures = json::array();
  for (const ShatterFailure& f : r.failures)
    failures.push_back({{"labeling", f.labeling}, {"point", f.point}, {"value", f.value}, {"slack", f.slack}});
  o.manifest["failures"] = failures;
  Csv csv({"kind", "m", "labelings", "pass", "margins_ok", "budgets_ok", "w0_norm_ok", "worst_slack",
           "max_offset_norm", "W0_norm_declared", "W0_norm_measured", "failure_count"});
  csv.cell(to_string(inst.kind))
      .cell(std::uint64_t{inst.m})
      .cell(std::uint64_t{inst.labelings()})
      .cell(r.pass)
      .cell(r.margins_ok)
      .cell(r.budgets_ok)
      .cell(r.w0_norm_ok)
      .cell(r.worst_slack)
      .cell(r.max_offset_norm)
      .cell(inst.w0_norm)
      .cell(r.w0_norm_measured)
      .cell(std::uint64_t{r.failure_count})
      .end_row();
  o.csv = csv.str();
  o.code = r.pass ? kExitOk : kExitDisproved;
  return o;
}

std::vector<Vec> linear_points(const std::string& layout, std::size_t m, std::size_t dim, std::uint64_t seed) {
  require(dim >= 1, "dim must be positive");
  std::vector<Vec> pts(m, Vec(dim, 0.0));
  if (layout == "orthonormal") {
    require(m <= dim, "orthonormal points need m <= dim");
    for (std::size_t i = 0; i < m; ++i) pts[i][i] = 1.0;
    return pts;
  }
  require(layout == "random", "points must be 'random' or 'orthonormal'");
  Rng rng = make_rng(seed, {0x9e7, m});
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Vec& x : pts) {
    double nrm = 0.0;
    while (nrm == 0.0) {
      for (double& v : x) v = gauss(rng);
      nrm = norm2(x);
    }
    for (double& v : x) v /= nrm;
  }
  return pts;
}

void estimate_row(Csv& csv, json& records, const std::string& id, const RademacherEstimate& e) {
  csv.cell(id)
      .cell(std::uint64_t{e.m})
      .cell(std::uint64_t{e.draws})
      .cell(e.mean)
      .cell(e.std_error)
      .cell(to_string(e.strategy))
      .end_row();
  records.push_back({{"id", id},
                     {"m", e.m},
                     {"draws", e.draws},
                     {"mean", e.mean},
                     {"stderr", e.std_error},
                     {"strategy", to_string(e.strategy)},
                     {"is_lower_estimate", e.is_lower_estimate}});
}

Outcome run_rademacher(const RunConfig& cfg) {
  const json& p = cfg.params;
  const auto draws = p.at("draws").get<std::size_t>();
  std::optional<SupStrategy> strategy;
  if (p.contains("strategy")) strategy = sup_strategy_from_string(p.at("strategy").get<std::string>());
  const std::string source = p.at("source").get<std::string>();
  Csv csv({"id", "m", "draws", "mean", "stderr", "strategy"});
  json records = json::array();
  if (source == "instance") {
    require(p.contains("instance"), "source=instance needs an instance manifest");
    const ShatterInstance inst = load_instance(p);
    const RademacherEstimate e = rademacher_mc(finite_class_from_instance(inst), draws, cfg.seed, strategy);
    estimate_row(csv, records, std::string(to_string(inst.kind)), e);
  } else if (source == "linear") {
    const double B = p.at("B").get<double>();
    for (const json& mj : p.at("m")) {
      const auto m = mj.get<std::size_t>();
      require(m >= 1, "every m must be positive");
      auto pts = linear_points(p.at("points").get<std::string>(), m, p.at("dim").get<std::size_t>(), cfg.seed);
      const RademacherEstimate e =
          (!strategy || *strategy == SupStrategy::linear_closed_form)
              ? rademacher_linear_closed_form(pts, B, draws, cfg.seed)
              : rademacher_mc(LinearBallClass{std::move(pts), B}, draws, cfg.seed, strategy);
      estimate_row(csv, records, "linear", e);
    }
  } else {
    fail(ErrorKind::invalid_input, "source must be 'instance' or 'linear'");
  }
  Outcome o;
  o.manifest["estimates"] = records;
  o.csv = csv.str();
  return o;
}

std::map<std::string, double> cover_params(const json& p) {
  std::map<std::string, double> out;
  for (const char* name : {"B", "b_x", "r", "L", "k", "c", "inner"})
    if (p.contains(name)) out[name] = p.at(name).get<double>();
  return out;
}

Outcome run_cover(const RunConfig& cfg) {
  const json& p = cfg.params;
  CoverFormula f{cover_kind_from_string(p.at("kind").get<std::string>()), cover_params(p)};
  Csv csv({"id", "eps", "log_cover", "envelope"});
  for (const json& e : p.at("eps")) {
    f.params["eps"] = e.get<double>();
    const CoverBound b = cover_bound(f);
    csv.cell(to_string(f.kind)).cell(e.get<double>()).cell(b.log_cover);
    if (b.envelope) {
      csv.cell(*b.envelope);
    } else {
      csv.cell(std::string_view());
    }
    csv.end_row();
  }
  Outcome o;
  o.csv = csv.str();
  return o;
}

Outcome run_dudley(const RunConfig& cfg) {
  const json& p = cfg.params;
  const CoverFormula base{cover_kind_from_string(p.at("kind").get<std::string>()), cover_params(p)};
  double range = 0.0;
  if (auto r = opt_real(p, "range")) {
    range = *r;
  } else {
    require(base.params.count("B") > 0, "dudley needs 'range' or 'B'");
    range = base.params.at("B") * (base.params.count("b_x") ? base.params.at("b_x") : 1.0);
  }
  auto log_cover = [base](double tau) {
    CoverFormula f = base;
    f.params["eps"] = tau;
    return cover_bound(f).log_cover;
  };
  Csv csv({"id", "m", "value", "argmin_eps", "integral", "panels", "grid_points"});
  for (const json& mj : p.at("m")) {
    const double m = mj.get<double>();
    const DudleyResult d = dudley_bound(log_cover, range, m);
    csv.cell(to_string(base.kind))
        .cell(m)
        .cell(d.value)
        .cell(d.argmin_eps)
        .cell(d.integral)
        .cell(std::uint64_t{d.panels})
        .cell(std::uint64_t{d.grid_points})
        .end_row();
  }
  Outcome o;
  o.manifest["discretization"] = {{"rule", "composite trapezoid"},
                                  {"panels", kDudleyPanels},
                                  {"grid", "log-spaced"},
                                  {"grid_points", kDudleyGrid},
                                  {"range", range}};
  o.csv = csv.str();
  return o;
}

Outcome run_sgd(const RunConfig& cfg) {
  const json& p = cfg.params;
  const ShatterInstance inst = load_instance(p);
  const auto steps = p.at("steps").get<std::vector<std::size_t>>();
  const auto seeds = seed_list(cfg.seed, p.at("seeds").get<std::uint64_t>());
  const ExcessRiskTable t = excess_risk_experiment(inst, steps, seeds, p.at("tolerance").get<double>());
  Csv csv({"T", "seed", "excess", "bound", "pass"});
  for (const ExcessRow& r : t.rows)
    csv.cell(std::uint64_t{r.steps}).cell(r.seed).cell(r.excess).cell(r.bound).cell(r.pass).end_row();
  Outcome o;
  json summary = json::array();
  bool pass = true;
  for (const ExcessSummary& s : t.summary) {
    summary.push_back({{"T", s.steps}, {"mean_excess", s.mean_excess}, {"bound", s.bound}, {"pass", s.pass}});
    pass = pass && s.pass;
  }
  o.manifest["summary"] = {{"rows", summary},
                           {"best_loss", t.best_loss},
                           {"best_labeling", t.best_labeling},
                           {"lipschitz", t.lipschitz},
                           {"radius", t.radius},
                           {"tolerance", t.tolerance},
                           {"pass", pass}};
  if (p.at("trace").get<bool>()) {
    SgdConfig sc;
    sc.w0 = inst.w0;
    sc.radius = inst.radius;
    sc.steps = steps.front();
    sc.lipschitz = t.lipschitz;
    sc.seed = derive_seed(seeds.front(), {steps.front()});
    sc.record_trace = false;
    std::ostringstream trace;
    sgd_run(sc, instance_oracle(inst), nullptr, &trace);
    o.extra_files["trace.ndjson"] = trace.str();
  }
  o.csv = csv.str();
  o.code = pass ? kExitOk : kExitDisproved;
  return o;
}

Outcome run_uc_gap(const RunConfig& cfg) {
  const json& p = cfg.params;
  const ShatterInstance inst = load_instance(p);
  const auto rows = uc_gap_experiment(inst, p.at("sample_size").get<std::size_t>(),
                                      seed_list(cfg.seed, p.at("seeds").get<std::uint64_t>()));
  Csv csv({"m", "seed", "sample_size", "support", "empirical", "population", "gap", "bound", "pass"});
  bool pass = true;
  for (const GapRow& r : rows) {
    csv.cell(std::uint64_t{r.m})
        .cell(r.seed)
        .cell(std::uint64_t{r.sample_size})
        .cell(std::uint64_t{r.support})
        .cell(r.empirical)
        .cell(r.population)
        .cell(r.gap)
        .cell(r.bound)
        .cell(r.pass)
        .end_row();
    pass = pass && r.pass;
  }
  Outcome o;
  o.manifest["summary"] = {{"pass", pass}, {"rows", rows.size()}};
  o.csv = csv.str();
  o.code = pass ? kExitOk : kExitDisproved;
  return o;
}

const std::set<std::string>& bound_scalar_keys() {
  static const std::set<std::string> keys = {"B", "L", "eps", "c", "b", "b_x", "B0", "mu", "k", "m"};
  return keys;
}

Outcome run_bounds(const RunConfig& cfg) {
  const json doc = read_json(cfg.params.at("params").get<std::string>());
  json sets;
  if (doc.is_array()) {
    sets = doc;
  } else if (doc.is_object() && doc.contains("sets")) {
    sets = doc.at("sets");
  } else {
    sets = json::array({doc});
  }
  if (!sets.is_array() || sets.empty()) throw UsageError("bounds params must hold at least one parameter set");

  Csv csv({"set", "formula_id", "value", "log_value", "c", "status", "message"});
  json reports = json::array();
  for (std::size_t s = 0; s < sets.size(); ++s) {
    const json& set = sets[s];
    if (!set.is_object()) throw UsageError("parameter set " + std::to_string(s) + " must be a JSON object");
    std::string name = std::to_string(s);
    std::map<std::string, double> inputs;
    std::map<std::string, std::vector<double>> lists;
    std::vector<std::string> formulas = bound_formula_ids();
    for (const auto& [k, v] : set.items()) {
      if (k == "name") {
        if (!v.is_string()) throw UsageError("key 'name' expects string");
        name = v.get<std::string>();
      } else if (k == "formulas") {
        if (!v.is_array()) throw UsageError("key 'formulas' expects list of strings");
        formulas.clear();
        for (const json& f : v) {
          if (!f.is_string()) throw UsageError("key 'formulas' expects list of strings");
          formulas.push_back(f.get<std::string>());
        }
      } else if (k == "S" || k == "B_list") {
        if (!v.is_array()) throw UsageError("key '" + k + "' expects list of reals");
        auto& dst = lists[k == "S" ? "S" : "B"];
        for (const json& x : v) {
          if (!x.is_number()) throw UsageError("key '" + k + "' expects list of reals");
          dst.push_back(x.get<double>());
        }
      } else if (bound_scalar_keys().count(k) > 0) {
        if (!v.is_number()) throw UsageError("key '" + k + "' expects real");
        inputs[k] = v.get<double>();
      } else {
        std::string valid = "name, formulas, S, B_list";
        for (const std::string& key : bound_scalar_keys()) valid += ", " + key;
        throw UsageError("unknown key '" + k + "' in parameter set " + name + "; valid keys: " + valid);
      }
    }
    for (const std::string& id : formulas) {
      csv.cell(name).cell(id);
      try {
        const BoundReport r = evaluate_bound(id, inputs, lists);
        csv.cell(r.value).cell(r.log_value).cell(r.c).cell("ok").cell(std::string_view());
        json rec = to_json(r);
        rec["set"] = name;
        reports.push_back(rec);
      } catch (const Error& e) {
        csv.cell("").cell("").cell("").cell("invalid").cell(e.what());
      }
      csv.end_row();
    }
  }
  Outcome o;
  o.manifest["reports"] = reports;
  o.csv = csv.str();
  return o;
}

Outcome execute(const RunConfig& cfg) {
  static const std::map<std::string, std::function<Outcome(const RunConfig&)>> table = {
      {"construct", run_construct}, {"verify", run_verify}, {"rademacher", run_rademacher},
      {"cover", run_cover},         {"dudley", run_dudley}, {"sgd", run_sgd},
      {"uc-gap", run_uc_gap},       {"bounds", run_bounds}};
  auto it = table.find(cfg.command);
  if (it == table.end()) throw UsageError("unknown command '" + cfg.command + "'");
  return it->second(cfg);
}

}  // namespace

int dispatch(const RunConfig& cfg, std::ostream& log) {
  Outcome o = execute(cfg);

  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec || !std::filesystem::is_directory(cfg.output_dir))
    fail(ErrorKind::invalid_input, "output directory '" + cfg.output_dir.string() + "' is not writable");

  json m = json::object();
  m["tool"] = "caplab";
  m["command"] = cfg.command;
  m["config"] = cfg.params;
  m["exit_code"] = o.code;
  for (auto& [k, v] : o.manifest.items()) m[k] = v;
  for (const auto& [name, content] : o.extra_files) write_atomically(cfg.output_dir / name, content);
  write_atomically(cfg.output_dir / "results.csv", o.csv);
  write_atomically(cfg.output_dir / "manifest.json", m.dump(2) + "\n");
  log << cfg.command << ": wrote " << (cfg.output_dir / "results.csv").string() << "\n";
  if (o.code == kExitDisproved) log << cfg.command << ": check failed; see results.csv\n";
  return o.code;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    err << usage();
    return kExitInvalid;
  }
  if (args.front() == "--help" || args.front() == "-h") {
    out << usage();
    return kExitOk;
  }
  try {
    return dispatch(parse_config(args), out);
  } catch (const HelpRequested& h) {
    out << h.what();
    return kExitOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
}

}  // namespace caplab::cli
