#include "caplab/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"

namespace caplab::cli {

namespace {

using nlohmann::json;

KeySpec key(std::string name, ValueType type, std::string help, json fallback = nullptr, bool required = false) {
  return KeySpec{std::move(name), type, required, std::move(fallback), std::move(help)};
}

KeySpec required(std::string name, ValueType type, std::string help) {
  return key(std::move(name), type, std::move(help), nullptr, true);
}

std::vector<KeySpec> with_common(std::vector<KeySpec> keys) {
  keys.push_back(key("seed", ValueType::unsigned_integer, "master seed", 0));
  keys.push_back(required("out", ValueType::path, "output directory"));
  return keys;
}

std::vector<KeySpec> cover_keys() {
  return {
      key("B", ValueType::real, "norm radius"),       key("b_x", ValueType::real, "input norm bound"),
      key("r", ValueType::real, "rank"),              key("L", ValueType::real, "Lipschitz constant"),
      key("k", ValueType::real, "number of outputs"), key("c", ValueType::real, "universal constant"),
      key("inner", ValueType::real, "inner log-cover added to the composition"),
  };
}

const std::map<std::string, std::vector<KeySpec>, std::less<>>& schemas() {
  static const auto table = [] {
    std::map<std::string, std::vector<KeySpec>, std::less<>> t;
    t["construct"] = with_common({
        required("kind", ValueType::string, "zero-init | nonzero-init | convex"),
        required("m", ValueType::unsigned_integer, "number of shattered points (cap for zero-init)"),
        required("eps", ValueType::real, "margin"),
        key("B", ValueType::real, "Frobenius radius (zero-init)"),
        key("L", ValueType::real, "Lipschitz budget (zero-init)"),
        key("kappa", ValueType::real, "constant piece (convex)", 0.5),
        key("n", ValueType::unsigned_integer, "rows of the random family (zero-init)", 256),
        key("max_resamples", ValueType::unsigned_integer, "family resample budget (zero-init)", 20),
        key("unit_domain", ValueType::boolean, "rescale explicit instances onto the unit ball", true),
    });
    t["verify"] = with_common({
        required("instance", ValueType::path, "instance manifest"),
        key("max_failures", ValueType::unsigned_integer, "failures listed in the manifest", 64),
    });
    t["rademacher"] = with_common({
        key("source", ValueType::string, "instance | linear", "instance"),
        key("instance", ValueType::path, "instance manifest (source=instance)"),
        key("draws", ValueType::unsigned_integer, "sign draws", 10000),
        key("strategy", ValueType::string, "enumerate-witnesses | linear-closed-form | projected-ascent"),
        key("m", ValueType::unsigned_list, "sample sizes (source=linear)", json::array({4})),
        key("dim", ValueType::unsigned_integer, "ambient dimension (source=linear)", 8),
        key("points", ValueType::string, "random | orthonormal (source=linear)", "random"),
        key("B", ValueType::real, "weight radius (source=linear)", 1.0),
    });
    auto cover = cover_keys();
    cover.insert(cover.begin(), required("kind", ValueType::string,
                                         "scalar-linear | matrix-linear | constants | lipschitz-composition | "
                                         "contraction"));
    auto dudley = cover;
    cover.push_back(required("eps", ValueType::real_list, "scales"));
    dudley.push_back(required("m", ValueType::real_list, "sample sizes"));
    dudley.push_back(key("range", ValueType::real, "range bound LB (default B*b_x)"));
    t["cover"] = with_common(cover);
    t["dudley"] = with_common(dudley);
    t["sgd"] = with_common({
        required("instance", ValueType::path, "convex instance manifest"),
        key("steps", ValueType::unsigned_list, "iteration counts T", json::array({100, 1000, 10000})),
        key("seeds", ValueType::unsigned_integer, "runs per T", 20),
        key("tolerance", ValueType::real, "absolute slack on B*L/sqrt(T)", 0.05),
        key("trace", ValueType::boolean, "write trace.ndjson for the first (T, seed) cell", false),
    });
    t["uc-gap"] = with_common({
        required("instance", ValueType::path, "instance manifest"),
        required("sample_size", ValueType::unsigned_integer, "points drawn with replacement"),
        key("seeds", ValueType::unsigned_integer, "number of draws", 20),
    });
    t["bounds"] = with_common({
        required("params", ValueType::path, "JSON file with parameter sets"),
    });
    return t;
  }();
  return table;
}

std::string valid_keys(std::string_view command) {
  std::string out;
  for (const KeySpec& k : command_schema(command)) {
    if (!out.empty()) out += ", ";
    out += k.name;
  }
  return out;
}

[[noreturn]] void type_error(const std::string& name, ValueType t, const std::string& got) {
  throw UsageError("key '" + name + "' expects " + std::string(to_string(t)) + ", got " + got);
}

std::optional<std::uint64_t> parse_unsigned(std::string_view s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<double> parse_real(std::string_view s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::vector<std::string> split(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = s.find(',', start);
    std::string part(s.substr(start, comma == std::string_view::npos ? s.size() - start : comma - start));
    part.erase(0, part.find_first_not_of(" \t"));
    part.erase(part.find_last_not_of(" \t") + 1);
    out.push_back(part);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

json from_text(const KeySpec& k, const std::string& text) {
  switch (k.type) {
    case ValueType::unsigned_integer:
      if (auto v = parse_unsigned(text)) return *v;
      break;
    case ValueType::real:
      if (auto v = parse_real(text)) return *v;
      break;
    case ValueType::string:
    case ValueType::path:
      return text;
    case ValueType::boolean:
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      break;
    case ValueType::real_list:
    case ValueType::unsigned_list: {
      json arr = json::array();
      for (const std::string& part : split(text)) {
        if (k.type == ValueType::real_list) {
          auto v = parse_real(part);
          if (!v) type_error(k.name, k.type, "'" + text + "'");
          arr.push_back(*v);
        } else {
          auto v = parse_unsigned(part);
          if (!v) type_error(k.name, k.type, "'" + text + "'");
          arr.push_back(*v);
        }
      }
      return arr;
    }
  }
  type_error(k.name, k.type, "'" + text + "'");
}

json from_file(const KeySpec& k, const json& v) {
  const auto is_unsigned = [](const json& x) {
    return x.is_number_unsigned() || (x.is_number_integer() && x.get<std::int64_t>() >= 0);
  };
  switch (k.type) {
    case ValueType::unsigned_integer:
      if (is_unsigned(v)) return v.get<std::uint64_t>();
      break;
    case ValueType::real:
      if (v.is_number() && std::isfinite(v.get<double>())) return v.get<double>();
      break;
    case ValueType::string:
    case ValueType::path:
      if (v.is_string()) return v;
      break;
    case ValueType::boolean:
      if (v.is_boolean()) return v;
      break;
    case ValueType::real_list:
    case ValueType::unsigned_list: {
      if (v.is_string()) return from_text(k, v.get<std::string>());
      const json items = v.is_array() ? v : json::array({v});
      json arr = json::array();
      for (const json& x : items) {
        if (k.type == ValueType::unsigned_list && is_unsigned(x)) {
          arr.push_back(x.get<std::uint64_t>());
        } else if (k.type == ValueType::real_list && x.is_number() && std::isfinite(x.get<double>())) {
          arr.push_back(x.get<double>());
        } else {
          type_error(k.name, k.type, x.dump());
        }
      }
      if (!arr.empty()) return arr;
      break;
    }
  }
  type_error(k.name, k.type, v.dump());
}

}  // namespace

std::string_view to_string(ValueType t) noexcept {
  switch (t) {
    case ValueType::unsigned_integer: return "unsigned integer";
    case ValueType::real: return "real";
    case ValueType::string: return "string";
    case ValueType::boolean: return "boolean";
    case ValueType::real_list: return "list of reals";
    case ValueType::unsigned_list: return "list of unsigned integers";
    case ValueType::path: return "path";
  }
  return "?";
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"construct", "verify", "rademacher", "cover",
                                                 "dudley",    "sgd",    "uc-gap",     "bounds"};
  return names;
}

const std::vector<KeySpec>& command_schema(std::string_view command) {
  const auto& t = schemas();
  auto it = t.find(command);
  if (it == t.end()) throw UsageError("unknown command '" + std::string(command) + "'");
  return it->second;
}

RunConfig resolve_config(std::string_view command, const json& file, const std::map<std::string, std::string>& flags) {
  const auto& schema = command_schema(command);
  auto find = [&](std::string_view name) -> const KeySpec* {
    for (const KeySpec& k : schema)
      if (k.name == name) return &k;
    return nullptr;
  };
  if (!file.is_null() && !file.is_object()) throw UsageError("config file must hold a JSON object");

  json params = json::object();
  if (file.is_object()) {
    for (const auto& [name, value] : file.items()) {
      if (name == "command") {
        if (!value.is_string() || value.get<std::string>() != command)
          throw UsageError("config file is for command " + value.dump() + ", not '" + std::string(command) + "'");
        continue;
      }
      const KeySpec* k = find(name);
      if (k == nullptr)
        throw UsageError("unknown key '" + name + "' for " + std::string(command) + "; valid keys: " +
                         valid_keys(command));
      params[name] = from_file(*k, value);
    }
  }
  for (const auto& [name, text] : flags) {
    const KeySpec* k = find(name);
    if (k == nullptr)
      throw UsageError("unknown key '" + name + "' for " + std::string(command) + "; valid keys: " +
                       valid_keys(command));
    params[name] = from_text(*k, text);
  }
  for (const KeySpec& k : schema) {
    if (params.contains(k.name)) continue;
    if (!k.fallback.is_null()) {
      params[k.name] = k.fallback;
    } else if (k.required) {
      throw UsageError("missing required key '" + k.name + "' (" + std::string(to_string(k.type)) + ")");
    }
  }

  RunConfig cfg;
  cfg.command = std::string(command);
  cfg.seed = params.at("seed").get<std::uint64_t>();
  cfg.output_dir = params.at("out").get<std::string>();
  cfg.params = std::move(params);
  return cfg;
}

RunConfig parse_config(const std::vector<std::string>& args) {
  CLI::App app{"caplab: sample-complexity constructions and measurements"};
  app.require_subcommand(1);
  struct Slot {
    std::string config_path;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    CLI::Option* config = nullptr;
  };
  std::map<std::string, Slot> slots;
  for (const std::string& name : command_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->allow_extras();
    Slot& slot = slots[name];
    slot.config = sub->add_option("--config", slot.config_path, "JSON config file; flags override it");
    for (const KeySpec& k : command_schema(name)) {
      std::string help = k.help + " [" + std::string(to_string(k.type)) + "]";
      if (!k.fallback.is_null()) help += " (default " + k.fallback.dump() + ")";
      slot.options[k.name] = sub->add_option("--" + k.name, slot.values[k.name], help);
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    std::string text = app.help();
    for (CLI::App* sub : app.get_subcommands())
      if (sub->parsed()) text = sub->help();
    throw HelpRequested(text);
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  CLI::App* parsed = app.get_subcommands().front();
  const std::string command = parsed->get_name();
  if (const auto extras = parsed->remaining(); !extras.empty()) {
    std::string list;
    for (const std::string& x : extras) list += (list.empty() ? "" : " ") + x;
    throw UsageError("unrecognized arguments '" + list + "' for " + command + "; valid keys: " + valid_keys(command));
  }
  const Slot& slot = slots.at(command);
  json file = nullptr;
  if (slot.config->count() > 0) {
    std::ifstream in(slot.config_path);
    if (!in) throw UsageError("cannot read config file '" + slot.config_path + "'");
    try {
      file = json::parse(in);
    } catch (const json::parse_error& e) {
      throw UsageError("config file '" + slot.config_path + "' is not valid JSON: " + e.what());
    }
  }
  std::map<std::string, std::string> flags;
  for (const auto& [name, opt] : slot.options)
    if (opt->count() > 0) flags[name] = slot.values.at(name);
  return resolve_config(command, file, flags);
}

std::string usage() {
  std::ostringstream os;
  os << "usage: caplab <command> [--config file.json] [--key value ...]\n\ncommands:\n";
  for (const std::string& name : command_names()) os << "  " << name << ": " << valid_keys(name) << "\n";
  return os.str();
}

}  // namespace caplab::cli
