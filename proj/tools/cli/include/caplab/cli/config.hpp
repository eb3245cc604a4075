#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace caplab::cli {

/// Malformed invocation or config; maps to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `--help` was requested; the message is the help text (exit code 0).
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ValueType { unsigned_integer, real, string, boolean, real_list, unsigned_list, path };

std::string_view to_string(ValueType t) noexcept;

struct KeySpec {
  std::string name;
  ValueType type = ValueType::real;
  bool required = false;
  /// Used when neither file nor flags give the key; null means absent.
  nlohmann::json fallback;
  std::string help;
};

const std::vector<std::string>& command_names();

/// Command-specific keys plus the shared `seed` and `out`.
const std::vector<KeySpec>& command_schema(std::string_view command);

struct RunConfig {
  std::string command;
  /// Every schema key that has a value, typed (lists as arrays).
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
};

/// Merges a config-file object with raw flag strings; flags win.
RunConfig resolve_config(std::string_view command, const nlohmann::json& file,
                         const std::map<std::string, std::string>& flags);

/// Parses `<command> [--config file.json] [--key value ...]`.
RunConfig parse_config(const std::vector<std::string>& args);

/// Text for `caplab --help` style output.
std::string usage();

}  // namespace caplab::cli
