#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "caplab/cli/config.hpp"

namespace caplab::cli {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitDisproved = 2;

/// Runs one command and writes manifest.json and results.csv into the output
/// directory. Returns 2 when the artifact fails its check.
int dispatch(const RunConfig& cfg, std::ostream& log);

/// Full entry point: parsing, dispatch and error reporting.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace caplab::cli
