#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace san::io {

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;  ///< overrides "seed" in the config
  std::optional<std::string> out;     ///< overrides "out" in the config
};

/// Runs one subcommand (simulate, project, identify, fit, summarize) and
/// returns the process exit status. Library errors are reported on `err`
/// as one JSON object with a machine-readable code and the offending
/// subject.
int run(const std::string& command, const RunOptions& options, std::ostream& log, std::ostream& err);

}  // namespace san::io
