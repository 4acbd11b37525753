#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace gfflab::cli {

/// Exit codes: 0 success, 1 failed check or I/O, 2 usage, 3 numerical.
enum Exit : int { kOk = 0, kFailed = 1, kUsage = 2, kNumerical = 3 };

/// Usage problem detected after parsing (conflicting flags and the like).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Record of one invocation, written as JSON next to the primary output.
struct RunManifest {
  std::vector<std::string> command;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  unsigned threads = 1;
  int exit_code = 0;
  std::string error;

  void write(const std::string &path, double wall_seconds) const;
};

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string &path);

/// State shared by every subcommand.
struct Context {
  unsigned threads = 1;
  std::string manifest_path;
  /// Set by the subcommand at parse time; the manifest goes next to it.
  std::string primary_output;
  RunManifest manifest;

  void input(const std::string &path) { manifest.inputs.push_back(path); }
  void output(const std::string &path) { manifest.outputs.push_back(path); }
};

using Runner = std::function<int(Context &)>;

/// Each register_* adds a subcommand and returns its runner.
Runner register_lattice(CLI::App &app, Context &ctx);
Runner register_sample(CLI::App &app, Context &ctx);
Runner register_green(CLI::App &app, Context &ctx);
Runner register_explore(CLI::App &app, Context &ctx);
Runner register_moments(CLI::App &app, Context &ctx);
Runner register_thick(CLI::App &app, Context &ctx);
Runner register_verify(CLI::App &app, Context &ctx);

} // namespace gfflab::cli
