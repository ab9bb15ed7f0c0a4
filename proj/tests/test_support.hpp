#pragma once

// Shared helpers for the test binaries: filesystem scratch space, running the
// command-line tool as a subprocess, and tolerance checks.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#ifndef OMPN_CLI_PATH
#define OMPN_CLI_PATH ""
#endif
#ifndef OMPN_DATA_DIR
#define OMPN_DATA_DIR ""
#endif
#ifndef OMPN_SCRATCH_DIR
#define OMPN_SCRATCH_DIR "/tmp"
#endif

namespace testsup {

inline std::string cli_path() { return OMPN_CLI_PATH; }
inline std::string data_dir() { return OMPN_DATA_DIR; }

/// Per-process scratch directory, created on first use.
inline std::string scratch_dir() {
  static const std::string dir = [] {
    std::filesystem::path base(OMPN_SCRATCH_DIR);
    std::filesystem::create_directories(base);
    return base.string();
  }();
  return dir;
}

inline std::string scratch_file(const std::string& name) {
  return scratch_dir() + "/" + name;
}

struct CommandResult {
  int exit_code = -1;
  std::string output;  ///< stdout and stderr combined
};

/// Runs a shell command, capturing combined output and the exit code.
inline CommandResult run_command(const std::string& command) {
  CommandResult result;
  const std::string wrapped = command + " 2>&1";
  FILE* pipe = ::popen(wrapped.c_str(), "r");
  if (pipe == nullptr) throw std::runtime_error("popen failed: " + command);
  char buffer[4096];
  std::size_t got = 0;
  while ((got = std::fread(buffer, 1, sizeof(buffer), pipe)) > 0)
    result.output.append(buffer, got);
  const int status = ::pclose(pipe);
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else {
    result.exit_code = -1;
  }
  return result;
}

/// Runs the bundled command-line tool with the given argument string.
inline CommandResult run_cli(const std::string& args) {
  return run_command(cli_path() + " " + args);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

inline bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

inline std::size_t count_lines_starting_with(const std::string& text,
                                             const std::string& prefix) {
  std::istringstream in(text);
  std::string line;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    if (line.rfind(prefix, 0) == 0) ++count;
  }
  return count;
}

/// |a - b| <= tol * max(1, |b|): relative against b with an absolute floor.
inline bool close_rel(double a, double b, double tol) {
  const double scale = std::abs(b) > 1.0 ? std::abs(b) : 1.0;
  return std::abs(a - b) <= tol * scale;
}

/// Strict relative gap |a - b| / |b| (b must be nonzero).
inline double rel_gap(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace testsup
