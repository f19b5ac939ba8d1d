#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace chaostrng::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kValidation = 2, kRuntime = 3 };

/// Bad command-line usage detected after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string config;  // empty: prototype defaults
  std::optional<std::uint64_t> seed;
};

struct SimulateOptions {
  CommonOptions common;
  std::uint64_t cycles = 0;
  std::string trace;
  std::string raw;
};

struct GenerateOptions {
  CommonOptions common;
  std::uint64_t bits = 0;
  std::optional<std::string> post;
  std::string out;
};

struct TestOptions {
  std::string in;
  std::string report;
  std::uint64_t seq_len = 0;  // 0: the whole file is one sequence
};

struct ReconstructOptions {
  std::string config;  // empty: the trace's sidecar, else prototype defaults
  std::string trace;
  std::string out;
  std::string hist;
};

struct ServeOptions {
  CommonOptions common;
  std::string listen;
  bool stdio = false;
  std::optional<std::size_t> max_sessions;
};

struct ValidateOptions {
  std::string config;
};

int run_simulate(const SimulateOptions& o);
int run_generate(const GenerateOptions& o);
int run_test(const TestOptions& o);
int run_reconstruct(const ReconstructOptions& o);
int run_serve(const ServeOptions& o);
int run_validate(const ValidateOptions& o);

}  // namespace chaostrng::cli
