#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "chaostrng/quality_suite.hpp"

// Subset of the SP800-22 statistical tests: frequency, block frequency,
// runs, longest run of ones, cumulative sums, serial and approximate entropy.
namespace chaostrng::nist {

struct Options {
  std::size_t block_frequency_m = 128;
  int serial_m = 16;
  int approximate_entropy_m = 10;
  /// When set, each test throws InsufficientData below its recommended
  /// input length (n >= 100, n >= 128 for the longest run, and the
  /// m < log2(n) - 2 / m < log2(n) - 5 limits for serial and approximate
  /// entropy). Small textbook vectors need it off.
  bool enforce_min_length = true;
};

TestReport frequency(std::span<const std::uint8_t> bits, const Options& options = {});
TestReport block_frequency(std::span<const std::uint8_t> bits, const Options& options = {});
TestReport runs(std::span<const std::uint8_t> bits, const Options& options = {});
TestReport longest_run(std::span<const std::uint8_t> bits, const Options& options = {});
TestReport cumulative_sums(std::span<const std::uint8_t> bits, bool forward,
                           const Options& options = {});
/// Two reports: the first and second differences of psi^2.
std::vector<TestReport> serial(std::span<const std::uint8_t> bits, const Options& options = {});
TestReport approximate_entropy(std::span<const std::uint8_t> bits, const Options& options = {});

/// All of the above, in a fixed order (nine reports).
std::vector<TestReport> run_subset(std::span<const std::uint8_t> bits,
                                   const Options& options = {});

/// Probability that the longest run of ones in a uniform block of
/// `block` bits is at most `run`.
double longest_run_cdf(std::size_t block, std::size_t run);

}  // namespace chaostrng::nist
