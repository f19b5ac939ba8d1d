#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chaostrng/chaos_map.hpp"
#include "chaostrng/mixed_signal_sim.hpp"

namespace chaostrng {

constexpr double kSignificance = 0.01;

/// Thrown when a statistic needs more samples than it was given.
class InsufficientData : public std::length_error {
 public:
  using std::length_error::length_error;
};

struct TestReport {
  std::string name;
  double statistic = 0.0;
  double p_value = 0.0;
  bool pass = false;
  std::size_t sample_size = 0;
  std::optional<std::uint64_t> seed;
};

/// Builds a report whose verdict is p_value >= kSignificance.
TestReport make_report(std::string name, double statistic, double p_value,
                       std::size_t sample_size);

/// Relative frequency of each symbol in [0, k). Throws InsufficientData on
/// empty input and std::out_of_range on a symbol >= k.
std::vector<double> symbol_histogram(std::span<const std::uint32_t> symbols, int k);

/// Upper-tail p-value of Pearson's chi-square against equiprobable bins.
double chi_square_uniform_p(std::span<const std::uint64_t> counts);

/// Block-entropy rate H_L / L over non-overlapping L-bit words.
/// Needs at least 100 * 2^L words, else throws InsufficientData.
double marginal_entropy(std::span<const std::uint8_t> bits, int order);

struct EntropyProfile {
  std::vector<double> per_order;  // index L-1
  double minimum = 1.0;
};

/// marginal_entropy for L = 1..max_order, orders lacking data are skipped.
/// Throws InsufficientData if not even L = 1 fits.
EntropyProfile marginal_entropy_profile(std::span<const std::uint8_t> bits, int max_order = 8);

struct TransitionEstimate {
  Matrix probabilities;
  std::vector<std::vector<std::uint64_t>> counts;
  std::vector<std::uint64_t> row_counts;
  std::vector<bool> empty_rows;

  /// Largest |P[i][j] - expected| over non-empty rows.
  double max_deviation(double expected) const;
  /// Smallest per-row chi-square p-value against the uniform row 1/k.
  double min_row_uniformity_p() const;
};

/// Row-normalized transition counts of a state sequence over [0, k).
/// Throws InsufficientData for fewer than two states.
TransitionEstimate empirical_transition_matrix(std::span<const int> states, int k);

/// States I_i of a trace; codes outside [m_min, m_max] are skipped.
std::vector<int> trace_states(std::span<const TraceRecord> trace, const CircuitConfig& cfg);

/// Sparse (m_hat(n), m_hat(n+1)) counts.
struct ReconstructionMap {
  int n_hat = 0;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> counts;
  std::uint64_t total = 0;
};

struct Reconstruction {
  ReconstructionMap map;
  /// Fraction of transitions landing within tolerance of the predicted branch.
  double branch_score = 0.0;
  std::uint32_t tolerance_codes = 0;
};

/// Default branch tolerance, 2 * 2^(n_hat - n) raw codes.
std::uint32_t default_branch_tolerance(const CircuitConfig& cfg);

/// Code interval the nominal map sends raw code m_hat to (inclusive bounds,
/// clamped to the ADC range).
std::pair<std::int64_t, std::int64_t> predicted_branch(const CircuitConfig& cfg,
                                                       std::uint32_t m_hat);

/// Scatter of successive raw codes plus a branch-fit score.
/// Needs at least 1000 records.
Reconstruction reconstruct_map(std::span<const TraceRecord> trace, const CircuitConfig& cfg,
                               std::optional<std::uint32_t> tolerance_codes = std::nullopt);

enum TamperFlag : std::uint8_t {
  kStuck = 1u << 0,
  kOutOfRange = 1u << 1,
  kOffBranch = 1u << 2,
  kSaturation = 1u << 3,
};

std::string describe_flags(std::uint8_t flags);

struct TamperOptions {
  double stuck_occupancy = 0.5;
  double min_branch_score = 0.98;
  std::optional<std::uint32_t> tolerance_codes;
};

struct TamperReport {
  std::uint8_t flags = 0;
  double branch_score = 0.0;
  double max_state_occupancy = 0.0;
  std::uint64_t out_of_range = 0;
  std::uint64_t saturation_events = 0;

  bool healthy() const { return flags == 0; }
};

/// Self-diagnostic over a trace of at least 1000 records.
TamperReport tamper_check(std::span<const TraceRecord> trace, const CircuitConfig& cfg,
                          std::uint64_t saturation_events = 0, const TamperOptions& options = {});

}  // namespace chaostrng
