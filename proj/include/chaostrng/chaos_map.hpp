#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace chaostrng {

using Matrix = std::vector<std::vector<double>>;

/// Shift map x -> (alpha * x + beta) mod 1 on the unit interval.
///
/// beta is kept unreduced in [0, alpha) so that a circuit-derived offset
/// k * 2^N * V_B / V_ref survives exactly; reduction happens in iterate_map.
struct MapParams {
  int alpha = 2;
  double beta = 0.0;
};

/// Electrical and resolution parameters of the ADC/DAC feedback loop.
/// Defaults are the prototype setup (10-bit ADC degraded to 3 bits,
/// 2-bit symbols, 8-bit DAC, 4.096 V reference, 192 mV offset, gain 4).
struct CircuitConfig {
  int n_hat = 10;    // nominal ADC resolution
  int n = 3;         // effective resolution after the right shift
  int m_bits = 2;    // symbol width, k == 2^m_bits
  int n_tilde = 8;   // DAC resolution
  double v_ref = 4.096;
  double v_b = 0.192;
  int k = 4;

  /// Quantization step at the effective resolution, v_ref / 2^n.
  double step() const;
  /// Quantization step of the raw ADC, v_ref / 2^n_hat.
  double raw_step() const;
  /// Lower and upper ends of the loop voltage interval [k v_b, k (v_b + step)).
  double interval_lo() const;
  double interval_hi() const;

  bool operator==(const CircuitConfig&) const = default;
};

/// The prototype configuration (also the default-constructed value).
CircuitConfig prototype_config();
/// Small illustrative loop: N = N_hat = N_tilde = 3, k = 4, 10 V reference, 0.4 V offset.
CircuitConfig illustrative_config();

struct Finding {
  std::string field;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> violations;
  std::vector<Finding> advisories;

  bool ok() const { return violations.empty(); }
};

struct ValidationOptions {
  /// Allowed distance of k*v_b from the midpoint between code transitions,
  /// as a fraction of one effective quantization step.
  double halfway_tolerance = 0.25;
  /// Minimum clearance between the loop interval and the rails, in
  /// effective quantization steps.
  double clearance_steps = 0.5;
  /// Amplifier saturation rails; unset means the ADC input range [0, v_ref].
  std::optional<std::pair<double, double>> rails;
};

/// Raised when an operation needs a valid configuration and did not get one.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

/// Checks hard bounds (violations) and design recommendations (advisories).
/// Never throws.
ValidationReport validate_config(const CircuitConfig& cfg,
                                 const ValidationOptions& options = {});

/// Throws ConfigError when validate_config reports violations.
void require_valid(const CircuitConfig& cfg);

/// Map parameters realized by the circuit: alpha = k, beta = k 2^n v_b / v_ref.
MapParams map_params(const CircuitConfig& cfg);

/// One iteration of the shift map. Throws std::domain_error for x outside [0,1)
/// and std::invalid_argument for alpha < 2 or beta outside [0, alpha).
double iterate_map(const MapParams& params, double x);

/// Theoretical transition matrix of the alpha-state Markov chain (all 1/alpha).
Matrix transition_matrix(const MapParams& params);

/// Voltage <-> normalized state conjugation.
double voltage_to_x(const CircuitConfig& cfg, double v);
double x_to_voltage(const CircuitConfig& cfg, double x);

struct CodeBounds {
  std::int64_t m_min;
  std::int64_t m_max;
};

/// Range of effective codes spanned by the loop; throws ConfigError on
/// invalid configuration.
CodeBounds markov_bounds(const CircuitConfig& cfg);

struct MarkovPartition {
  int k = 0;
  std::int64_t m_min = 0;
  std::int64_t m_max = 0;
  /// Partition anchor in x units, the image of (m_min + 1) * step.
  double p = 0.0;
};

MarkovPartition markov_partition(const CircuitConfig& cfg);

/// Markov state index I_i observed through the effective code m.
/// The two end codes m_min and m_max both belong to I_(k-1).
/// Throws std::out_of_range when m is outside [m_min, m_max].
int state_from_code(const MarkovPartition& partition, std::int64_t m);

/// Partition membership straight from the interval definition:
/// i such that i <= alpha * ((x - p) mod 1) < i + 1.
int partition_index(int alpha, double p, double x);

}  // namespace chaostrng
