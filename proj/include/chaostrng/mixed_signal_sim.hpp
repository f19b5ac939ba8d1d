#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "chaostrng/chaos_map.hpp"

namespace chaostrng {

struct Rails {
  double lo = 0.0;
  double hi = 0.0;
};

/// Analog imperfections of the loop. A value-initialized instance is ideal.
struct NonIdealities {
  double sigma_th = 0.0;       // V rms, added at the track-and-hold every cycle
  double sigma_adc = 0.0;      // V rms, ADC input-referred
  double gain_tol = 0.0;       // relative error on k
  double offset_err = 0.0;     // V added to v_b
  double lsb_flip_prob = 0.0;  // probability of toggling bit 0 of the raw code
  double droop = 0.0;          // V lost by the hold per cycle
  std::optional<Rails> rails;  // amplifier saturation; unset means [0, v_ref]
  std::uint64_t seed = 1;

  /// All imperfections off.
  static NonIdealities ideal(std::uint64_t seed = 1);
  /// Default noise: sigma_th = sigma_adc = 0.05 raw ADC steps, everything else off.
  static NonIdealities defaults(const CircuitConfig& cfg, std::uint64_t seed = 1);

  Rails effective_rails(const CircuitConfig& cfg) const;
};

/// Throws std::invalid_argument if sigmas are negative, the flip probability
/// is outside [0,1] or the rails are inverted.
void validate(const NonIdealities& ni);

/// Deliberate faults used to exercise the tamper diagnostics.
struct FaultInjection {
  /// Pins the track-and-hold output, as a shorted or forced node would.
  std::optional<double> stuck_voltage;
  /// Fraction of cycles whose raw ADC code is replaced by a uniform random code.
  double random_code_fraction = 0.0;

  bool active() const { return stuck_voltage.has_value() || random_code_fraction > 0.0; }
};

/// Seeded noise stream. Every draw advances the position counter, so a
/// (seed, position) pair pins a point in the stream.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed) : engine_(seed) {}

  double gaussian(double sigma) {
    ++position_;
    return sigma * normal_(engine_);
  }
  bool chance(double p) {
    ++position_;
    return uniform_(engine_) < p;
  }
  double uniform(double lo, double hi) {
    ++position_;
    return lo + (hi - lo) * uniform_(engine_);
  }
  std::uint32_t code(std::uint32_t count) {
    ++position_;
    return static_cast<std::uint32_t>(engine_() % count);
  }
  std::uint64_t position() const { return position_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::uint64_t position_ = 0;
};

struct AdcResult {
  std::uint32_t code = 0;
  bool saturated = false;
};

/// Flooring N_hat-bit conversion with optional input noise and LSB flips.
/// Out-of-range inputs clamp to [0, 2^n_hat - 1] and report saturation.
AdcResult adc_convert(const CircuitConfig& cfg, const NonIdealities& ni, double v,
                      NoiseSource& noise);

/// Drop the n_hat - n erratic low bits.
std::uint32_t degrade_resolution(const CircuitConfig& cfg, std::uint32_t m_hat);
/// Back-shift an effective code onto the n_tilde-bit DAC with zero padding.
std::uint32_t dac_code(const CircuitConfig& cfg, std::uint32_t m);
/// code * v_ref / 2^n_tilde; throws std::out_of_range for codes >= 2^n_tilde.
double dac_convert(const CircuitConfig& cfg, std::uint32_t code);

struct AmpResult {
  double v = 0.0;
  bool saturated = false;
};

/// Difference amplifier k (v_err + v_b) with gain/offset errors, clamped to rails.
AmpResult amplifier(const CircuitConfig& cfg, const NonIdealities& ni, double v_err);

struct LoopState {
  double v_hold = 0.0;  // slave track-and-hold output, the next V_in
  std::uint64_t cycle = 0;
  std::uint32_t m_hat = 0;
  std::uint32_t m = 0;
  std::uint64_t noise_stream_position = 0;
  std::uint64_t saturation_events = 0;
};

struct TraceRecord {
  std::uint64_t cycle = 0;
  double v_in = 0.0;
  std::uint32_t m_hat = 0;
  std::uint32_t m = 0;
  double v_out = 0.0;

  bool operator==(const TraceRecord&) const = default;
};

/// Advances the loop by one clock cycle.
TraceRecord loop_step(const CircuitConfig& cfg, const NonIdealities& ni, LoopState& state,
                      NoiseSource& noise, const FaultInjection& fault = {});

/// Owns configuration, state and noise for one running loop.
class LoopSimulator {
 public:
  /// An empty initial voltage draws uniformly over the loop interval from the
  /// seeded stream. Throws ConfigError / std::invalid_argument on bad inputs.
  LoopSimulator(const CircuitConfig& cfg, const NonIdealities& ni,
                std::optional<double> initial = std::nullopt, FaultInjection fault = {});

  TraceRecord step() { return loop_step(cfg_, ni_, state_, noise_, fault_); }

  const CircuitConfig& config() const { return cfg_; }
  const NonIdealities& nonidealities() const { return ni_; }
  const LoopState& state() const { return state_; }
  const FaultInjection& fault() const { return fault_; }
  void set_fault(FaultInjection fault) { fault_ = fault; }

 private:
  CircuitConfig cfg_;
  NonIdealities ni_;
  NoiseSource noise_;
  LoopState state_;
  FaultInjection fault_;
};

/// Runs n_cycles from the given (or random) start; deterministic in
/// (cfg, ni.seed, initial). Throws std::invalid_argument when n_cycles == 0.
std::vector<TraceRecord> run_trajectory(const CircuitConfig& cfg, const NonIdealities& ni,
                                        std::size_t n_cycles,
                                        std::optional<double> initial = std::nullopt,
                                        const FaultInjection& fault = {});

/// CSV with header `cycle,v_in,m_hat,m,v_out`, voltages to 9 significant digits.
void write_trace_csv(std::ostream& os, std::span<const TraceRecord> trace);
/// Parses the format written by write_trace_csv; throws std::runtime_error.
std::vector<TraceRecord> read_trace_csv(std::istream& is);
/// Raw N_hat-bit codes as little-endian 16-bit words.
void write_raw_codes(std::ostream& os, std::span<const TraceRecord> trace);

}  // namespace chaostrng
