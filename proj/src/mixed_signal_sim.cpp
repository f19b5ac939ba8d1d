#include "chaostrng/mixed_signal_sim.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace chaostrng {

NonIdealities NonIdealities::ideal(std::uint64_t seed) {
  NonIdealities ni;
  ni.seed = seed;
  return ni;
}

NonIdealities NonIdealities::defaults(const CircuitConfig& cfg, std::uint64_t seed) {
  NonIdealities ni;
  ni.sigma_th = 0.05 * cfg.raw_step();
  ni.sigma_adc = 0.05 * cfg.raw_step();
  ni.seed = seed;
  return ni;
}

Rails NonIdealities::effective_rails(const CircuitConfig& cfg) const {
  return rails.value_or(Rails{0.0, cfg.v_ref});
}

void validate(const NonIdealities& ni) {
  if (!(ni.sigma_th >= 0.0) || !(ni.sigma_adc >= 0.0))
    throw std::invalid_argument("noise sigmas must be >= 0");
  if (!(ni.lsb_flip_prob >= 0.0 && ni.lsb_flip_prob <= 1.0))
    throw std::invalid_argument("lsb_flip_prob must be in [0, 1]");
  if (ni.rails && !(ni.rails->lo < ni.rails->hi))
    throw std::invalid_argument("rails must satisfy lo < hi");
  if (!std::isfinite(ni.gain_tol) || !std::isfinite(ni.offset_err) || !std::isfinite(ni.droop))
    throw std::invalid_argument("gain_tol, offset_err and droop must be finite");
}

AdcResult adc_convert(const CircuitConfig& cfg, const NonIdealities& ni, double v,
                      NoiseSource& noise) {
  if (ni.sigma_adc > 0.0) v += noise.gaussian(ni.sigma_adc);
  const double full = std::ldexp(1.0, cfg.n_hat);
  const double scaled = std::floor(full / cfg.v_ref * v);
  AdcResult r;
  if (!(scaled >= 0.0)) {
    r.code = 0;
    r.saturated = true;
  } else if (scaled > full - 1.0) {
    r.code = static_cast<std::uint32_t>(full - 1.0);
    r.saturated = true;
  } else {
    r.code = static_cast<std::uint32_t>(scaled);
  }
  if (ni.lsb_flip_prob > 0.0 && noise.chance(ni.lsb_flip_prob)) r.code ^= 1u;
  return r;
}

std::uint32_t degrade_resolution(const CircuitConfig& cfg, std::uint32_t m_hat) {
  return m_hat >> (cfg.n_hat - cfg.n);
}

std::uint32_t dac_code(const CircuitConfig& cfg, std::uint32_t m) {
  return m << (cfg.n_tilde - cfg.n);
}

double dac_convert(const CircuitConfig& cfg, std::uint32_t code) {
  if (code >= (1u << cfg.n_tilde))
    throw std::out_of_range("DAC code " + std::to_string(code) + " exceeds " +
                            std::to_string(cfg.n_tilde) + " bits");
  return code * cfg.v_ref / std::ldexp(1.0, cfg.n_tilde);
}

AmpResult amplifier(const CircuitConfig& cfg, const NonIdealities& ni, double v_err) {
  const double k = cfg.k * (1.0 + ni.gain_tol);
  const double v_b = cfg.v_b + ni.offset_err;
  const Rails rails = ni.effective_rails(cfg);
  const double v = k * (v_err + v_b);
  if (v < rails.lo) return {rails.lo, true};
  if (v > rails.hi) return {rails.hi, true};
  return {v, false};
}

TraceRecord loop_step(const CircuitConfig& cfg, const NonIdealities& ni, LoopState& state,
                      NoiseSource& noise, const FaultInjection& fault) {
  double v_in = state.v_hold - ni.droop;
  if (ni.sigma_th > 0.0) v_in += noise.gaussian(ni.sigma_th);
  if (fault.stuck_voltage) v_in = *fault.stuck_voltage;

  const AdcResult adc = adc_convert(cfg, ni, v_in, noise);
  std::uint32_t m_hat = adc.code;
  if (fault.random_code_fraction > 0.0 && noise.chance(fault.random_code_fraction))
    m_hat = noise.code(1u << cfg.n_hat);

  const std::uint32_t m = degrade_resolution(cfg, m_hat);
  const double v_err = v_in - dac_convert(cfg, dac_code(cfg, m));
  const AmpResult amp = amplifier(cfg, ni, v_err);

  TraceRecord rec{state.cycle, v_in, m_hat, m, amp.v};
  state.saturation_events += static_cast<std::uint64_t>(adc.saturated) + amp.saturated;
  state.v_hold = amp.v;
  state.m_hat = m_hat;
  state.m = m;
  state.noise_stream_position = noise.position();
  ++state.cycle;
  return rec;
}

LoopSimulator::LoopSimulator(const CircuitConfig& cfg, const NonIdealities& ni,
                             std::optional<double> initial, FaultInjection fault)
    : cfg_(cfg), ni_(ni), noise_(ni.seed), fault_(fault) {
  require_valid(cfg_);
  validate(ni_);
  state_.v_hold = initial ? *initial : noise_.uniform(cfg_.interval_lo(), cfg_.interval_hi());
  state_.noise_stream_position = noise_.position();
}

std::vector<TraceRecord> run_trajectory(const CircuitConfig& cfg, const NonIdealities& ni,
                                        std::size_t n_cycles, std::optional<double> initial,
                                        const FaultInjection& fault) {
  if (n_cycles == 0) throw std::invalid_argument("n_cycles must be at least 1");
  LoopSimulator sim(cfg, ni, initial, fault);
  std::vector<TraceRecord> trace;
  trace.reserve(n_cycles);
  for (std::size_t i = 0; i < n_cycles; ++i) trace.push_back(sim.step());
  return trace;
}

void write_trace_csv(std::ostream& os, std::span<const TraceRecord> trace) {
  os << "cycle,v_in,m_hat,m,v_out\n";
  const auto old = os.precision(9);
  for (const auto& r : trace)
    os << r.cycle << ',' << r.v_in << ',' << r.m_hat << ',' << r.m << ',' << r.v_out << '\n';
  os.precision(old);
}

std::vector<TraceRecord> read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("trace CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "cycle,v_in,m_hat,m,v_out")
    throw std::runtime_error("unexpected trace CSV header: " + line);
  std::vector<TraceRecord> trace;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::istringstream ls(line);
    TraceRecord r;
    char c1 = 0, c2 = 0, c3 = 0, c4 = 0;
    if (!(ls >> r.cycle >> c1 >> r.v_in >> c2 >> r.m_hat >> c3 >> r.m >> c4 >> r.v_out) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',')
      throw std::runtime_error("malformed trace CSV line " + std::to_string(lineno));
    trace.push_back(r);
  }
  return trace;
}

void write_raw_codes(std::ostream& os, std::span<const TraceRecord> trace) {
  for (const auto& r : trace) {
    const char le[2] = {static_cast<char>(r.m_hat & 0xFF), static_cast<char>((r.m_hat >> 8) & 0xFF)};
    os.write(le, 2);
  }
}

}  // namespace chaostrng
