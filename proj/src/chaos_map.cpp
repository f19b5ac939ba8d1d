#include "chaostrng/chaos_map.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace chaostrng {

namespace {

// Relative slack for comparisons against voltage bounds.
constexpr double kBoundSlack = 1e-12;

std::string describe(const ValidationReport& report) {
  std::ostringstream os;
  os << "invalid circuit configuration:";
  for (const auto& v : report.violations) os << " [" << v.field << "] " << v.message << ";";
  return os.str();
}

template <typename T>
std::string str(T value) {
  std::ostringstream os;
  os.precision(12);
  os << value;
  return os.str();
}

}  // namespace

double CircuitConfig::step() const { return v_ref / std::ldexp(1.0, n); }
double CircuitConfig::raw_step() const { return v_ref / std::ldexp(1.0, n_hat); }
double CircuitConfig::interval_lo() const { return k * v_b; }
double CircuitConfig::interval_hi() const { return k * (v_b + step()); }

CircuitConfig prototype_config() { return CircuitConfig{}; }

CircuitConfig illustrative_config() {
  CircuitConfig cfg;
  cfg.n_hat = 3;
  cfg.n = 3;
  cfg.n_tilde = 3;
  cfg.m_bits = 2;
  cfg.k = 4;
  cfg.v_ref = 10.0;
  cfg.v_b = 0.4;
  return cfg;
}

ConfigError::ConfigError(ValidationReport report)
    : std::invalid_argument(describe(report)), report_(std::move(report)) {}

ValidationReport validate_config(const CircuitConfig& cfg, const ValidationOptions& options) {
  ValidationReport r;
  auto violation = [&](std::string field, std::string msg) {
    r.violations.push_back({std::move(field), std::move(msg)});
  };
  auto advisory = [&](std::string field, std::string msg) {
    r.advisories.push_back({std::move(field), std::move(msg)});
  };

  if (cfg.n_hat < 1 || cfg.n_hat > 16)
    violation("n_hat", "ADC resolution must be in [1, 16] bits, got " + str(cfg.n_hat));
  if (cfg.n < 1) violation("n", "effective resolution must be at least 1 bit");
  if (cfg.n_tilde < cfg.n || cfg.n_tilde > cfg.n_hat)
    violation("n_tilde", "DAC resolution must satisfy n <= n_tilde <= n_hat, got n=" +
                             str(cfg.n) + " n_tilde=" + str(cfg.n_tilde) +
                             " n_hat=" + str(cfg.n_hat));
  if (cfg.m_bits < 1) violation("m_bits", "symbol width must be at least 1 bit");
  if (cfg.m_bits >= cfg.n)
    violation("m_bits", "symbol width must be strictly less than n, got m_bits=" +
                            str(cfg.m_bits) + " n=" + str(cfg.n));
  if (cfg.k < 2) violation("k", "gain must be at least 2, got " + str(cfg.k));
  if (cfg.n >= 1 && cfg.n < 31 && cfg.k > (1 << cfg.n))
    violation("k", "gain must not exceed 2^n = " + str(1 << cfg.n) + ", got " + str(cfg.k));
  if (cfg.m_bits >= 1 && cfg.m_bits < 31 && cfg.k != (1 << cfg.m_bits))
    violation("k", "gain must equal 2^m_bits = " + str(1 << cfg.m_bits) + ", got " + str(cfg.k));
  if (!(cfg.v_ref > 0.0) || !std::isfinite(cfg.v_ref))
    violation("v_ref", "reference voltage must be positive and finite");
  if (!std::isfinite(cfg.v_b) || cfg.v_b < 0.0) violation("v_b", "offset must be >= 0 V");

  const bool electrical_ok = cfg.v_ref > 0.0 && std::isfinite(cfg.v_ref) && cfg.k >= 1 &&
                             cfg.n >= 1 && cfg.n < 31 && std::isfinite(cfg.v_b);
  if (!electrical_ok) return r;

  const double step = cfg.step();
  const double vb_max = cfg.v_ref / cfg.k - step;
  bool bound_ok = true;
  if (cfg.v_b > vb_max + kBoundSlack * cfg.v_ref) {
    bound_ok = false;
    violation("v_b", "offset " + str(cfg.v_b) + " V exceeds v_ref/k - v_ref/2^n = " +
                         str(vb_max) + " V");
  }
  const double lo = cfg.interval_lo();
  const double hi = cfg.interval_hi();
  if (bound_ok && cfg.v_b >= 0.0 && (lo < 0.0 || hi > cfg.v_ref * (1.0 + kBoundSlack)))
    violation("v_b", "loop interval [" + str(lo) + ", " + str(hi) + "] V leaves [0, v_ref]");

  if (cfg.n < 3 || cfg.n > 5)
    advisory("n", "effective resolution " + str(cfg.n) + " outside the recommended 3-5 bits");
  if (cfg.m_bits < 2 || cfg.m_bits > 4)
    advisory("m_bits", "symbol width " + str(cfg.m_bits) + " outside the recommended 2-4 bits");

  if (r.violations.empty()) {
    const double pos = lo / step;
    const double frac = pos - std::floor(pos);
    if (std::abs(frac - 0.5) > options.halfway_tolerance + 1e-9)
      advisory("v_b", "k*v_b sits " + str(frac) +
                          " steps above a code transition; halfway (0.5) keeps clearance");

    const auto [rail_lo, rail_hi] = options.rails.value_or(std::pair{0.0, cfg.v_ref});
    const double margin = options.clearance_steps * step;
    const double clearance = std::min(lo - rail_lo, rail_hi - hi);
    if (clearance < margin - 1e-12 * cfg.v_ref)
      advisory("v_b", "loop interval clearance to rails is " + str(clearance) +
                          " V, below the " + str(margin) + " V margin");
  }
  return r;
}

void require_valid(const CircuitConfig& cfg) {
  auto report = validate_config(cfg);
  if (!report.ok()) throw ConfigError(std::move(report));
}

MapParams map_params(const CircuitConfig& cfg) {
  return MapParams{cfg.k, cfg.k * std::ldexp(1.0, cfg.n) * cfg.v_b / cfg.v_ref};
}

double iterate_map(const MapParams& params, double x) {
  if (params.alpha < 2) throw std::invalid_argument("shift map needs alpha >= 2");
  if (!(params.beta >= 0.0 && params.beta < params.alpha))
    throw std::invalid_argument("shift map needs beta in [0, alpha)");
  if (!(x >= 0.0 && x < 1.0)) throw std::domain_error("map state must lie in [0, 1)");
  const double y = params.alpha * x + params.beta;
  const double r = y - std::floor(y);
  return r < 1.0 ? r : 0.0;
}

Matrix transition_matrix(const MapParams& params) {
  if (params.alpha < 2) throw std::invalid_argument("shift map needs alpha >= 2");
  const auto a = static_cast<std::size_t>(params.alpha);
  return Matrix(a, std::vector<double>(a, 1.0 / params.alpha));
}

double voltage_to_x(const CircuitConfig& cfg, double v) {
  return std::ldexp(1.0, cfg.n) / (cfg.k * cfg.v_ref) * (v - cfg.k * cfg.v_b);
}

double x_to_voltage(const CircuitConfig& cfg, double x) {
  return cfg.k * cfg.v_ref / std::ldexp(1.0, cfg.n) * x + cfg.k * cfg.v_b;
}

CodeBounds markov_bounds(const CircuitConfig& cfg) {
  require_valid(cfg);
  const auto m_min =
      static_cast<std::int64_t>(std::floor(std::ldexp(1.0, cfg.n) / cfg.v_ref * cfg.k * cfg.v_b));
  return {m_min, m_min + cfg.k};
}

MarkovPartition markov_partition(const CircuitConfig& cfg) {
  const auto bounds = markov_bounds(cfg);
  const double anchor_v = static_cast<double>(bounds.m_min + 1) * cfg.step();
  double p = voltage_to_x(cfg, anchor_v);
  if (p >= 1.0) p -= 1.0;
  return {cfg.k, bounds.m_min, bounds.m_max, p};
}

int state_from_code(const MarkovPartition& partition, std::int64_t m) {
  if (m < partition.m_min || m > partition.m_max)
    throw std::out_of_range("code " + std::to_string(m) + " outside [" +
                            std::to_string(partition.m_min) + ", " +
                            std::to_string(partition.m_max) + "]");
  if (m == partition.m_min || m == partition.m_max) return partition.k - 1;
  return static_cast<int>(m - partition.m_min - 1);
}

int partition_index(int alpha, double p, double x) {
  double u = std::fmod(x - p, 1.0);
  if (u < 0.0) u += 1.0;
  const int i = static_cast<int>(std::floor(alpha * u));
  return i < alpha ? i : alpha - 1;
}

}  // namespace chaostrng
