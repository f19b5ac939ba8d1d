#include "chaostrng/nist.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

namespace chaostrng::nist {

namespace {

using boost::math::gamma_q;

void require_length(const Options& options, std::size_t n, std::size_t minimum,
                    const char* test) {
  if (options.enforce_min_length && n < minimum)
    throw InsufficientData(std::string(test) + " needs at least " + std::to_string(minimum) +
                           " bits, got " + std::to_string(n));
  if (n == 0) throw InsufficientData(std::string(test) + " on an empty sequence");
}

int floor_log2(std::size_t n) {
  int r = -1;
  while (n) {
    n >>= 1;
    ++r;
  }
  return r;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Counts of the 2^m overlapping m-bit patterns of the sequence extended
// cyclically by its first m - 1 bits.
std::vector<std::uint64_t> cyclic_pattern_counts(std::span<const std::uint8_t> bits, int m) {
  const std::size_t n = bits.size();
  const std::uint32_t mask = (1u << m) - 1u;
  std::vector<std::uint64_t> counts(std::size_t{1} << m, 0);
  std::uint32_t w = 0;
  for (int j = 0; j < m - 1; ++j) w = (w << 1) | (bits[j % n] & 1u);
  for (std::size_t i = 0; i < n; ++i) {
    w = ((w << 1) | (bits[(i + static_cast<std::size_t>(m) - 1) % n] & 1u)) & mask;
    ++counts[w];
  }
  return counts;
}

double psi_squared(std::span<const std::uint8_t> bits, int m) {
  if (m <= 0) return 0.0;
  const double n = static_cast<double>(bits.size());
  double sum = 0.0;
  for (const auto c : cyclic_pattern_counts(bits, m)) sum += static_cast<double>(c) * c;
  return std::ldexp(1.0, m) / n * sum - n;
}

double phi(std::span<const std::uint8_t> bits, int m) {
  if (m <= 0) return 0.0;
  const double n = static_cast<double>(bits.size());
  double sum = 0.0;
  for (const auto c : cyclic_pattern_counts(bits, m)) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    sum += p * std::log(p);
  }
  return sum;
}

}  // namespace

TestReport frequency(std::span<const std::uint8_t> bits, const Options& options) {
  require_length(options, bits.size(), 100, "frequency test");
  const double n = static_cast<double>(bits.size());
  double s = 0.0;
  for (const auto b : bits) s += b ? 1.0 : -1.0;
  const double s_obs = std::abs(s) / std::sqrt(n);
  return make_report("Frequency", s_obs, std::erfc(s_obs / std::numbers::sqrt2), bits.size());
}

TestReport block_frequency(std::span<const std::uint8_t> bits, const Options& options) {
  require_length(options, bits.size(), 100, "block frequency test");
  const std::size_t m = options.block_frequency_m;
  if (m == 0) throw std::invalid_argument("block length must be positive");
  const std::size_t blocks = bits.size() / m;
  if (blocks == 0) throw InsufficientData("block frequency test needs at least one full block");
  double chi = 0.0;
  for (std::size_t i = 0; i < blocks; ++i) {
    std::size_t ones = 0;
    for (std::size_t j = 0; j < m; ++j) ones += bits[i * m + j];
    const double d = static_cast<double>(ones) / static_cast<double>(m) - 0.5;
    chi += d * d;
  }
  chi *= 4.0 * static_cast<double>(m);
  return make_report("BlockFrequency", chi, gamma_q(blocks / 2.0, chi / 2.0), bits.size());
}

TestReport runs(std::span<const std::uint8_t> bits, const Options& options) {
  require_length(options, bits.size(), 100, "runs test");
  const double n = static_cast<double>(bits.size());
  std::size_t ones = 0;
  for (const auto b : bits) ones += b;
  const double pi = static_cast<double>(ones) / n;
  std::size_t v = 1;
  for (std::size_t k = 0; k + 1 < bits.size(); ++k) v += bits[k] != bits[k + 1];
  const auto v_obs = static_cast<double>(v);
  // Frequency prerequisite: a grossly biased sequence fails outright.
  if (std::abs(pi - 0.5) >= 2.0 / std::sqrt(n)) return make_report("Runs", v_obs, 0.0, bits.size());
  const double p = std::erfc(std::abs(v_obs - 2.0 * n * pi * (1.0 - pi)) /
                             (2.0 * std::sqrt(2.0 * n) * pi * (1.0 - pi)));
  return make_report("Runs", v_obs, p, bits.size());
}

double longest_run_cdf(std::size_t block, std::size_t run) {
  if (run >= block) return 1.0;
  // state j: current trailing run of ones, all runs so far <= run
  std::vector<double> state(run + 1, 0.0), next(run + 1);
  state[0] = 1.0;
  for (std::size_t i = 0; i < block; ++i) {
    double total = 0.0;
    for (const double s : state) total += s;
    next[0] = 0.5 * total;
    for (std::size_t j = 1; j <= run; ++j) next[j] = 0.5 * state[j - 1];
    state.swap(next);
  }
  double total = 0.0;
  for (const double s : state) total += s;
  return total;
}

TestReport longest_run(std::span<const std::uint8_t> bits, const Options& options) {
  const std::size_t n = bits.size();
  if (n < 128) throw InsufficientData("longest-run test needs at least 128 bits");
  (void)options;
  // Class probabilities as tabulated in SP800-22 section 3.4, so that p-values
  // agree with the reference implementation. The M = 10^4 row differs from
  // the exact values (longest_run_cdf) by up to 1.6e-3.
  static const std::vector<double> kPi8 = {0.2148, 0.3672, 0.2305, 0.1875};
  static const std::vector<double> kPi128 = {0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124};
  static const std::vector<double> kPi10k = {0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727};
  std::size_t m = 8, lowest = 1;
  const std::vector<double>* table = &kPi8;
  if (n >= 750000) {
    m = 10000;
    lowest = 10;
    table = &kPi10k;
  } else if (n >= 6272) {
    m = 128;
    lowest = 4;
    table = &kPi128;
  }
  const auto& pi = *table;
  const std::size_t classes = pi.size();

  const std::size_t blocks = n / m;
  std::vector<std::uint64_t> nu(classes, 0);
  for (std::size_t b = 0; b < blocks; ++b) {
    std::size_t best = 0, cur = 0;
    for (std::size_t j = 0; j < m; ++j) {
      cur = bits[b * m + j] ? cur + 1 : 0;
      best = std::max(best, cur);
    }
    const std::size_t cls = std::clamp(best, lowest, lowest + classes - 1) - lowest;
    ++nu[cls];
  }
  double chi = 0.0;
  const double nb = static_cast<double>(blocks);
  for (std::size_t i = 0; i < classes; ++i) {
    const double e = nb * pi[i];
    chi += (static_cast<double>(nu[i]) - e) * (static_cast<double>(nu[i]) - e) / e;
  }
  const double dof = static_cast<double>(classes - 1);
  return make_report("LongestRun", chi, gamma_q(dof / 2.0, chi / 2.0), n);
}

TestReport cumulative_sums(std::span<const std::uint8_t> bits, bool forward,
                           const Options& options) {
  require_length(options, bits.size(), 100, "cumulative sums test");
  const std::size_t len = bits.size();
  long long s = 0, z = 0;
  for (std::size_t i = 0; i < len; ++i) {
    s += bits[forward ? i : len - 1 - i] ? 1 : -1;
    z = std::max(z, s < 0 ? -s : s);
  }
  const double n = static_cast<double>(len);
  const double zd = static_cast<double>(z);
  const double sq = std::sqrt(n);
  double p = 1.0;
  const int finish = static_cast<int>((n / zd - 1.0) / 4.0);
  for (int k = static_cast<int>((-n / zd + 1.0) / 4.0); k <= finish; ++k)
    p -= normal_cdf((4 * k + 1) * zd / sq) - normal_cdf((4 * k - 1) * zd / sq);
  for (int k = static_cast<int>((-n / zd - 3.0) / 4.0); k <= finish; ++k)
    p += normal_cdf((4 * k + 3) * zd / sq) - normal_cdf((4 * k + 1) * zd / sq);
  return make_report(forward ? "CumulativeSums-Forward" : "CumulativeSums-Reverse", zd, p, len);
}

std::vector<TestReport> serial(std::span<const std::uint8_t> bits, const Options& options) {
  const int m = options.serial_m;
  if (m < 2 || m > 24) throw std::invalid_argument("serial test block length must be in [2, 24]");
  require_length(options, bits.size(), 100, "serial test");
  if (options.enforce_min_length && m >= floor_log2(bits.size()) - 2)
    throw InsufficientData("serial test with m=" + std::to_string(m) +
                           " needs m < floor(log2 n) - 2");
  const double p0 = psi_squared(bits, m);
  const double p1 = psi_squared(bits, m - 1);
  const double p2 = psi_squared(bits, m - 2);
  const double d1 = p0 - p1;
  const double d2 = p0 - 2.0 * p1 + p2;
  return {make_report("Serial-1", d1, gamma_q(std::ldexp(1.0, m - 2), d1 / 2.0), bits.size()),
          make_report("Serial-2", d2, gamma_q(std::ldexp(1.0, m - 3), d2 / 2.0), bits.size())};
}

TestReport approximate_entropy(std::span<const std::uint8_t> bits, const Options& options) {
  const int m = options.approximate_entropy_m;
  if (m < 1 || m > 23) throw std::invalid_argument("approximate entropy block length must be in [1, 23]");
  require_length(options, bits.size(), 100, "approximate entropy test");
  if (options.enforce_min_length && m >= floor_log2(bits.size()) - 5)
    throw InsufficientData("approximate entropy with m=" + std::to_string(m) +
                           " needs m < floor(log2 n) - 5");
  const double n = static_cast<double>(bits.size());
  const double apen = phi(bits, m) - phi(bits, m + 1);
  const double chi = std::max(0.0, 2.0 * n * (std::numbers::ln2 - apen));
  return make_report("ApproximateEntropy", chi, gamma_q(std::ldexp(1.0, m - 1), chi / 2.0),
                     bits.size());
}

std::vector<TestReport> run_subset(std::span<const std::uint8_t> bits, const Options& options) {
  std::vector<TestReport> out;
  out.push_back(frequency(bits, options));
  out.push_back(block_frequency(bits, options));
  out.push_back(runs(bits, options));
  out.push_back(longest_run(bits, options));
  out.push_back(cumulative_sums(bits, true, options));
  out.push_back(cumulative_sums(bits, false, options));
  for (auto& r : serial(bits, options)) out.push_back(std::move(r));
  out.push_back(approximate_entropy(bits, options));
  return out;
}

}  // namespace chaostrng::nist
