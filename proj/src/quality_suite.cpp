#include "chaostrng/quality_suite.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

namespace chaostrng {

namespace {

constexpr std::size_t kMinTraceLength = 1000;

}  // namespace

TestReport make_report(std::string name, double statistic, double p_value,
                       std::size_t sample_size) {
  p_value = std::clamp(p_value, 0.0, 1.0);
  return TestReport{std::move(name), statistic, p_value, p_value >= kSignificance, sample_size,
                    std::nullopt};
}

std::vector<double> symbol_histogram(std::span<const std::uint32_t> symbols, int k) {
  if (symbols.empty()) throw InsufficientData("symbol histogram of an empty stream");
  if (k < 1) throw std::invalid_argument("alphabet size must be positive");
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(k), 0);
  for (const auto s : symbols) {
    if (s >= static_cast<std::uint32_t>(k))
      throw std::out_of_range("symbol " + std::to_string(s) + " outside alphabet of " +
                              std::to_string(k));
    ++counts[s];
  }
  std::vector<double> freq(counts.size());
  const double n = static_cast<double>(symbols.size());
  for (std::size_t i = 0; i < counts.size(); ++i) freq[i] = static_cast<double>(counts[i]) / n;
  return freq;
}

double chi_square_uniform_p(std::span<const std::uint64_t> counts) {
  if (counts.size() < 2) throw std::invalid_argument("chi-square needs at least two bins");
  std::uint64_t total = 0;
  for (const auto c : counts) total += c;
  if (total == 0) throw InsufficientData("chi-square over zero observations");
  const double expected = static_cast<double>(total) / static_cast<double>(counts.size());
  double chi = 0.0;
  for (const auto c : counts) {
    const double d = static_cast<double>(c) - expected;
    chi += d * d / expected;
  }
  return boost::math::gamma_q((static_cast<double>(counts.size()) - 1.0) / 2.0, chi / 2.0);
}

double marginal_entropy(std::span<const std::uint8_t> bits, int order) {
  if (order < 1 || order > 24) throw std::invalid_argument("entropy order must be in [1, 24]");
  const std::size_t words = bits.size() / static_cast<std::size_t>(order);
  const std::size_t needed = std::size_t{100} << order;
  if (words < needed)
    throw InsufficientData("order-" + std::to_string(order) + " entropy needs " +
                           std::to_string(needed) + " words, got " + std::to_string(words));
  std::vector<std::uint64_t> counts(std::size_t{1} << order, 0);
  for (std::size_t w = 0; w < words; ++w) {
    std::uint32_t v = 0;
    for (int b = 0; b < order; ++b) v |= static_cast<std::uint32_t>(bits[w * order + b] & 1u) << b;
    ++counts[v];
  }
  double h = 0.0;
  for (const auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(words);
    h -= p * std::log2(p);
  }
  return std::min(1.0, h / order);
}

EntropyProfile marginal_entropy_profile(std::span<const std::uint8_t> bits, int max_order) {
  EntropyProfile profile;
  for (int order = 1; order <= max_order; ++order) {
    if (bits.size() / static_cast<std::size_t>(order) < (std::size_t{100} << order)) break;
    profile.per_order.push_back(marginal_entropy(bits, order));
  }
  if (profile.per_order.empty()) marginal_entropy(bits, 1);  // throws with the reason
  profile.minimum = *std::min_element(profile.per_order.begin(), profile.per_order.end());
  return profile;
}

double TransitionEstimate::max_deviation(double expected) const {
  double worst = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (empty_rows[i]) continue;
    for (const double p : probabilities[i]) worst = std::max(worst, std::abs(p - expected));
  }
  return worst;
}

double TransitionEstimate::min_row_uniformity_p() const {
  double worst = 1.0;
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (!empty_rows[i]) worst = std::min(worst, chi_square_uniform_p(counts[i]));
  return worst;
}

TransitionEstimate empirical_transition_matrix(std::span<const int> states, int k) {
  if (states.size() < 2) throw InsufficientData("transition matrix needs at least two states");
  if (k < 1) throw std::invalid_argument("state count must be positive");
  const auto kk = static_cast<std::size_t>(k);
  TransitionEstimate est;
  est.counts.assign(kk, std::vector<std::uint64_t>(kk, 0));
  for (const int s : states)
    if (s < 0 || s >= k) throw std::out_of_range("state " + std::to_string(s) + " outside [0, k)");
  for (std::size_t t = 0; t + 1 < states.size(); ++t) ++est.counts[states[t]][states[t + 1]];

  est.probabilities.assign(kk, std::vector<double>(kk, 0.0));
  est.row_counts.assign(kk, 0);
  est.empty_rows.assign(kk, false);
  for (std::size_t i = 0; i < kk; ++i) {
    for (const auto c : est.counts[i]) est.row_counts[i] += c;
    if (est.row_counts[i] == 0) {
      est.empty_rows[i] = true;
      continue;
    }
    for (std::size_t j = 0; j < kk; ++j)
      est.probabilities[i][j] =
          static_cast<double>(est.counts[i][j]) / static_cast<double>(est.row_counts[i]);
  }
  return est;
}

std::vector<int> trace_states(std::span<const TraceRecord> trace, const CircuitConfig& cfg) {
  const auto partition = markov_partition(cfg);
  std::vector<int> states;
  states.reserve(trace.size());
  for (const auto& r : trace)
    if (r.m >= partition.m_min && r.m <= partition.m_max)
      states.push_back(state_from_code(partition, r.m));
  return states;
}

std::uint32_t default_branch_tolerance(const CircuitConfig& cfg) {
  return 2u << (cfg.n_hat - cfg.n);
}

std::pair<std::int64_t, std::int64_t> predicted_branch(const CircuitConfig& cfg,
                                                       std::uint32_t m_hat) {
  const double lsb = cfg.raw_step();
  const double dac = dac_convert(cfg, dac_code(cfg, degrade_resolution(cfg, m_hat)));
  const double lo = std::clamp(cfg.k * (m_hat * lsb - dac + cfg.v_b), 0.0, cfg.v_ref);
  const double hi = std::clamp(cfg.k * ((m_hat + 1.0) * lsb - dac + cfg.v_b), 0.0, cfg.v_ref);
  const auto top = (std::int64_t{1} << cfg.n_hat) - 1;
  const auto code_lo = static_cast<std::int64_t>(std::floor(lo / lsb - 1e-9));
  const auto code_hi = static_cast<std::int64_t>(std::ceil(hi / lsb + 1e-9)) - 1;
  return {std::clamp<std::int64_t>(code_lo, 0, top), std::clamp<std::int64_t>(code_hi, 0, top)};
}

Reconstruction reconstruct_map(std::span<const TraceRecord> trace, const CircuitConfig& cfg,
                               std::optional<std::uint32_t> tolerance_codes) {
  if (trace.size() < kMinTraceLength)
    throw InsufficientData("map reconstruction needs at least 1000 cycles");
  require_valid(cfg);
  Reconstruction rec;
  rec.map.n_hat = cfg.n_hat;
  rec.tolerance_codes = tolerance_codes.value_or(default_branch_tolerance(cfg));
  const auto tol = static_cast<std::int64_t>(rec.tolerance_codes);

  std::vector<std::pair<std::int64_t, std::int64_t>> branch(std::size_t{1} << cfg.n_hat);
  for (std::uint32_t c = 0; c < branch.size(); ++c) branch[c] = predicted_branch(cfg, c);

  std::uint64_t on_branch = 0;
  for (std::size_t t = 0; t + 1 < trace.size(); ++t) {
    const auto from = trace[t].m_hat;
    const auto to = trace[t + 1].m_hat;
    ++rec.map.counts[{from, to}];
    if (from >= branch.size()) continue;
    const auto [lo, hi] = branch[from];
    if (static_cast<std::int64_t>(to) >= lo - tol && static_cast<std::int64_t>(to) <= hi + tol)
      ++on_branch;
  }
  rec.map.total = trace.size() - 1;
  rec.branch_score = static_cast<double>(on_branch) / static_cast<double>(rec.map.total);
  return rec;
}

std::string describe_flags(std::uint8_t flags) {
  if (flags == 0) return "none";
  std::string out;
  auto add = [&](const char* name) {
    if (!out.empty()) out += ',';
    out += name;
  };
  if (flags & kStuck) add("STUCK");
  if (flags & kOutOfRange) add("OUT_OF_RANGE");
  if (flags & kOffBranch) add("OFF_BRANCH");
  if (flags & kSaturation) add("SATURATION");
  return out;
}

TamperReport tamper_check(std::span<const TraceRecord> trace, const CircuitConfig& cfg,
                          std::uint64_t saturation_events, const TamperOptions& options) {
  if (trace.size() < kMinTraceLength)
    throw InsufficientData("tamper check needs at least 1000 cycles");
  const auto partition = markov_partition(cfg);
  TamperReport report;

  std::vector<std::uint64_t> occupancy(static_cast<std::size_t>(partition.k), 0);
  for (const auto& r : trace) {
    if (r.m < partition.m_min || r.m > partition.m_max) {
      ++report.out_of_range;
      continue;
    }
    ++occupancy[state_from_code(partition, r.m)];
  }
  report.max_state_occupancy =
      static_cast<double>(*std::max_element(occupancy.begin(), occupancy.end())) /
      static_cast<double>(trace.size());
  report.branch_score = reconstruct_map(trace, cfg, options.tolerance_codes).branch_score;
  report.saturation_events = saturation_events;

  if (report.max_state_occupancy > options.stuck_occupancy) report.flags |= kStuck;
  if (report.out_of_range > 0) report.flags |= kOutOfRange;
  if (report.branch_score < options.min_branch_score) report.flags |= kOffBranch;
  if (saturation_events > 0) report.flags |= kSaturation;
  return report;
}

}  // namespace chaostrng
