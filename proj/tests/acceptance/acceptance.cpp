// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "chaostrng/bitstream.hpp"
#include "chaostrng/chaos_map.hpp"
#include "chaostrng/device_proto.hpp"
#include "chaostrng/mixed_signal_sim.hpp"
#include "chaostrng/nist.hpp"
#include "chaostrng/quality_suite.hpp"

using namespace chaostrng;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const Outcome& o) {
  std::cout << "CRITERION " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << title << "  [" << o.detail
            << "]" << std::endl;
  failures += !o.pass;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

Outcome symbol_balance() {
  const auto cfg = prototype_config();
  const auto t0 = Clock::now();
  EntropySource src(cfg, NonIdealities::defaults(cfg, 1), PostProcess::none);
  const auto symbols = src.next_symbols(1000000);
  const auto freq = symbol_histogram(symbols, cfg.k);
  std::vector<std::uint64_t> counts(freq.size());
  for (const auto s : symbols) ++counts[s];
  const double p = chi_square_uniform_p(counts);
  const double elapsed = seconds_since(t0);
  bool ok = p >= 0.001 && elapsed < 10.0;
  std::string d = "freq";
  for (const double f : freq) {
    ok &= f >= 0.24 && f <= 0.26;
    d += " " + fmt(f, 5);
  }
  return {ok, d + ", chi2 p " + fmt(p) + ", " + fmt(elapsed, 3) + " s"};
}

Outcome raw_entropy() {
  const auto cfg = prototype_config();
  EntropySource src(cfg, NonIdealities::defaults(cfg, 2), PostProcess::none);
  const auto bits = src.next_bits(10000000);
  const auto profile = marginal_entropy_profile(bits, 8);
  std::string d = "H_L/L for L=1..8:";
  for (const double h : profile.per_order) d += " " + fmt(h, 6);
  return {profile.per_order.size() == 8 && profile.minimum >= 0.99, d + ", min " + fmt(profile.minimum, 6)};
}

struct Conformance {
  std::map<std::string, int> passes;
  std::vector<std::string> order;
};

Conformance run_sequences(PostProcess mode, std::uint64_t seed) {
  const auto cfg = prototype_config();
  EntropySource src(cfg, NonIdealities::defaults(cfg, seed), mode);
  Conformance c;
  for (int s = 0; s < 10; ++s) {
    const auto bits = src.next_bits(1000000);
    for (const auto& r : nist::run_subset(bits)) {
      if (!c.passes.count(r.name)) c.order.push_back(r.name);
      c.passes[r.name] += r.pass;
    }
  }
  return c;
}

Outcome post_processing() {
  std::string d;
  bool corrected_ok = false;
  const std::pair<PostProcess, std::uint64_t> modes[] = {
      {PostProcess::none, 3}, {PostProcess::von_neumann, 4}, {PostProcess::xor_decimate, 5}};
  for (const auto& [mode, seed] : modes) {
    const auto c = run_sequences(mode, seed);
    bool all = true;
    std::string row;
    for (const auto& name : c.order) {
      all &= c.passes.at(name) >= 8;
      row += " " + name + "=" + std::to_string(c.passes.at(name));
    }
    d += (d.empty() ? "" : "; ") + to_string(mode) + (all ? " conforms:" : " does not conform:") + row;
    if (mode != PostProcess::none) corrected_ok |= all;
  }
  return {corrected_ok, d};
}

Outcome conjugacy() {
  const auto cfg = illustrative_config();
  const auto params = map_params(cfg);
  const auto ni = NonIdealities::ideal();
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // Distance of x from the nearest point where alpha * x + beta is an integer.
  auto near_discontinuity = [&](double x) {
    const double y = params.alpha * x + params.beta;
    return std::abs(y - std::round(y)) / params.alpha < 1e-6;
  };
  constexpr int kStarts = 10000, kSteps = 20;
  double worst = 0.0;
  std::uint64_t checked = 0, skipped = 0;
  for (int s = 0; s < kStarts; ++s) {
    LoopSimulator sim(cfg, ni, x_to_voltage(cfg, u(rng)));
    for (int t = 0; t < kSteps; ++t) {
      const auto rec = sim.step();
      const double x = voltage_to_x(cfg, rec.v_in);
      if (x < 0.0 || x >= 1.0 || near_discontinuity(x)) {
        ++skipped;
        continue;
      }
      worst = std::max(worst, std::abs(voltage_to_x(cfg, rec.v_out) - iterate_map(params, x)));
      ++checked;
    }
  }
  return {worst <= 1e-9 && checked > 0,
          std::to_string(checked) + " steps checked, " + std::to_string(skipped) + " near discontinuities, max |dx| " +
              fmt(worst, 3)};
}

Outcome markov_structure() {
  const auto cfg = illustrative_config();
  const auto part = markov_partition(cfg);
  const std::map<std::int64_t, int> expected = {{1, 3}, {5, 3}, {2, 0}, {3, 1}, {4, 2}};
  bool mapping = part.m_min == 1 && part.m_max == 5;
  for (const auto& [code, state] : expected) mapping &= state_from_code(part, code) == state;

  std::string d = std::string("Fig. 4 mapping ") + (mapping ? "exact" : "WRONG");
  bool ok = mapping;
  for (const auto& [name, c] : {std::pair{"illustrative", cfg}, std::pair{"prototype", prototype_config()}}) {
    const auto trace = run_trajectory(c, NonIdealities::defaults(c, 7), 1000000);
    const auto states = trace_states(trace, c);
    const auto est = empirical_transition_matrix(states, c.k);
    const double dev = est.max_deviation(1.0 / c.k);
    ok &= dev <= 0.01;
    d += std::string(", ") + name + " max |P-1/4| " + fmt(dev, 4) + " (" +
         std::to_string(trace.size() - states.size()) + " out-of-range codes)";
  }
  return {ok, d};
}

Outcome reconstruction() {
  const auto cfg = prototype_config();
  const auto clean = run_trajectory(cfg, NonIdealities::defaults(cfg, 8), 100000);
  const auto score = reconstruct_map(clean, cfg).branch_score;
  const auto healthy = tamper_check(clean, cfg);

  FaultInjection fault;
  fault.random_code_fraction = 0.1;
  const auto dirty = run_trajectory(cfg, NonIdealities::defaults(cfg, 8), 100000, std::nullopt, fault);
  const auto tampered = tamper_check(dirty, cfg);

  RunSettings settings;
  settings.noise.seed = 8;
  VirtualDevice device(settings);
  const Frame ask{static_cast<std::uint8_t>(Command::get_random), {0x20, 0x00}};
  const bool served = device.handle(ask).payload.size() == 32;
  device.inject_fault(fault);
  const bool locked = device.handle(ask) == error_frame(ErrorCode::tamper_lockout);

  return {score >= 0.99 && healthy.healthy() && tampered.flags != 0 && served && locked,
          "clean score " + fmt(score, 5) + " flags " + describe_flags(healthy.flags) + "; injected score " +
              fmt(tampered.branch_score, 5) + " flags " + describe_flags(tampered.flags) + "; GET_RANDOM " +
              (locked ? "ERROR 0x03" : "not locked")};
}

Outcome protocol() {
  std::mt19937_64 rng(9);
  std::uint64_t round_trip_failures = 0;
  for (int i = 0; i < 100000; ++i) {
    Frame f;
    f.cmd = static_cast<std::uint8_t>(rng());
    f.payload.resize(rng() % (kMaxPayload + 1) / 4);
    for (auto& b : f.payload) b = static_cast<std::uint8_t>(rng());
    const auto r = decode_frame(encode_frame(f));
    round_trip_failures += !(std::holds_alternative<Frame>(r) && std::get<Frame>(r) == f);
  }

  std::uint64_t crashes = 0, frames = 0, errors = 0;
  std::vector<std::uint8_t> fuzz(1000000);
  for (auto& b : fuzz) b = static_cast<std::uint8_t>(rng());
  try {
    FrameDecoder decoder;
    RunSettings settings;
    VirtualDevice device(settings);
    for (std::size_t off = 0; off < fuzz.size(); off += 4096) {
      decoder.feed(std::span(fuzz).subspan(off, std::min<std::size_t>(4096, fuzz.size() - off)));
      while (auto r = decoder.next()) {
        if (const auto* f = std::get_if<Frame>(&*r)) {
          ++frames;
          device.handle(*f);
        } else {
          ++errors;
        }
      }
    }
    errors += decoder.finish().size();
    for (std::size_t off = 0; off + 16 < fuzz.size(); off += 997) (void)decode_frame(std::span(fuzz).subspan(off, 16));
    // Random requests straight into the device handler.
    for (int i = 0; i < 20000; ++i) {
      Frame f{static_cast<std::uint8_t>(rng() % 8), std::vector<std::uint8_t>(rng() % 4)};
      for (auto& b : f.payload) b = static_cast<std::uint8_t>(rng() % 3 == 0 ? rng() : rng() % 4);
      if (f.cmd == static_cast<std::uint8_t>(Command::set_config)) continue;
      device.handle(f);
    }
  } catch (const std::exception& e) {
    ++crashes;
    std::cerr << "fuzz exception: " << e.what() << "\n";
  }
  const std::string check = "123456789";
  const auto crc = crc16_ccitt_false(std::span(reinterpret_cast<const std::uint8_t*>(check.data()), check.size()));
  char crc_hex[8];
  std::snprintf(crc_hex, sizeof(crc_hex), "0x%04X", crc);
  return {round_trip_failures == 0 && crashes == 0 && crc == 0x29B1,
          "100000 round trips, " + std::to_string(round_trip_failures) + " failures; 10^6 fuzz octets, " +
              std::to_string(errors) + " rejects, " + std::to_string(frames) + " frames, " +
              std::to_string(crashes) + " crashes; CRC(\"123456789\") " + crc_hex};
}

Outcome throughput() {
  const auto cfg = prototype_config();
  LoopSimulator sim(cfg, NonIdealities::defaults(cfg, 10));
  constexpr std::uint64_t kSteps = 5000000;
  std::uint64_t sink = 0;
  const auto t0 = Clock::now();
  for (std::uint64_t i = 0; i < kSteps; ++i) sink += sim.step().m;
  const double elapsed = seconds_since(t0);
  const double rate = static_cast<double>(kSteps) / elapsed;
  return {rate >= 1e6, fmt(rate / 1e6, 4) + " M loop_step/s (checksum " + std::to_string(sink % 1000) +
                           "); hardware 32 kbit/s and physical tamper claims are not reproducible in software"};
}

}  // namespace

int main() {
  std::cout << "chaostrng acceptance run (simulated source, seeded PRNG noise)" << std::endl;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"symbol balance over 10^6 symbols", symbol_balance},
      {"raw marginal entropy over 10^7 bits", raw_entropy},
      {"NIST subset after correction, 10 x 10^6 bits", post_processing},
      {"conjugacy of the zero-noise loop with the shift map", conjugacy},
      {"Markov structure and transition matrix", markov_structure},
      {"map reconstruction and tamper lockout", reconstruction},
      {"frame codec robustness", protocol},
      {"loop_step throughput floor", throughput},
  };
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    report(static_cast<int>(i + 1), criteria[i].first, o);
  }
  std::cout << (failures ? std::to_string(failures) + " criterion(s) failed" : "all criteria passed") << std::endl;
  return failures ? 1 : 0;
}
