#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "chaostrng/bitstream.hpp"
#include "chaostrng/device_proto.hpp"
#include "chaostrng/nist.hpp"
#include "chaostrng/quality_suite.hpp"
#include "chaostrng/settings.hpp"

namespace chaostrng::cli {

namespace {

using nlohmann::json;

constexpr const char* kSimulationNote =
    "note: output comes from a seeded software model of the loop; it is a "
    "deterministic PRNG, not a hardware entropy source";

std::string sidecar_path(const std::string& artifact) { return artifact + ".run.ini"; }

RunSettings load_common(const CommonOptions& o) {
  RunSettings s = o.config.empty() ? RunSettings{} : load_settings(o.config);
  if (o.seed) s.noise.seed = *o.seed;
  return s;
}

// Violations abort the run; advisories are reported and the run continues.
void check_settings(const RunSettings& s) {
  auto report = validate_config(s.circuit, s.validation);
  for (const auto& a : report.advisories)
    std::cerr << "advisory [" << a.field << "] " << a.message << "\n";
  if (!report.ok()) throw ConfigError(std::move(report));
  validate(s.noise);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

void close_out(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) throw IoError("failed writing " + path);
}

void write_sidecar(const std::string& artifact, const RunSettings& s, const std::string& command,
                   const std::map<std::string, std::string>& run_info) {
  const auto path = sidecar_path(artifact);
  auto out = open_out(path);
  out << "# chaostrng " << command << " run for " << std::filesystem::path(artifact).filename().string()
      << "\n# pass this file to --config to reproduce the run\n";
  for (const auto& [key, value] : run_info) out << "# " << key << ": " << value << "\n";
  out << format_settings(s);
  close_out(out, path);
}

json settings_json(const RunSettings& s) {
  const auto& c = s.circuit;
  const auto& ni = s.noise;
  json j = {{"n_hat", c.n_hat},
            {"n", c.n},
            {"m_bits", c.m_bits},
            {"n_tilde", c.n_tilde},
            {"v_ref", c.v_ref},
            {"v_b", c.v_b},
            {"k", c.k},
            {"sigma_th", ni.sigma_th},
            {"sigma_adc", ni.sigma_adc},
            {"gain_tol", ni.gain_tol},
            {"offset_err", ni.offset_err},
            {"lsb_flip_prob", ni.lsb_flip_prob},
            {"droop", ni.droop},
            {"seed", ni.seed},
            {"post", to_string(s.post)}};
  if (ni.rails) {
    j["rail_lo"] = ni.rails->lo;
    j["rail_hi"] = ni.rails->hi;
  }
  return j;
}

json report_json(const TestReport& r) {
  return {{"name", r.name},
          {"statistic", r.statistic},
          {"p_value", r.p_value},
          {"pass", r.pass},
          {"sample_size", r.sample_size}};
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading " + path);
  return data;
}

}  // namespace

int run_simulate(const SimulateOptions& o) {
  if (o.cycles == 0) throw UsageError("--cycles must be at least 1");
  const RunSettings s = load_common(o.common);
  check_settings(s);

  LoopSimulator sim(s.circuit, s.noise);
  const double v0 = sim.state().v_hold;
  std::vector<TraceRecord> trace;
  trace.reserve(o.cycles);
  for (std::uint64_t i = 0; i < o.cycles; ++i) trace.push_back(sim.step());

  auto out = open_out(o.trace);
  write_trace_csv(out, trace);
  close_out(out, o.trace);
  std::ostringstream v0s;
  v0s << std::setprecision(17) << v0;
  const std::map<std::string, std::string> info = {{"cycles", std::to_string(o.cycles)},
                                                   {"initial_v_hold", v0s.str()}};
  write_sidecar(o.trace, s, "simulate", info);
  if (!o.raw.empty()) {
    auto raw = open_out(o.raw);
    write_raw_codes(raw, trace);
    close_out(raw, o.raw);
    write_sidecar(o.raw, s, "simulate", info);
  }

  std::vector<std::uint64_t> counts(std::size_t{1} << s.circuit.n, 0);
  for (const auto& r : trace) ++counts[r.m];
  std::cout << kSimulationNote << "\n"
            << "simulated " << o.cycles << " cycles, seed " << s.noise.seed << ", trace " << o.trace
            << "\nsaturation events: " << sim.state().saturation_events << "\ncode frequencies:\n";
  for (std::size_t m = 0; m < counts.size(); ++m)
    if (counts[m])
      std::cout << "  m=" << m << " symbol=" << extract_symbol(static_cast<std::uint32_t>(m), s.circuit.m_bits)
                << " freq=" << std::fixed << std::setprecision(4)
                << static_cast<double>(counts[m]) / static_cast<double>(o.cycles) << "\n";
  return kOk;
}

int run_generate(const GenerateOptions& o) {
  if (o.bits % 8 != 0) throw UsageError("--bits must be a multiple of 8");
  RunSettings s = load_common(o.common);
  if (o.post) s.post = parse_post_process(*o.post);
  check_settings(s);

  EntropySource src(s.circuit, s.noise, s.post);
  const auto bytes = src.next_bytes(o.bits / 8);
  auto out = open_out(o.out);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  close_out(out, o.out);
  const auto cycles = src.simulator().state().cycle;
  write_sidecar(o.out, s, "generate",
                {{"bits", std::to_string(o.bits)}, {"cycles", std::to_string(cycles)}});

  std::cout << kSimulationNote << "\n"
            << "wrote " << o.bits << " bits to " << o.out << " (post " << to_string(s.post) << ", seed "
            << s.noise.seed << ", " << cycles << " loop cycles)\n";
  return kOk;
}

int run_test(const TestOptions& o) {
  const auto bits = bytes_to_bits(read_file(o.in));
  if (bits.empty()) throw UsageError("input file " + o.in + " is empty");
  const std::size_t seq_len = o.seq_len ? o.seq_len : bits.size();
  const std::size_t sequences = bits.size() / seq_len;
  if (sequences == 0)
    throw UsageError("--seq-len " + std::to_string(seq_len) + " exceeds the " + std::to_string(bits.size()) +
                     " bits in " + o.in);

  json report;
  report["input"] = o.in;
  report["bits"] = bits.size();
  report["sequence_length"] = seq_len;
  report["significance"] = kSignificance;
  const auto sidecar = sidecar_path(o.in);
  if (std::filesystem::exists(sidecar)) {
    const auto s = load_settings(sidecar);
    report["run_settings"] = settings_json(s);
    report["seed"] = s.noise.seed;
    std::ifstream in(sidecar);
    std::ostringstream text;
    text << in.rdbuf();
    report["run_settings_text"] = text.str();
  } else {
    report["run_settings"] = nullptr;
    report["seed"] = nullptr;
  }

  using Test = std::function<std::vector<TestReport>(std::span<const std::uint8_t>)>;
  const std::vector<std::pair<std::string, Test>> tests = {
      {"Frequency", [](auto b) { return std::vector{nist::frequency(b)}; }},
      {"BlockFrequency", [](auto b) { return std::vector{nist::block_frequency(b)}; }},
      {"Runs", [](auto b) { return std::vector{nist::runs(b)}; }},
      {"LongestRun", [](auto b) { return std::vector{nist::longest_run(b)}; }},
      {"CumulativeSums-Forward", [](auto b) { return std::vector{nist::cumulative_sums(b, true)}; }},
      {"CumulativeSums-Reverse", [](auto b) { return std::vector{nist::cumulative_sums(b, false)}; }},
      {"Serial", [](auto b) { return nist::serial(b); }},
      {"ApproximateEntropy", [](auto b) { return std::vector{nist::approximate_entropy(b)}; }},
  };

  std::map<std::string, std::pair<int, int>> tally;  // name -> (passed, run)
  std::vector<std::string> order;
  json seqs = json::array();
  for (std::size_t i = 0; i < sequences; ++i) {
    const auto seq = std::span<const std::uint8_t>(bits).subspan(i * seq_len, seq_len);
    json results = json::array();
    for (const auto& [name, run] : tests) {
      try {
        for (const auto& r : run(seq)) {
          results.push_back(report_json(r));
          if (!tally.count(r.name)) order.push_back(r.name);
          auto& t = tally[r.name];
          t.first += r.pass;
          ++t.second;
        }
      } catch (const InsufficientData& e) {
        results.push_back({{"name", name}, {"skipped", e.what()}});
      }
    }
    seqs.push_back({{"index", i}, {"tests", results}});
  }
  report["sequences"] = seqs;

  json summary = json::array();
  bool all_pass = true;
  for (const auto& name : order) {
    const auto [passed, run] = tally[name];
    summary.push_back({{"name", name}, {"passed", passed}, {"run", run}});
    all_pass &= passed == run;
  }
  report["summary"] = summary;

  try {
    const auto profile = marginal_entropy_profile(bits, 8);
    report["marginal_entropy"] = {{"per_order", profile.per_order}, {"minimum", profile.minimum}};
  } catch (const InsufficientData& e) {
    report["marginal_entropy"] = {{"skipped", e.what()}};
  }

  auto out = open_out(o.report);
  out << report.dump(2) << "\n";
  close_out(out, o.report);

  std::cout << "tested " << bits.size() << " bits from " << o.in << " as " << sequences << " sequence(s) of "
            << seq_len << " bits\n";
  for (const auto& name : order) {
    const auto [passed, run] = tally[name];
    std::cout << "  " << std::left << std::setw(24) << name << passed << "/" << run << " passed\n";
  }
  if (report["marginal_entropy"].contains("minimum"))
    std::cout << "  marginal entropy (min over orders): " << std::fixed << std::setprecision(5)
              << report["marginal_entropy"]["minimum"].get<double>() << " bits/bit\n";
  std::cout << (all_pass ? "all tests passed" : "some tests failed") << "; report " << o.report << "\n";
  return kOk;
}

int run_reconstruct(const ReconstructOptions& o) {
  RunSettings s;
  if (!o.config.empty())
    s = load_settings(o.config);
  else if (std::filesystem::exists(sidecar_path(o.trace)))
    s = load_settings(sidecar_path(o.trace));
  check_settings(s);

  std::ifstream in(o.trace);
  if (!in) throw IoError("cannot open " + o.trace);
  std::vector<TraceRecord> trace;
  try {
    trace = read_trace_csv(in);
  } catch (const std::runtime_error& e) {
    throw IoError(o.trace + ": " + e.what());
  }
  for (const auto& r : trace)
    if (r.m_hat >> s.circuit.n_hat)
      throw UsageError("trace code " + std::to_string(r.m_hat) + " does not fit the configured " +
                       std::to_string(s.circuit.n_hat) + "-bit ADC; pass the matching --config");

  const auto rec = reconstruct_map(trace, s.circuit);
  const auto tamper = tamper_check(trace, s.circuit);

  auto out = open_out(o.out);
  out << "m_hat_n,m_hat_next,count\n";
  for (const auto& [key, count] : rec.map.counts) out << key.first << ',' << key.second << ',' << count << '\n';
  close_out(out, o.out);
  const std::map<std::string, std::string> info = {{"trace", o.trace}, {"cycles", std::to_string(trace.size())}};
  write_sidecar(o.out, s, "reconstruct", info);

  if (!o.hist.empty()) {
    std::vector<std::uint64_t> counts(std::size_t{1} << s.circuit.n, 0);
    for (const auto& r : trace) ++counts[r.m];
    auto hist = open_out(o.hist);
    hist << "m,symbol,count,frequency\n";
    hist << std::setprecision(9);
    for (std::size_t m = 0; m < counts.size(); ++m)
      hist << m << ',' << extract_symbol(static_cast<std::uint32_t>(m), s.circuit.m_bits) << ',' << counts[m]
           << ',' << static_cast<double>(counts[m]) / static_cast<double>(trace.size()) << '\n';
    close_out(hist, o.hist);
    write_sidecar(o.hist, s, "reconstruct", info);
  }

  std::cout << "reconstructed map from " << trace.size() << " cycles: " << rec.map.counts.size()
            << " distinct transitions\n"
            << "branch-fit score: " << std::fixed << std::setprecision(5) << rec.branch_score << " (tolerance "
            << rec.tolerance_codes << " codes)\n"
            << "max state occupancy: " << tamper.max_state_occupancy << "\n"
            << "out-of-range codes: " << tamper.out_of_range << "\n"
            << "tamper flags: " << describe_flags(tamper.flags) << "\n";
  return kOk;
}

int run_serve(const ServeOptions& o) {
  const RunSettings s = load_common(o.common);
  check_settings(s);
  VirtualDevice device(s);
  std::cerr << kSimulationNote << "\n";
  if (o.stdio) {
    FdStream stream(0, 1);
    const auto stats = serve(device, stream);
    std::cerr << "session closed: " << stats.requests << " requests, " << stats.decode_errors
              << " corrupt frames dropped\n";
    return kOk;
  }
  serve_address(device, o.listen, o.max_sessions, [&](int port) {
    std::cerr << "listening on " << o.listen;
    if (port) std::cerr << " (port " << port << ")";
    std::cerr << ", seed " << s.noise.seed << std::endl;
  });
  return kOk;
}

int run_validate(const ValidateOptions& o) {
  const RunSettings s = o.config.empty() ? RunSettings{} : load_settings(o.config);
  const auto report = validate_config(s.circuit, s.validation);
  std::cout << "configuration " << (o.config.empty() ? "defaults" : o.config) << ": "
            << report.violations.size() << " violation(s), " << report.advisories.size() << " advisory(ies)\n";
  for (const auto& v : report.violations) std::cout << "  violation [" << v.field << "] " << v.message << "\n";
  for (const auto& a : report.advisories) std::cout << "  advisory  [" << a.field << "] " << a.message << "\n";
  if (!report.ok()) return kValidation;
  try {
    validate(s.noise);
  } catch (const std::invalid_argument& e) {
    std::cout << "  violation [noise] " << e.what() << "\n";
    return kValidation;
  }
  const auto b = markov_bounds(s.circuit);
  const auto p = map_params(s.circuit);
  std::cout << "  map: alpha=" << p.alpha << " beta=" << p.beta << ", codes " << b.m_min << ".." << b.m_max
            << "\n";
  return kOk;
}

}  // namespace chaostrng::cli
