#include <iostream>
#include <system_error>

#include <CLI11.hpp>

#include "chaostrng/quality_suite.hpp"
#include "chaostrng/settings.hpp"
#include "commands.hpp"

namespace cli = chaostrng::cli;

namespace {

void add_common(CLI::App* cmd, cli::CommonOptions& o) {
  cmd->add_option("--config", o.config, "Run settings file (key = value)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Override the noise seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chaos-map true random number generator: simulator, test suite and device model"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "chaostrng 0.1.0");

  cli::SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Run the ADC/DAC loop and write its trace");
  add_common(simulate, sim.common);
  simulate->add_option("--cycles", sim.cycles, "Loop cycles to run")->required()->check(CLI::PositiveNumber);
  simulate->add_option("--trace", sim.trace, "Trace CSV output")->required();
  simulate->add_option("--raw", sim.raw, "Raw ADC codes as little-endian u16");

  cli::GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Write random bytes from the simulated source");
  add_common(generate, gen.common);
  generate->add_option("--bits", gen.bits, "Output bits (a multiple of 8)")->required()->check(CLI::PositiveNumber);
  generate->add_option("--post", gen.post, "Post-processing: none, vn or xor (default from config)")
      ->check(CLI::IsMember({"none", "vn", "xor"}));
  generate->add_option("--out", gen.out, "Output file")->required();

  cli::TestOptions tst;
  auto* test = app.add_subcommand("test", "Run the statistical test subset on a bit file");
  test->add_option("--in", tst.in, "Input bit file (LSB-first bytes)")->required()->check(CLI::ExistingFile);
  test->add_option("--report", tst.report, "JSON report output")->required();
  test->add_option("--seq-len", tst.seq_len, "Split the input into sequences of this many bits");

  cli::ReconstructOptions rec;
  auto* reconstruct = app.add_subcommand("reconstruct", "Rebuild the iterated map from a trace and run diagnostics");
  reconstruct->add_option("--config", rec.config, "Run settings (default: the trace's sidecar)")
      ->check(CLI::ExistingFile);
  reconstruct->add_option("--trace", rec.trace, "Trace CSV from simulate")->required()->check(CLI::ExistingFile);
  reconstruct->add_option("--out", rec.out, "Scatter CSV of successive raw codes")->required();
  reconstruct->add_option("--hist", rec.hist, "Histogram CSV of effective codes");

  cli::ServeOptions srv;
  auto* serve = app.add_subcommand("serve", "Expose the simulated device over the framed protocol");
  add_common(serve, srv.common);
  auto* listen = serve->add_option("--listen", srv.listen, "host:port or unix:/path");
  auto* stdio = serve->add_flag("--stdio", srv.stdio, "Serve one session on stdin/stdout");
  listen->excludes(stdio);
  serve->add_option("--max-sessions", srv.max_sessions, "Exit after this many sessions")
      ->check(CLI::PositiveNumber);

  cli::ValidateOptions val;
  auto* validate = app.add_subcommand("validate", "Check a configuration against design bounds");
  validate->add_option("--config", val.config, "Run settings file")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kUsage;
  }

  try {
    if (*simulate) return cli::run_simulate(sim);
    if (*generate) return cli::run_generate(gen);
    if (*test) return cli::run_test(tst);
    if (*reconstruct) return cli::run_reconstruct(rec);
    if (*serve) {
      if (srv.listen.empty() && !srv.stdio) throw cli::UsageError("serve needs --listen ADDR or --stdio");
      return cli::run_serve(srv);
    }
    if (*validate) return cli::run_validate(val);
  } catch (const cli::UsageError& e) {
    std::cerr << "chaostrng: usage error: " << e.what() << "\n";
    return cli::kUsage;
  } catch (const chaostrng::ConfigError& e) {
    std::cerr << "chaostrng: validation error:";
    for (const auto& v : e.report().violations) std::cerr << "\n  [" << v.field << "] " << v.message;
    std::cerr << "\n";
    return cli::kValidation;
  } catch (const chaostrng::SettingsError& e) {
    std::cerr << "chaostrng: validation error: " << e.what() << "\n";
    return cli::kValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "chaostrng: validation error: " << e.what() << "\n";
    return cli::kValidation;
  } catch (const cli::IoError& e) {
    std::cerr << "chaostrng: I/O error: " << e.what() << "\n";
    return cli::kRuntime;
  } catch (const chaostrng::InsufficientData& e) {
    std::cerr << "chaostrng: insufficient data: " << e.what() << "\n";
    return cli::kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "chaostrng: runtime error: " << e.what() << "\n";
    return cli::kRuntime;
  }
  return cli::kUsage;
}
