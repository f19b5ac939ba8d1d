#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <json.hpp>

namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("chaostrng_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  Result run(const std::string& args) const {
    const auto log = path("stdout.txt");
    const std::string cmd = std::string(CHAOSTRNG_CLI) + " " + args + " > " + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::ostringstream s;
    s << in.rdbuf();
    r.out = s.str();
    return r;
  }

  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  fs::path dir_;
};

TEST_F(CliTest, ValidatePrototypeDefaults) {
  const auto r = run("validate");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("0 violation(s), 0 advisory(ies)"), std::string::npos) << r.out;
}

TEST_F(CliTest, ValidateReportsViolation) {
  write("bad.ini", "v_b = 0.9\n");
  const auto r = run("validate --config " + path("bad.ini"));
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_NE(r.out.find("violation [v_b]"), std::string::npos) << r.out;
}

TEST_F(CliTest, MalformedConfigIsValidationError) {
  write("bad.ini", "gain = 4\n");
  EXPECT_EQ(run("validate --config " + path("bad.ini")).code, 2);
  EXPECT_EQ(run("simulate --cycles 10 --trace " + path("t.csv") + " --config " + path("bad.ini")).code, 2);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run("simulate --cycles 0 --trace " + path("t.csv")).code, 1);
  EXPECT_EQ(run("simulate --trace " + path("t.csv")).code, 1);
  EXPECT_EQ(run("generate --bits 12 --out " + path("x.bin")).code, 1);
  EXPECT_EQ(run("generate --bits 16 --post sha --out " + path("x.bin")).code, 1);
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("serve").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(CliTest, SimulateWritesTraceAndSidecar) {
  const auto r = run("simulate --cycles 2000 --seed 5 --trace " + path("t.csv") + " --raw " + path("t.raw"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("PRNG"), std::string::npos);
  EXPECT_EQ(fs::file_size(path("t.raw")), 4000u);
  std::ifstream side(path("t.csv.run.ini"));
  std::ostringstream s;
  s << side.rdbuf();
  EXPECT_NE(s.str().find("seed = 5"), std::string::npos);
  EXPECT_NE(s.str().find("# cycles: 2000"), std::string::npos);

  // The sidecar reproduces the run exactly.
  ASSERT_EQ(run("simulate --cycles 2000 --config " + path("t.csv.run.ini") + " --trace " + path("u.csv")).code, 0);
  std::ifstream a(path("t.csv")), b(path("u.csv"));
  std::ostringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  EXPECT_EQ(sa.str(), sb.str());
}

TEST_F(CliTest, ReconstructFromTrace) {
  ASSERT_EQ(run("simulate --cycles 5000 --trace " + path("t.csv")).code, 0);
  const auto r = run("reconstruct --trace " + path("t.csv") + " --out " + path("scatter.csv") + " --hist " +
                     path("hist.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("tamper flags: none"), std::string::npos) << r.out;
  std::ifstream hist(path("hist.csv"));
  std::string header;
  std::getline(hist, header);
  EXPECT_EQ(header, "m,symbol,count,frequency");
  EXPECT_TRUE(fs::exists(path("scatter.csv.run.ini")));
}

TEST_F(CliTest, ReconstructNeedsEnoughCycles) {
  ASSERT_EQ(run("simulate --cycles 10 --trace " + path("t.csv")).code, 0);
  EXPECT_EQ(run("reconstruct --trace " + path("t.csv") + " --out " + path("s.csv")).code, 3);
}

TEST_F(CliTest, GenerateThenTestEmbedsSettings) {
  // Serial with m = 16 needs at least 2^19 bits per sequence.
  ASSERT_EQ(run("generate --bits 1100000 --post xor --seed 9 --out " + path("r.bin")).code, 0);
  EXPECT_EQ(fs::file_size(path("r.bin")), 137500u);
  const auto r = run("test --in " + path("r.bin") + " --report " + path("r.json") + " --seq-len 550000");
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream in(path("r.json"));
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j["seed"], 9);
  EXPECT_EQ(j["run_settings"]["post"], "xor");
  EXPECT_EQ(j["run_settings"]["v_b"], 0.192);
  ASSERT_EQ(j["sequences"].size(), 2u);
  EXPECT_EQ(j["sequences"][0]["tests"].size(), 9u);
  EXPECT_TRUE(j["marginal_entropy"].contains("minimum"));
}

TEST_F(CliTest, VonNeumannStreamPassesSubset) {
  ASSERT_EQ(run("generate --bits 8000000 --post vn --out " + path("vn.bin")).code, 0);
  const auto r = run("test --in " + path("vn.bin") + " --report " + path("vn.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("all tests passed"), std::string::npos) << r.out;
}

TEST_F(CliTest, TestSkipsWhatDoesNotFit) {
  std::ofstream(path("small.bin"), std::ios::binary) << std::string(20, 'x');
  const auto r = run("test --in " + path("small.bin") + " --report " + path("r.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream in(path("r.json"));
  const auto j = nlohmann::json::parse(in);
  EXPECT_TRUE(j["seed"].is_null());
  const auto& tests = j["sequences"][0]["tests"];
  ASSERT_EQ(tests.size(), 8u);
  EXPECT_EQ(tests[3]["name"], "LongestRun");
  EXPECT_FALSE(tests[3].contains("skipped"));  // 160 bits is enough
  EXPECT_EQ(tests[6]["name"], "Serial");
  EXPECT_TRUE(tests[6].contains("skipped"));
}

TEST_F(CliTest, MissingInputIsUsageError) {
  EXPECT_EQ(run("test --in " + path("nope.bin") + " --report " + path("r.json")).code, 1);
}

TEST_F(CliTest, UnwritableOutputIsRuntimeError) {
  const auto r = run("simulate --cycles 10 --trace " + path("missing_dir/t.csv"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("I/O error"), std::string::npos) << r.out;
}

TEST_F(CliTest, ServeOverStdio) {
  // GET_STATUS followed by GET_RANDOM(16) on stdin; replies on stdout.
  const unsigned char req[] = {0x7E, 0x02, 0x00, 0x00, 0xA2, 0xFC, 0x7E, 0x01, 0x02, 0x00, 0x10, 0x00, 0x55, 0x46};
  std::ofstream(path("req.bin"), std::ios::binary).write(reinterpret_cast<const char*>(req), sizeof(req));
  const std::string cmd = std::string(CHAOSTRNG_CLI) + " serve --stdio < " + path("req.bin") + " > " +
                          path("resp.bin") + " 2> " + path("err.txt");
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_EQ(fs::file_size(path("resp.bin")), (44u + 6u) + (16u + 6u));
}

}  // namespace
