#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = momlab::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

json theory_json(std::vector<std::string> args) {
  args.insert(args.begin(), "theory");
  args.insert(args.end(), {"--format", "json"});
  const Outcome o = invoke(args);
  EXPECT_EQ(o.code, 0) << o.err;
  return json::parse(o.out);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() /
            (std::string("momlab_cli_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  std::string operator/(const std::string& s) const { return (path_ / s).string(); }

 private:
  fs::path path_;
};

const std::vector<std::string> kSmallSweep = {"sweep", "--Q", "4", "--dim", "6", "--grid", "4x4",
                                              "--iters", "200", "--trials", "1", "--seed", "9"};

}  // namespace

TEST(CliTheory, NesterovOnQ4) {
  const json j = theory_json({"--mu", "1", "--L", "4", "--nesterov"});
  EXPECT_NEAR(j["rho"].get<double>(), 0.5, 1e-12);
  EXPECT_NEAR(j["alpha"].get<double>(), 0.25, 1e-15);
  EXPECT_NEAR(j["beta"].get<double>(), 1.0 / 3.0, 1e-15);
  EXPECT_TRUE(j["stable"].get<bool>());
}

TEST(CliTheory, IdentityHessianOneStep) {
  const json j = theory_json({"--mu", "1", "--L", "1", "--alpha", "1", "--beta", "0"});
  EXPECT_EQ(j["rho"].get<double>(), 0.0);
}

TEST(CliTheory, DivergenceFactor) {
  const json j = theory_json({"--mu", "0.05", "--L", "100", "--nesterov", "--divergence-factor",
                              "--n", "50"});
  EXPECT_NEAR(j["divergence_factor"].get<double>(), 1.05678, 1e-5);
}

TEST(CliTheory, UnstableIsReportedNotRejected) {
  const json j = theory_json({"--mu", "1", "--L", "4", "--alpha", "1", "--beta", "0"});
  EXPECT_FALSE(j["stable"].get<bool>());
  EXPECT_TRUE(j["neighborhood"].is_null());
  const Outcome table = invoke({"theory", "--mu", "1", "--L", "4", "--alpha", "1", "--beta", "0"});
  EXPECT_EQ(table.code, 0);
  EXPECT_NE(table.out.find("unstable"), std::string::npos);
}

TEST(CliUsage, BadInvocationsExitOne) {
  EXPECT_EQ(invoke({}).code, 1);
  EXPECT_EQ(invoke({"frobnicate"}).code, 1);
  EXPECT_EQ(invoke({"theory", "--mu", "1", "--L", "4"}).code, 1);
  EXPECT_EQ(invoke({"theory", "--mu", "1", "--L", "4", "--alpha", "-1", "--beta", "0"}).code, 1);
  EXPECT_EQ(invoke({"theory", "--mu", "2", "--L", "1", "--nesterov"}).code, 1);
  EXPECT_EQ(invoke({"sweep", "--grid", "banana"}).code, 1);
  const Outcome o = invoke({"sweep", "--beta-range", "0:1.5"});
  EXPECT_EQ(o.code, 1);
  EXPECT_FALSE(o.err.empty());
}

TEST(CliValidate, PassesAndExitsZero) {
  const Outcome o = invoke({"validate", "--seed", "3"});
  EXPECT_EQ(o.code, 0) << o.out << o.err;
}

TEST(CliSweep, WritesArtifacts) {
  TempDir tmp;
  std::vector<std::string> args = kSmallSweep;
  args.insert(args.end(), {"--out", tmp / "run"});
  const Outcome o = invoke(args);
  ASSERT_EQ(o.code, 0) << o.err;
  const fs::path dir = tmp.path() / "run";
  for (const char* name : {"grid.csv", "contour.csv", "grid.json", "meta.json", "heatmap_rate.pgm",
                           "heatmap_var.pgm", "heatmap_theory_rate.pgm", "heatmap_theory_var.pgm"})
    EXPECT_TRUE(fs::exists(dir / name)) << name;

  const std::string pgm = slurp(dir / "heatmap_rate.pgm");
  EXPECT_EQ(pgm.substr(0, 11), "P5\n4 4\n255\n");
  EXPECT_EQ(pgm.size(), 11u + 16u);

  std::istringstream csv(slurp(dir / "grid.csv"));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 17u);

  const json meta = json::parse(slurp(dir / "meta.json"));
  EXPECT_EQ(meta["command"], "sweep");
  EXPECT_EQ(meta["config"]["seed"], 9);
  EXPECT_EQ(meta["problem_digest"].get<std::string>().size(), 16u);
}

TEST(CliSweep, SameSeedSameBytes) {
  TempDir tmp;
  for (const char* sub : {"a", "b"}) {
    std::vector<std::string> args = kSmallSweep;
    args.insert(args.end(), {"--out", tmp / sub, "--jobs", sub[0] == 'a' ? "1" : "2"});
    ASSERT_EQ(invoke(args).code, 0);
  }
  for (const char* name : {"grid.csv", "grid.json", "heatmap_var.pgm"})
    EXPECT_EQ(slurp(tmp.path() / "a" / name), slurp(tmp.path() / "b" / name)) << name;
}

TEST(CliSweep, ConfigReplayReproducesRun) {
  TempDir tmp;
  std::vector<std::string> args = kSmallSweep;
  args.insert(args.end(), {"--out", tmp / "first"});
  ASSERT_EQ(invoke(args).code, 0);
  const std::string meta = (tmp.path() / "first" / "meta.json").string();
  const Outcome replay = invoke({"sweep", "--config", meta, "--out", tmp / "second"});
  ASSERT_EQ(replay.code, 0) << replay.err;
  EXPECT_EQ(slurp(tmp.path() / "first" / "grid.csv"), slurp(tmp.path() / "second" / "grid.csv"));
}

TEST(CliSgdfs, ReportsNoViolations) {
  TempDir tmp;
  const Outcome o = invoke({"sgdfs", "--Q", "16", "--iters", "200", "--seeds", "3", "--out",
                            tmp / "fs"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_TRUE(fs::exists(tmp.path() / "fs" / "meta.json"));
}

TEST(CliCounterexample, WritesTraces) {
  TempDir tmp;
  const Outcome o = invoke({"counterexample", "--mu", "0.05", "--L", "100", "--n", "10", "--iters",
                            "50", "--seeds", "2", "--out", tmp / "ce"});
  ASSERT_EQ(o.code, 0) << o.err;
  const std::string trace = slurp(tmp.path() / "ce" / "traces" / "n10_seed0.csv");
  EXPECT_EQ(trace.substr(0, trace.find('\n')),
            "k,coord2_value,batch_index,opposite_sign_flag,inconsistent_batch");
}
