// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "advcat/cli.hpp"
#include "advcat/report.hpp"

namespace fs = std::filesystem;
using namespace advcat;

namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "advcat");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("advcat_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Small trained classifier shared by several cases.
  void make_model() {
    ASSERT_EQ(run({"synth", "--seed", "3", "--features", "8", "--values", "4", "--count", "200",
                   "--out", path("data.jsonl")})
                  .code,
              0);
    const auto t = run({"train", "--dataset", path("data.jsonl"), "--out", path("model.json"),
                        "--epochs", "20"});
    ASSERT_EQ(t.code, 0) << t.err;
    EXPECT_NE(t.out.find("training accuracy"), std::string::npos);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SynthTrainAssess) {
  make_model();
  const auto a = run({"assess", "--dataset", path("data.jsonl"), "--oracle",
                      "builtin:" + path("model.json"), "--budget", "35%", "--report",
                      path("r.json"), "--human", path("r.md"), "--results", path("u.jsonl")});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto r = parse_report(slurp(path("r.json")));
  EXPECT_EQ(r.num_units, 200u);
  EXPECT_EQ(r.config.algorithm, "fsgs");
  EXPECT_EQ(r.config.budget, "35%");
  EXPECT_EQ(r.config.oracle, "builtin:" + path("model.json"));
  EXPECT_LT(r.after.acc->value, r.before.acc->value);
  EXPECT_NE(slurp(path("r.md")).find("| Acc |"), std::string::npos);
  EXPECT_FALSE(slurp(path("u.jsonl")).empty());
}

TEST_F(Cli, HumanReportOnStdoutByDefault) {
  make_model();
  const auto a = run({"assess", "--dataset", path("data.jsonl"), "--oracle",
                      "builtin:" + path("model.json"), "--budget", "1"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_NE(a.out.find("| Metric | Before | After (delta) |"), std::string::npos);
}

TEST_F(Cli, UcbAlphaDefaultIsEchoed) {
  make_model();
  ASSERT_EQ(run({"assess", "--dataset", path("data.jsonl"), "--oracle", "builtin:" + path("model.json"),
                 "--algo", "ucbs", "--budget", "2", "--report", path("r.json")})
                .code,
            0);
  const auto r = parse_report(slurp(path("r.json")));
  EXPECT_EQ(r.config.algorithm, "ucbs");
  EXPECT_DOUBLE_EQ(r.config.ucb_alpha, 2.0);
}

TEST_F(Cli, DeterministicAcrossWorkers) {
  make_model();
  for (const char* w : {"1", "4"}) {
    ASSERT_EQ(run({"assess", "--dataset", path("data.jsonl"), "--oracle",
                   "builtin:" + path("model.json"), "--algo", "sgs", "--sgs-r", "3", "--seed", "11",
                   "--budget", "3", "--workers", w, "--report", path(std::string("r") + w + ".json")})
                  .code,
              0);
  }
  EXPECT_EQ(slurp(path("r1.json")), slurp(path("r4.json")));
}

TEST_F(Cli, ConfigFileWithFlagPrecedence) {
  make_model();
  {
    std::ofstream cfg(path("a.ini"));
    cfg << "[assess]\nalgo = \"ucbs\"\nbudget = \"2\"\nseed = 9\n";
  }
  ASSERT_EQ(run({"assess", "--config", path("a.ini"), "--dataset", path("data.jsonl"), "--oracle",
                 "builtin:" + path("model.json"), "--budget", "3", "--report", path("r.json")})
                .code,
            0);
  const auto r = parse_report(slurp(path("r.json")));
  EXPECT_EQ(r.config.algorithm, "ucbs");
  EXPECT_EQ(r.config.seed, 9u);
  EXPECT_EQ(r.config.budget, "3");
  // Keys outside a subcommand section are rejected, not silently dropped.
  {
    std::ofstream cfg(path("flat.ini"));
    cfg << "algo = ucbs\n";
  }
  EXPECT_EQ(run({"assess", "--config", path("flat.ini"), "--dataset", path("data.jsonl"), "--oracle",
                 "builtin:" + path("model.json")})
                .code,
            kExitConfig);
}

TEST_F(Cli, ReportSubcommand) {
  make_model();
  ASSERT_EQ(run({"assess", "--dataset", path("data.jsonl"), "--oracle", "builtin:" + path("model.json"),
                 "--budget", "1", "--report", path("r.json")})
                .code,
            0);
  const auto csv = run({"report", "--in", path("r.json"), "--format", "csv"});
  ASSERT_EQ(csv.code, 0);
  EXPECT_EQ(csv.out.substr(0, 25), "metric,before,after,delta");
  const auto json = run({"report", "--in", path("r.json"), "--format", "json"});
  EXPECT_EQ(json.out, slurp(path("r.json")));
  EXPECT_EQ(run({"report", "--in", path("r.json"), "--format", "xml"}).code, kExitConfig);
}

TEST_F(Cli, LogPipeline) {
  ASSERT_EQ(run({"synth", "--kind", "logs", "--vocab", "12", "--count", "20", "--out", path("logs.jsonl")})
                .code,
            0);
  const auto t = run({"train", "--dataset", path("logs.jsonl"), "--out", path("w.json"), "--window", "5",
                      "--epochs", "5"});
  ASSERT_EQ(t.code, 0) << t.err;
  const auto a = run({"assess", "--dataset", path("logs.jsonl"), "--oracle", "builtin:" + path("w.json"),
                      "--mode", "session", "--budget", "1", "--fraction", "0.2", "--report", path("r.json")});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto r = parse_report(slurp(path("r.json")));
  EXPECT_EQ(r.config.window, 5u);
  EXPECT_TRUE(r.before.dr);
  // A window that disagrees with the model is a configuration error.
  EXPECT_EQ(run({"assess", "--dataset", path("logs.jsonl"), "--oracle", "builtin:" + path("w.json"),
                 "--mode", "log_window", "--window", "6"})
                .code,
            kExitConfig);
}

TEST_F(Cli, ConfigErrorsExitOne) {
  make_model();
  const std::string oracle = "builtin:" + path("model.json");
  EXPECT_EQ(run({"assess", "--dataset", path("data.jsonl"), "--oracle", oracle, "--budget", "0"}).code,
            kExitConfig);
  EXPECT_EQ(run({"assess", "--dataset", path("data.jsonl"), "--oracle", oracle, "--bogus"}).code,
            kExitConfig);
  EXPECT_EQ(run({"assess", "--dataset", path("missing.jsonl"), "--oracle", oracle}).code, kExitConfig);
  EXPECT_EQ(run({"assess", "--dataset", path("data.jsonl"), "--oracle", "builtin:" + path("nope")}).code,
            kExitConfig);
  EXPECT_EQ(run({"assess", "--dataset", path("data.jsonl"), "--oracle", "carrier-pigeon:x"}).code,
            kExitConfig);
  EXPECT_EQ(run({"assess", "--dataset", path("data.jsonl"), "--oracle", oracle, "--algo", "magic"}).code,
            kExitConfig);
  EXPECT_EQ(run({}).code, kExitConfig);
}

TEST_F(Cli, RuntimeErrorsExitTwo) {
  make_model();
  EXPECT_EQ(run({"assess", "--dataset", path("data.jsonl"), "--oracle", "remote:http://127.0.0.1:1"}).code,
            kExitRuntime);
  {
    std::ofstream bad(path("bad.jsonl"));
    bad << "{\"id\": \"a\", \"true_label\": 0, \"values\": [9], \"candidates\": [[0, 1]]}\n";
  }
  const auto r = run({"assess", "--dataset", path("bad.jsonl"), "--oracle", "truth:random:1:2:1:2"});
  EXPECT_EQ(r.code, kExitRuntime);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST_F(Cli, VersionAndHelp) {
  EXPECT_EQ(run({"--version"}).code, kExitOk);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST_F(Cli, BinaryExitCodes) {
  const std::string bin = ADVCAT_CLI_PATH;
  auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status(bin + " synth --count 30 --out " + path("d.jsonl")), 0);
  EXPECT_EQ(status(bin + " assess --dataset " + path("d.jsonl") +
                   " --oracle truth:random:1:2:20:5 --budget 2 --report " + path("r.json")),
            0);
  EXPECT_EQ(status(bin + " assess --dataset " + path("d.jsonl") + " --oracle truth:random:1:2:20:5 --budget 0"), 1);
  EXPECT_EQ(status(bin + " assess --dataset " + path("d.jsonl") + " --oracle remote:http://127.0.0.1:1"), 2);
}
