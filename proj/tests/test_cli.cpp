#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "smrc/cli.hpp"
#include "smrc/evaluation.hpp"

using namespace smrc;
namespace fs = std::filesystem;

namespace {

const std::string kData = SMRC_TEST_DATA;

struct Run {
  int code;
  std::string out, err;
};

Run smrc_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("smrc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string file(const std::string& name) const { return (dir_ / name).string(); }

  static std::vector<nlohmann::json> jsonl(const std::string& path) {
    std::ifstream in(path);
    std::vector<nlohmann::json> rows;
    for (std::string line; std::getline(in, line);)
      if (!line.empty()) rows.push_back(nlohmann::json::parse(line));
    return rows;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SynthWritesOneRecord) {
  auto r = smrc_run({"synth", "-n", "1", "--k", "1", "--out", file("d.json")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  auto records = load_mseb(file("d.json"));
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(to_attempt(records[0]).steps.size(), 1u);
}

TEST_F(CliTest, UsageAndIoErrors) {
  EXPECT_EQ(smrc_run({}).code, cli::kUsage);
  EXPECT_EQ(smrc_run({"synth"}).code, cli::kUsage);
  EXPECT_EQ(smrc_run({"correct", "--search", "astar", "--out", file("x")}).code, cli::kUsage);
  EXPECT_EQ(smrc_run({"synth", "--k", "2", "--k-min", "3", "--out", file("x")}).code, cli::kUsage);
  EXPECT_EQ(smrc_run({"--help"}).code, cli::kOk);
  auto r = smrc_run({"synth", "--out", (dir_ / "missing" / "d.json").string()});
  EXPECT_EQ(r.code, cli::kFailure);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, BuildRewardsFromScriptGivesExpectedValues) {
  auto r = smrc_run({"build-rewards", "--backend", "scripted", "--script", kData + "/rollout_script.json",
                     "--branching", "2", "--depth", "3", "--out-tree", file("tree.jsonl"),
                     "--out-records", file("records.jsonl")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  auto trees = jsonl(file("tree.jsonl"));
  ASSERT_EQ(trees.size(), 1u);
  const auto& nodes = trees[0]["nodes"];
  ASSERT_EQ(nodes.size(), 12u);
  const std::vector<std::string> exact{"0", "1/3", "1/3", "2/3", "-1/3", "2/3", "-1/3",
                                       "1", "-1",  "1",  "1",  "-1"};
  for (std::size_t i = 0; i < exact.size(); ++i) EXPECT_EQ(nodes[i]["value_exact"], exact[i]) << i;
  EXPECT_EQ(jsonl(file("records.jsonl")).size(), 11u);
}

TEST_F(CliTest, OracleCorrectionAndEvaluationRoundTrip) {
  ASSERT_EQ(smrc_run({"synth", "-n", "5", "--k", "4", "--seed", "3", "--out", file("d.json")}).code,
            cli::kOk);
  auto c = smrc_run({"correct", "--dataset", file("d.json"), "--backend", "oracle", "--out",
                     file("res.jsonl"), "--trace", file("trace.jsonl"), "--repeats", "2"});
  ASSERT_EQ(c.code, cli::kOk) << c.err;
  auto rows = jsonl(file("res.jsonl"));
  EXPECT_EQ(rows.size(), 10u);
  EXPECT_FALSE(jsonl(file("trace.jsonl")).empty());

  auto e = smrc_run({"evaluate", "--dataset", file("d.json"), "--results", file("res.jsonl"),
                     "--judge", "oracle", "--report", file("report.json")});
  ASSERT_EQ(e.code, cli::kOk) << e.err;
  std::ifstream in(file("report.json"));
  auto report = nlohmann::json::parse(in);
  EXPECT_DOUBLE_EQ(report["acc"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(report["csrr"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(report["hm"].get<double>(), 1.0);
  EXPECT_EQ(report["repeats"]["count"], 2);
  EXPECT_EQ(report["per_sample"].size(), 10u);
  EXPECT_TRUE(report["run"].contains("config"));
}

TEST_F(CliTest, EvaluateRejectsUnjoinableResults) {
  ASSERT_EQ(smrc_run({"synth", "-n", "2", "--k", "2", "--out", file("d.json")}).code, cli::kOk);
  std::ofstream(file("empty.jsonl")).close();
  auto r = smrc_run({"evaluate", "--dataset", file("d.json"), "--results", file("empty.jsonl"),
                     "--judge", "oracle"});
  EXPECT_EQ(r.code, cli::kFailure);
  EXPECT_NE(r.err.find("nothing to join"), std::string::npos);

  std::ofstream(file("partial.jsonl")) << R"({"id":"0","repeat":0,"corrected_steps":[]})" << "\n";
  r = smrc_run({"evaluate", "--dataset", file("d.json"), "--results", file("partial.jsonl"),
                "--judge", "oracle"});
  EXPECT_EQ(r.code, cli::kFailure);
  EXPECT_NE(r.err.find("covers 1 of 2"), std::string::npos);
}

TEST_F(CliTest, PathJsonRoundTrip) {
  ReasoningPath p;
  p.append(ReasoningStep(2, "x = 1"), StepOrigin::student);
  p.append(ReasoningStep(1, "The answer is 1", true), StepOrigin::generated);
  EXPECT_EQ(cli::path_from_json(cli::path_to_json(p)), p);
}
