#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "smrc/errors.hpp"
#include "smrc/evaluation.hpp"

using namespace smrc;

namespace {

const std::string kData = SMRC_TEST_DATA;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ReasoningPath path_of(std::initializer_list<const char*> texts, bool complete = true) {
  ReasoningPath p;
  std::size_t i = 0;
  for (const char* t : texts) {
    ++i;
    p.append(ReasoningStep(i, t, complete && i == texts.size()), StepOrigin::generated);
  }
  return p;
}

// Accepts a path whose last step equals the reference answer.
class LastStepJudge : public AnswerJudge {
 public:
  Verdict judge(const Problem& problem, const ReasoningPath& path) override {
    return {!path.empty() && path.steps().back().step.text() == problem.reference_answer, ""};
  }
};

}  // namespace

TEST(Mseb, LoadsPublishedInstance) {
  auto records = load_mseb(kData + "/mseb_instance.json");
  ASSERT_EQ(records.size(), 1u);
  const auto& r = records[0];
  EXPECT_EQ(r.correct_step.size(), 3u);
  EXPECT_NE(r.question.find("maximum value of $a$"), std::string::npos);
  auto attempt = to_attempt(r);
  ASSERT_EQ(attempt.steps.size(), 4u);
  EXPECT_TRUE(attempt.steps.back().terminal());
  // Only the first student step matches a listed correct step verbatim.
  EXPECT_EQ(attempt.correct_steps, (std::vector<std::size_t>{1}));
}

TEST(Mseb, RoundTripIsLossless) {
  auto records = load_mseb(kData + "/mseb_instance.json");
  auto text = serialize_mseb(records);
  auto back = parse_mseb(text);
  EXPECT_EQ(back, records);
  EXPECT_EQ(nlohmann::json::parse(text), nlohmann::json::parse(slurp(kData + "/mseb_instance.json")));
}

TEST(Mseb, RandomRecordsRoundTrip) {
  std::mt19937_64 rng(3);
  const std::vector<std::string> alphabet{"a", "b", " ", "$", "\\", "{", "}", "\"", "\n", "\t", "\xC3\xA9"};
  auto text = [&] {
    std::string s = "x";
    for (int i = 0, n = static_cast<int>(rng() % 20); i < n; ++i) s += alphabet[rng() % alphabet.size()];
    return s;
  };
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<DatasetRecord> records(rng() % 4);
    for (auto& r : records) {
      r.question = text();
      r.answer = text();
      r.student_answer = text();
      for (int i = 0, n = static_cast<int>(rng() % 4); i < n; ++i) r.correct_step.push_back(text());
    }
    EXPECT_EQ(parse_mseb(serialize_mseb(records)), records);
  }
}

TEST(Mseb, SchemaViolationsNameTheRecord) {
  const std::string ok = R"({"question":"q","answer":"a","student_answer":"s","correct_step":[]})";
  EXPECT_TRUE(parse_mseb("[]").empty());
  EXPECT_EQ(parse_mseb(ok + "\n" + ok + "\n").size(), 2u);
  try {
    parse_mseb("[" + ok + R"(,{"question":"q","answer":"a","student_answer":"s"}])");
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("record 1"), std::string::npos);
  }
  EXPECT_THROW(parse_mseb(R"([{"question":"q","answer":"a","student_answer":"s","correct_step":[1]}])"),
               SchemaError);
  EXPECT_THROW(parse_mseb(R"([{"question":"","answer":"a","student_answer":"s","correct_step":[]}])"),
               SchemaError);
  EXPECT_THROW(
      parse_mseb(R"([{"question":"q","answer":"a","student_answer":"s","correct_step":[],"x":1}])"),
      SchemaError);
  EXPECT_THROW(parse_mseb("[{"), ParseError);
  EXPECT_THROW(load_mseb(kData + "/does_not_exist.json"), IoError);
}

TEST(FirstError, ConvertsBoundaries) {
  const std::vector<std::string> steps{"a", "b", "c"};
  auto first = convert_first_error("q", "a", steps, 1);
  EXPECT_TRUE(first.correct_step.empty());
  EXPECT_EQ(first.student_answer, "Step 1: a\nStep 2: b\nStep 3: c");
  auto none = convert_first_error("q", "a", steps, 4);
  EXPECT_EQ(none.correct_step, steps);
  auto mid = convert_first_error("q", "a", steps, 3);
  EXPECT_EQ(mid.correct_step, (std::vector<std::string>{"a", "b"}));
  EXPECT_THROW(convert_first_error("q", "a", steps, 0), IndexOutOfRange);
  EXPECT_THROW(convert_first_error("q", "a", steps, 5), IndexOutOfRange);

  auto rows = parse_first_error_rows(
      R"([{"question":"q","answer":"a","steps":["x","y"],"first_error_index":2}])");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].correct_step, (std::vector<std::string>{"x"}));
  EXPECT_EQ(to_attempt(rows[0]).correct_steps, (std::vector<std::size_t>{1}));
  EXPECT_THROW(parse_first_error_rows(
                   R"([{"question":"q","answer":"a","steps":["x"],"first_error_index":3}])"),
               IndexOutOfRange);
}

TEST(Metrics, HarmonicMeanFixture) { EXPECT_NEAR(hm(0.914, 0.945), 0.929, 0.0005); }

TEST(Metrics, HarmonicMeanProperties) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EXPECT_EQ(hm(0.0, 0.0), 0.0);
  EXPECT_EQ(hm(0.0, 0.7), 0.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), c = u(rng);
    const double h = hm(a, c);
    EXPECT_DOUBLE_EQ(h, hm(c, a));
    EXPECT_LE(h, std::max(a, c) + 1e-12);
    EXPECT_GE(h, std::min(a, c) - 1e-12);
    EXPECT_LE(h, (a + c) / 2 + 1e-12);
    EXPECT_NEAR(hm(a, a), a, 1e-12);
  }
}

TEST(Metrics, AccAndCsrr) {
  LastStepJudge judge;
  const Problem p("p", "q", "4");
  std::vector<AccSample> samples{{p, path_of({"x", "4"})},
                                 {p, path_of({"4"})},
                                 {p, path_of({"y", "4"})},
                                 {p, path_of({"5"})}};
  EXPECT_DOUBLE_EQ(acc(samples, judge), 0.75);
  EXPECT_THROW(acc(std::span<const AccSample>{}, judge), EmptyDataset);

  VerbatimContainmentJudge contains;
  std::vector<CsrrSample> c{{{"x", "z"}, path_of({"x", "4"})},  // 1 of 2
                            {{"a", "b"}, path_of({"4"})}};      // 0 of 2
  EXPECT_DOUBLE_EQ(csrr(c, contains), 0.25);
  std::vector<CsrrSample> half{{{"x", "z"}, path_of({"x", "4"})}};
  EXPECT_DOUBLE_EQ(csrr(half, contains), 0.5);
  EXPECT_DOUBLE_EQ(retained_fraction({{}, path_of({"4"})}, contains), 1.0);
  EXPECT_THROW(csrr(std::span<const CsrrSample>{}, contains), EmptyDataset);
}

TEST(Metrics, EvaluateCombinesAndBreaksDown) {
  LastStepJudge judge;
  VerbatimContainmentJudge contains;
  const Problem p("p", "q", "4");
  std::vector<EvalSample> samples{{"0", p, {"x"}, path_of({"x", "4"})},
                                  {"1", p, {"y"}, ReasoningPath{}}};
  auto report = evaluate(samples, judge, contains);
  EXPECT_DOUBLE_EQ(report.acc, 0.5);
  EXPECT_DOUBLE_EQ(report.csrr, 0.5);
  EXPECT_DOUBLE_EQ(report.hm, 0.5);
  ASSERT_EQ(report.per_sample.size(), 2u);
  EXPECT_TRUE(report.per_sample[0].valid);
  EXPECT_FALSE(report.per_sample[1].valid);
  auto j = report_to_json(report);
  EXPECT_EQ(j["per_sample"].size(), 2u);
  EXPECT_DOUBLE_EQ(j["hm"].get<double>(), 0.5);
}

TEST(Metrics, Spread) {
  std::vector<double> one{0.4};
  EXPECT_EQ(spread(one).stddev, 0.0);
  std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  auto s = spread(v);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.stddev, std::sqrt(5.0 / 3.0), 1e-12);
}
