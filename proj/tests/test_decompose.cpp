#include <gtest/gtest.h>

#include "smrc/decompose.hpp"
#include "smrc/errors.hpp"

using namespace smrc;

namespace {

std::vector<std::string> texts(const std::vector<ReasoningStep>& steps) {
  std::vector<std::string> out;
  for (const auto& s : steps) out.push_back(s.text());
  return out;
}

class UpperRestructurer : public StepRestructurer {
 public:
  std::string restructure(std::string_view raw) override {
    last_input = std::string(raw);
    return "Steps 1: first\nSteps 2: the answer is 2";
  }
  std::string last_input;
};

}  // namespace

TEST(NormalizeStep, StripsPrefixesAndWhitespace) {
  EXPECT_EQ(normalize_step("  Steps 3:  x = 1 "), "x = 1");
  EXPECT_EQ(normalize_step("step 2 : y"), "y");
  EXPECT_EQ(normalize_step("Step 4\xEF\xBC\x9A z"), "z");
  EXPECT_EQ(normalize_step("3. a\tb"), "a b");
  EXPECT_EQ(normalize_step("2) c"), "c");
  EXPECT_EQ(normalize_step("Step 1: 2. nested"), "nested");
  EXPECT_EQ(normalize_step("3.5 is a number"), "3.5 is a number");
  EXPECT_EQ(normalize_step("(3 + 4) * 2"), "(3 + 4) * 2");
}

TEST(NormalizeStep, IsIdempotent) {
  for (const char* s : {"Steps 1: Steps 2: 3) x", "  1.  y ", "plain", "Step 9:", "4) 5) 6. q"}) {
    auto once = normalize_step(s);
    EXPECT_EQ(normalize_step(once), once) << s;
  }
}

TEST(TerminalRule, DefaultPatternAndEquals) {
  TerminalRule rule;
  EXPECT_TRUE(rule.is_terminal_last("So the answer is 5"));
  EXPECT_TRUE(rule.is_terminal_last("Hence the maximum value of a is 3"));
  EXPECT_TRUE(rule.is_terminal_last("\\boxed{7}"));
  EXPECT_TRUE(rule.is_terminal_last("x = 4"));
  EXPECT_FALSE(rule.is_terminal_last("Expand the brackets"));
  TerminalRule strict(kDefaultTerminalPattern, false);
  EXPECT_FALSE(strict.is_terminal_last("x = 4"));
}

TEST(DecomposeAttempt, InlineStepsMarkers) {
  auto steps = decompose_attempt("Steps 1: a = 1 Steps 2: b = 2 Steps 3: the answer is 3",
                                 DecomposePolicy::numbered_markers);
  ASSERT_EQ(steps.size(), 3u);
  EXPECT_EQ(texts(steps), (std::vector<std::string>{"a = 1", "b = 2", "the answer is 3"}));
  EXPECT_EQ(steps[1].index(), 2u);
  EXPECT_FALSE(steps[0].terminal());
  EXPECT_FALSE(steps[1].terminal());
  EXPECT_TRUE(steps[2].terminal());
}

TEST(DecomposeAttempt, PreambleJoinsFirstStep) {
  auto steps = decompose_attempt("Let x be 2. Step 1: double it\nStep 2: x = 4",
                                 DecomposePolicy::numbered_markers);
  ASSERT_EQ(steps.size(), 2u);
  EXPECT_EQ(steps[0].text(), "Let x be 2. double it");
}

TEST(DecomposeAttempt, LineMarkersFallback) {
  auto steps = decompose_attempt("1. first\ncontinued\n2) second", DecomposePolicy::numbered_markers);
  ASSERT_EQ(steps.size(), 2u);
  EXPECT_EQ(steps[0].text(), "first continued");
  EXPECT_EQ(steps[1].text(), "second");
}

TEST(DecomposeAttempt, ErrorsAndLineSplit) {
  EXPECT_THROW(decompose_attempt("  \n ", DecomposePolicy::line_split), EmptyInput);
  EXPECT_THROW(decompose_attempt("no markers here", DecomposePolicy::numbered_markers),
               UnparsableFormat);
  auto lines = decompose_attempt("a\n\n b \nc = 1", DecomposePolicy::line_split);
  EXPECT_EQ(texts(lines), (std::vector<std::string>{"a", "b", "c = 1"}));
  EXPECT_TRUE(lines.back().terminal());
  auto fallback = decompose_with_fallback("a\nb");
  EXPECT_EQ(fallback.size(), 2u);
}

TEST(DecomposeAttempt, OnlyLastStepCanBeTerminal) {
  auto steps = decompose_attempt("x = 1\ny = 2\nz = 3", DecomposePolicy::line_split);
  EXPECT_FALSE(steps[0].terminal());
  EXPECT_FALSE(steps[1].terminal());
  EXPECT_TRUE(steps[2].terminal());
}

TEST(DecomposeAttempt, ExternalUsesRestructurer) {
  UpperRestructurer r;
  auto steps = decompose_attempt("raw text", DecomposePolicy::external, TerminalRule{}, &r);
  EXPECT_EQ(r.last_input, "raw text");
  EXPECT_EQ(texts(steps), (std::vector<std::string>{"first", "the answer is 2"}));
  EXPECT_THROW(decompose_attempt("raw", DecomposePolicy::external), DomainError);
}
