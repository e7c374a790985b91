#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "smrc/domain.hpp"

// Deterministic integer-arithmetic stand-in for the model-backed components.
// Problems are expressions with k binary operations; the canonical solution
// reduces the leftmost innermost operation once per step.
namespace smrc::synth {

/// Immutable integer expression over + - *.
class Expr {
 public:
  static Expr number(std::int64_t value);
  static Expr binary(char op, Expr lhs, Expr rhs);

  bool is_number() const noexcept { return op_ == 0; }
  std::int64_t literal() const noexcept { return value_; }
  char op() const noexcept { return op_; }
  const Expr& lhs() const { return *lhs_; }
  const Expr& rhs() const { return *rhs_; }

  std::int64_t evaluate() const;
  std::size_t op_count() const;
  std::string render() const;

  /// Replaces the leftmost innermost operation `a op b` with the literal
  /// `rewrite(a, op, b)`. Precondition: !is_number().
  template <typename F>
  Expr reduce_with(F&& rewrite) const;
  Expr reduce() const;

 private:
  std::string render_operand() const;

  std::int64_t value_ = 0;
  char op_ = 0;
  std::shared_ptr<const Expr> lhs_, rhs_;
};

template <typename F>
Expr Expr::reduce_with(F&& rewrite) const {
  if (lhs_->is_number() && rhs_->is_number())
    return number(rewrite(lhs_->literal(), op_, rhs_->literal()));
  if (!lhs_->is_number()) return binary(op_, lhs_->reduce_with(rewrite), *rhs_);
  return binary(op_, *lhs_, rhs_->reduce_with(rewrite));
}

/// Parses + - * (also × and −), parentheses and unary minus. Throws ParseError.
Expr parse_expression(std::string_view text);

std::int64_t apply(char op, std::int64_t a, std::int64_t b);

extern const char* const kQuestionPrefix;
extern const char* const kAnswerPrefix;

struct SynthProblem {
  std::uint64_t seed = 0;
  unsigned ops = 0;  // k
  Expr expression = Expr::number(0);
  std::int64_t target = 0;

  std::string question() const;
  Problem to_problem(std::string id) const;
};

/// Reads the expression back out of a problem produced by to_problem().
/// Throws UnreachableState when the question is not a synthetic one.
SynthProblem parse_problem(const Problem& problem);

/// Step text for a state: the rendered expression, or "The answer is N" once
/// the state is a single number.
std::string state_text(const Expr& state);
/// Inverse of state_text; nullopt when the text is not a parsable state.
std::optional<Expr> parse_state(std::string_view text);

/// Canonical reduction steps from `state` to the final answer; last one is
/// terminal. A state that is already a number yields the single answer step.
std::vector<ReasoningStep> solve_from(const Expr& state);

/// Deterministic in (seed, k); 1 <= k <= 12. Every subexpression of the
/// generated expression is nonzero, so any corrupted step changes the answer.
std::pair<SynthProblem, ReasoningPath> gen_problem(std::uint64_t seed, unsigned k);

enum class ErrorKind { off_by_one, sign_flip, dropped_term };
std::string_view to_string(ErrorKind kind);

struct ErrorSpec {
  std::size_t position = 1;  // 1-based step index
  ErrorKind kind = ErrorKind::off_by_one;
};

/// Copies the steps before `position`, corrupts that step and recomputes the
/// rest from the corrupted value, ending in a wrong final answer.
StudentAttempt inject_errors(const SynthProblem& problem, const ReasoningPath& canonical,
                             const ErrorSpec& spec);

/// Number of leading steps that parse and evaluate to the target, plus the
/// last such state (the problem expression when there is none).
struct PrefixCheck {
  std::size_t valid_steps = 0;
  Expr last_valid_state = Expr::number(0);
};
PrefixCheck check_prefix(const SynthProblem& problem, const ReasoningPath& path);

/// +1 for a complete path ending on the target, -1 for a complete path ending
/// elsewhere, otherwise m / (k + 1) for m leading valid steps (capped at k).
double oracle_score(const SynthProblem& problem, const ReasoningPath& path);

/// Sample 0: canonical steps from the last valid state. Sample j > 0: starts
/// from the prefix's last parsable state and offsets the first reduction by
/// j, which gives rollout trees wrong branches.
Continuation oracle_generate(const SynthProblem& problem, const ReasoningPath& prefix,
                             unsigned sample_index = 0);

Verdict oracle_answer_judge(const SynthProblem& problem, const ReasoningPath& path);
Verdict oracle_containment_judge(std::string_view original_step, const ReasoningPath& corrected);

class OracleGenerator final : public Generator {
 public:
  Continuation generate(const Problem& problem, const ReasoningPath& prefix,
                        std::span<const FeedbackTurn> feedback, unsigned sample_index) override;
  bool concurrent_calls_safe() const noexcept override { return true; }
};

class OracleScorer final : public Scorer {
 public:
  bool concurrent_calls_safe() const noexcept override { return true; }

 protected:
  double raw_score(const Problem& problem, const ReasoningPath& path) override;
};

class OracleAnswerJudge final : public AnswerJudge {
 public:
  Verdict judge(const Problem& problem, const ReasoningPath& path) override;
  bool concurrent_calls_safe() const noexcept override { return true; }
};

/// One element of a synthetic benchmark.
struct Instance {
  SynthProblem problem;
  ReasoningPath canonical;
  ErrorSpec error;
  StudentAttempt attempt;
};

/// `count` instances with k uniform in [k_min, k_max] and the error position
/// and kind drawn uniformly; deterministic in `seed`.
std::vector<Instance> make_suite(std::size_t count, unsigned k_min, unsigned k_max,
                                 std::uint64_t seed);

}  // namespace smrc::synth
