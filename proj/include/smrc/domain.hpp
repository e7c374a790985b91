#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace smrc {

/// A math problem together with its reference solution and final answer.
struct Problem {
  Problem(std::string id, std::string question, std::string reference_answer);

  std::string id;
  std::string question;
  std::string reference_answer;
};

/// One normalized solution step. `index` is the 1-based ordinal of the step in
/// the solution it was taken from.
class ReasoningStep {
 public:
  ReasoningStep(std::size_t index, std::string_view text, bool terminal = false);

  std::size_t index() const noexcept { return index_; }
  const std::string& text() const noexcept { return text_; }
  bool terminal() const noexcept { return terminal_; }

  ReasoningStep with_index(std::size_t index) const;
  ReasoningStep with_terminal(bool terminal) const;

  friend bool operator==(const ReasoningStep&, const ReasoningStep&) = default;

 private:
  std::size_t index_;
  std::string text_;
  bool terminal_;
};

enum class StepOrigin { student, generated };

std::string_view to_string(StepOrigin origin);

struct PathStep {
  ReasoningStep step;
  StepOrigin origin;

  friend bool operator==(const PathStep&, const PathStep&) = default;
};

/// Ordered sequence of steps: the unit that is scored, searched and emitted.
///
/// Student steps keep their original index and must appear in increasing
/// index order. Generated steps are re-indexed to their position in the path.
/// Nothing may follow a terminal step.
class ReasoningPath {
 public:
  ReasoningPath() = default;

  /// Appends one step; throws DomainError if the append would break the
  /// ordering or terminal-last invariants.
  void append(const ReasoningStep& step, StepOrigin origin);

  ReasoningPath extended(const ReasoningStep& step, StepOrigin origin) const;
  ReasoningPath extended(std::span<const ReasoningStep> steps, StepOrigin origin) const;

  std::span<const PathStep> steps() const noexcept { return steps_; }
  std::size_t size() const noexcept { return steps_.size(); }
  bool empty() const noexcept { return steps_.empty(); }

  /// True when the last step states a final answer.
  bool complete() const noexcept { return !steps_.empty() && steps_.back().step.terminal(); }

  std::vector<std::string> texts() const;
  /// Original indices of the student steps, in path order.
  std::vector<std::size_t> student_indices() const;
  /// Index of the last student step, 0 when none.
  std::size_t last_student_index() const noexcept;
  bool preserves_student_order() const noexcept;

  /// Newline-joined step texts.
  std::string render() const;

  friend bool operator==(const ReasoningPath&, const ReasoningPath&) = default;

 private:
  std::vector<PathStep> steps_;
};

/// A student's solution split into steps, plus the steps known to be correct
/// (1-based indices into `steps`).
struct StudentAttempt {
  StudentAttempt(std::string raw_text, std::vector<ReasoningStep> steps,
                 std::vector<std::size_t> correct_steps);

  std::vector<std::string> correct_texts() const;

  std::string raw_text;
  std::vector<ReasoningStep> steps;
  std::vector<std::size_t> correct_steps;
};

struct Verdict {
  bool valid = false;
  std::optional<std::string> rationale;
};

/// One rejected generation and the feedback sent in reply.
struct FeedbackTurn {
  std::string rejected_reply;
  std::string feedback;
};

/// Steps proposed by a generator, numbered 1..m within the continuation.
struct Continuation {
  std::vector<ReasoningStep> steps;
  std::string raw_text;
};

/// Proposes continuations of a partial solution. Failure is reported by
/// throwing GeneratorFailure, never by returning an empty continuation.
/// `sample_index` distinguishes repeated draws for the same prefix.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual Continuation generate(const Problem& problem, const ReasoningPath& prefix,
                                std::span<const FeedbackTurn> feedback,
                                unsigned sample_index) = 0;
  virtual bool concurrent_calls_safe() const noexcept { return false; }
};

/// Maps a clamped score into [-1, 1]; NaN maps to -1.
double clamp_score(double value) noexcept;

/// Process reward model. Callers always receive values in [-1, 1].
class Scorer {
 public:
  virtual ~Scorer() = default;
  double score(const Problem& problem, const ReasoningPath& path);
  virtual bool concurrent_calls_safe() const noexcept { return false; }

 protected:
  virtual double raw_score(const Problem& problem, const ReasoningPath& path) = 0;
};

/// Decides whether a path reaches the problem's correct final answer.
class AnswerJudge {
 public:
  virtual ~AnswerJudge() = default;
  virtual Verdict judge(const Problem& problem, const ReasoningPath& path) = 0;
  virtual bool concurrent_calls_safe() const noexcept { return false; }
};

/// Decides whether an original student step survives in a corrected path.
class ContainmentJudge {
 public:
  virtual ~ContainmentJudge() = default;
  virtual Verdict contains(std::string_view original_step, const ReasoningPath& corrected) = 0;
  virtual bool concurrent_calls_safe() const noexcept { return false; }
};

/// Default containment judge: the normalized step appears verbatim among the
/// corrected path's normalized steps.
class VerbatimContainmentJudge final : public ContainmentJudge {
 public:
  Verdict contains(std::string_view original_step, const ReasoningPath& corrected) override;
  bool concurrent_calls_safe() const noexcept override { return true; }
};

// Wrap an implementation that is not safe for concurrent use so that calls
// are serialized through a mutex. Safe implementations are returned unchanged.
std::shared_ptr<Generator> serialized(std::shared_ptr<Generator> inner);
std::shared_ptr<Scorer> serialized(std::shared_ptr<Scorer> inner);
std::shared_ptr<AnswerJudge> serialized(std::shared_ptr<AnswerJudge> inner);
std::shared_ptr<ContainmentJudge> serialized(std::shared_ptr<ContainmentJudge> inner);

}  // namespace smrc
