#include "smrc/domain.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "smrc/decompose.hpp"
#include "smrc/errors.hpp"

namespace smrc {

Problem::Problem(std::string id_, std::string question_, std::string reference_answer_)
    : id(std::move(id_)), question(std::move(question_)),
      reference_answer(std::move(reference_answer_)) {
  if (normalize_step(question).empty()) throw DomainError("problem question is empty");
  if (normalize_step(reference_answer).empty())
    throw DomainError("problem reference answer is empty");
}

ReasoningStep::ReasoningStep(std::size_t index, std::string_view text, bool terminal)
    : index_(index), text_(normalize_step(text)), terminal_(terminal) {
  if (index_ == 0) throw DomainError("step index must be >= 1");
  if (text_.empty()) throw DomainError("step text is empty after normalization");
}

ReasoningStep ReasoningStep::with_index(std::size_t index) const {
  ReasoningStep copy = *this;
  if (index == 0) throw DomainError("step index must be >= 1");
  copy.index_ = index;
  return copy;
}

ReasoningStep ReasoningStep::with_terminal(bool terminal) const {
  ReasoningStep copy = *this;
  copy.terminal_ = terminal;
  return copy;
}

std::string_view to_string(StepOrigin origin) {
  return origin == StepOrigin::student ? "student" : "generated";
}

void ReasoningPath::append(const ReasoningStep& step, StepOrigin origin) {
  if (complete()) throw DomainError("cannot append after a terminal step");
  if (origin == StepOrigin::student) {
    if (step.index() <= last_student_index())
      throw DomainError("student steps must keep their original order");
    steps_.push_back({step, origin});
  } else {
    steps_.push_back({step.with_index(steps_.size() + 1), origin});
  }
}

ReasoningPath ReasoningPath::extended(const ReasoningStep& step, StepOrigin origin) const {
  ReasoningPath copy = *this;
  copy.append(step, origin);
  return copy;
}

ReasoningPath ReasoningPath::extended(std::span<const ReasoningStep> steps,
                                      StepOrigin origin) const {
  ReasoningPath copy = *this;
  for (const auto& s : steps) copy.append(s, origin);
  return copy;
}

std::vector<std::string> ReasoningPath::texts() const {
  std::vector<std::string> out;
  out.reserve(steps_.size());
  for (const auto& s : steps_) out.push_back(s.step.text());
  return out;
}

std::vector<std::size_t> ReasoningPath::student_indices() const {
  std::vector<std::size_t> out;
  for (const auto& s : steps_)
    if (s.origin == StepOrigin::student) out.push_back(s.step.index());
  return out;
}

std::size_t ReasoningPath::last_student_index() const noexcept {
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it)
    if (it->origin == StepOrigin::student) return it->step.index();
  return 0;
}

bool ReasoningPath::preserves_student_order() const noexcept {
  std::size_t last = 0;
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const auto& s = steps_[i];
    if (s.step.terminal() && i + 1 != steps_.size()) return false;
    if (s.origin != StepOrigin::student) continue;
    if (s.step.index() <= last) return false;
    last = s.step.index();
  }
  return true;
}

std::string ReasoningPath::render() const {
  std::string out;
  for (const auto& s : steps_) {
    if (!out.empty()) out += '\n';
    out += s.step.text();
  }
  return out;
}

StudentAttempt::StudentAttempt(std::string raw_text_, std::vector<ReasoningStep> steps_,
                               std::vector<std::size_t> correct_steps_)
    : raw_text(std::move(raw_text_)), steps(std::move(steps_)),
      correct_steps(std::move(correct_steps_)) {
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i > 0 && steps[i].index() <= steps[i - 1].index())
      throw DomainError("attempt steps must be in increasing index order");
    if (steps[i].terminal() && i + 1 != steps.size())
      throw DomainError("only the last attempt step may be terminal");
  }
  std::sort(correct_steps.begin(), correct_steps.end());
  correct_steps.erase(std::unique(correct_steps.begin(), correct_steps.end()),
                      correct_steps.end());
  for (auto idx : correct_steps) {
    bool found = std::any_of(steps.begin(), steps.end(),
                             [idx](const ReasoningStep& s) { return s.index() == idx; });
    if (!found) throw DomainError("correct step index is not a step of the attempt");
  }
}

std::vector<std::string> StudentAttempt::correct_texts() const {
  std::vector<std::string> out;
  for (auto idx : correct_steps)
    for (const auto& s : steps)
      if (s.index() == idx) out.push_back(s.text());
  return out;
}

double clamp_score(double value) noexcept {
  if (std::isnan(value)) return -1.0;
  return std::clamp(value, -1.0, 1.0);
}

double Scorer::score(const Problem& problem, const ReasoningPath& path) {
  return clamp_score(raw_score(problem, path));
}

Verdict VerbatimContainmentJudge::contains(std::string_view original_step,
                                           const ReasoningPath& corrected) {
  const auto needle = normalize_step(original_step);
  for (const auto& s : corrected.steps())
    if (s.step.text() == needle) return {true, std::nullopt};
  return {false, std::nullopt};
}

namespace {

class SerializedGenerator final : public Generator {
 public:
  explicit SerializedGenerator(std::shared_ptr<Generator> inner) : inner_(std::move(inner)) {}
  Continuation generate(const Problem& problem, const ReasoningPath& prefix,
                        std::span<const FeedbackTurn> feedback, unsigned sample) override {
    std::lock_guard lock(mu_);
    return inner_->generate(problem, prefix, feedback, sample);
  }
  bool concurrent_calls_safe() const noexcept override { return true; }

 private:
  std::shared_ptr<Generator> inner_;
  std::mutex mu_;
};

class SerializedScorer final : public Scorer {
 public:
  explicit SerializedScorer(std::shared_ptr<Scorer> inner) : inner_(std::move(inner)) {}
  bool concurrent_calls_safe() const noexcept override { return true; }

 protected:
  double raw_score(const Problem& problem, const ReasoningPath& path) override {
    std::lock_guard lock(mu_);
    return inner_->score(problem, path);
  }

 private:
  std::shared_ptr<Scorer> inner_;
  std::mutex mu_;
};

class SerializedAnswerJudge final : public AnswerJudge {
 public:
  explicit SerializedAnswerJudge(std::shared_ptr<AnswerJudge> inner) : inner_(std::move(inner)) {}
  Verdict judge(const Problem& problem, const ReasoningPath& path) override {
    std::lock_guard lock(mu_);
    return inner_->judge(problem, path);
  }
  bool concurrent_calls_safe() const noexcept override { return true; }

 private:
  std::shared_ptr<AnswerJudge> inner_;
  std::mutex mu_;
};

class SerializedContainmentJudge final : public ContainmentJudge {
 public:
  explicit SerializedContainmentJudge(std::shared_ptr<ContainmentJudge> inner)
      : inner_(std::move(inner)) {}
  Verdict contains(std::string_view original, const ReasoningPath& corrected) override {
    std::lock_guard lock(mu_);
    return inner_->contains(original, corrected);
  }
  bool concurrent_calls_safe() const noexcept override { return true; }

 private:
  std::shared_ptr<ContainmentJudge> inner_;
  std::mutex mu_;
};

template <typename Wrapper, typename T>
std::shared_ptr<T> wrap_unless_safe(std::shared_ptr<T> inner) {
  if (!inner || inner->concurrent_calls_safe()) return inner;
  return std::make_shared<Wrapper>(std::move(inner));
}

}  // namespace

std::shared_ptr<Generator> serialized(std::shared_ptr<Generator> inner) {
  return wrap_unless_safe<SerializedGenerator>(std::move(inner));
}
std::shared_ptr<Scorer> serialized(std::shared_ptr<Scorer> inner) {
  return wrap_unless_safe<SerializedScorer>(std::move(inner));
}
std::shared_ptr<AnswerJudge> serialized(std::shared_ptr<AnswerJudge> inner) {
  return wrap_unless_safe<SerializedAnswerJudge>(std::move(inner));
}
std::shared_ptr<ContainmentJudge> serialized(std::shared_ptr<ContainmentJudge> inner) {
  return wrap_unless_safe<SerializedContainmentJudge>(std::move(inner));
}

}  // namespace smrc
