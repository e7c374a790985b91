#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "smrc/domain.hpp"

namespace smrc {

/// Table-driven backend for fixed fixtures. Paths are addressed by their
/// normalized step texts joined with " > " (the empty path is "").
///
/// Script document:
///   question, answer           problem text
///   student_answer             optional raw attempt for correction runs
///   children {path: [step]}    one-step continuations; sample j picks j mod n
///   terminal [path]            paths whose last step states a final answer
///   continuations {path: [{steps: [..], terminal: bool}]}  multi-step replies
///   scores {path: number}      scorer table; others get default_score
///   correct [path]             paths the answer judge accepts
class ScriptedBackend final : public Generator, public Scorer, public AnswerJudge {
 public:
  static ScriptedBackend from_json(const nlohmann::json& script);
  static ScriptedBackend load(const std::string& path);

  static std::string key(const ReasoningPath& path);
  static std::string key(std::span<const std::string> texts);

  Problem problem(std::string id = "script") const;
  const std::string& student_answer() const noexcept { return student_answer_; }

  Continuation generate(const Problem& problem, const ReasoningPath& prefix,
                        std::span<const FeedbackTurn> feedback, unsigned sample_index) override;
  Verdict judge(const Problem& problem, const ReasoningPath& path) override;
  bool concurrent_calls_safe() const noexcept override { return false; }

  /// Number of scorer calls per path key, for tests that check call patterns.
  const std::map<std::string, unsigned>& score_calls() const noexcept { return score_calls_; }

 protected:
  double raw_score(const Problem& problem, const ReasoningPath& path) override;

 private:
  struct Reply {
    std::vector<std::string> steps;
    bool terminal = false;
  };

  std::string question_;
  std::string answer_;
  std::string student_answer_;
  std::map<std::string, std::vector<std::string>> children_;
  std::map<std::string, std::vector<Reply>> continuations_;
  std::set<std::string> terminal_;
  std::map<std::string, double> scores_;
  double default_score_ = 0.0;
  std::set<std::string> correct_;
  std::map<std::string, unsigned> score_calls_;
};

}  // namespace smrc
