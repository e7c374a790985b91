#pragma once

#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "smrc/domain.hpp"

namespace smrc {

/// Trims, collapses whitespace runs and strips leading step-number prefixes
/// ("Steps 3:", "Step 3:", "3.", "3)"). Idempotent.
std::string normalize_step(std::string_view text);

/// Decides which step of a decomposition states a final answer. Only the last
/// step of a decomposition may be terminal; it is terminal when it matches
/// `answer_pattern`, or when `equals_in_last_step` is set and it contains '='.
struct TerminalRule {
  TerminalRule();
  explicit TerminalRule(const std::string& pattern, bool equals_in_last_step = true);

  bool matches_answer(std::string_view text) const;
  bool is_terminal_last(std::string_view text) const;

  std::regex answer_pattern;
  bool equals_in_last_step = true;
};

extern const char* const kDefaultTerminalPattern;

enum class DecomposePolicy { numbered_markers, line_split, external };

/// Rewrites a raw answer into "Steps N: ..." form (for example an LLM driven
/// by the decomposition prompt).
class StepRestructurer {
 public:
  virtual ~StepRestructurer() = default;
  virtual std::string restructure(std::string_view raw) = 0;
};

/// Splits a raw answer into ordered steps.
///
/// numbered_markers looks for "Step(s) N:" markers anywhere, then for lines
/// starting with "N." or "N)"; throws UnparsableFormat when neither exists.
/// line_split makes one step per non-blank line. external asks `restructurer`
/// to rewrite the answer and parses the reply with numbered_markers.
/// Text ahead of the first marker is kept as part of the first step.
/// Throws EmptyInput for blank input.
std::vector<ReasoningStep> decompose_attempt(std::string_view raw, DecomposePolicy policy,
                                             const TerminalRule& rule = TerminalRule{},
                                             StepRestructurer* restructurer = nullptr);

/// numbered_markers, falling back to line_split when no markers exist.
std::vector<ReasoningStep> decompose_with_fallback(std::string_view raw,
                                                   const TerminalRule& rule = TerminalRule{});

}  // namespace smrc
