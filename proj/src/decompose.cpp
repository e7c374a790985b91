#include "smrc/decompose.hpp"

#include <cctype>

#include "smrc/errors.hpp"

namespace smrc {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

// "Steps 3:", "Step 3:", "step 3 :", fullwidth colon, "3.", "3)".
const std::regex& step_prefix_regex() {
  static const std::regex re(R"(^(?:steps?\s*\d+\s*(?::|\xEF\xBC\x9A|\.)|\d+\s*[.)](?=\s))\s*)",
                             std::regex::icase | std::regex::ECMAScript);
  return re;
}

const std::regex& inline_marker_regex() {
  static const std::regex re(R"(\bsteps?\s*(\d+)\s*(?::|\xEF\xBC\x9A))",
                             std::regex::icase | std::regex::ECMAScript);
  return re;
}

const std::regex& line_marker_regex() {
  static const std::regex re(R"(^\s*(\d+)\s*[.)]\s)", std::regex::ECMAScript);
  return re;
}

std::vector<std::string> split_lines(std::string_view raw) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= raw.size()) {
    auto end = raw.find('\n', start);
    if (end == std::string_view::npos) end = raw.size();
    lines.emplace_back(raw.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

std::vector<ReasoningStep> finish(const std::vector<std::string>& segments,
                                  const TerminalRule& rule) {
  std::vector<std::string> texts;
  for (const auto& s : segments) {
    auto norm = normalize_step(s);
    if (!norm.empty()) texts.push_back(std::move(norm));
  }
  std::vector<ReasoningStep> steps;
  steps.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    bool last = i + 1 == texts.size();
    steps.emplace_back(i + 1, texts[i], last && rule.is_terminal_last(texts[i]));
  }
  return steps;
}

std::vector<std::string> split_inline_markers(std::string_view raw) {
  std::string text(raw);
  std::vector<std::pair<std::size_t, std::size_t>> markers;  // (start, end)
  for (auto it = std::sregex_iterator(text.begin(), text.end(), inline_marker_regex());
       it != std::sregex_iterator(); ++it) {
    auto start = static_cast<std::size_t>(it->position(0));
    markers.emplace_back(start, start + static_cast<std::size_t>(it->length(0)));
  }
  if (markers.empty()) return {};
  std::vector<std::string> segments;
  for (std::size_t i = 0; i < markers.size(); ++i) {
    std::size_t end = i + 1 < markers.size() ? markers[i + 1].first : text.size();
    segments.push_back(text.substr(markers[i].second, end - markers[i].second));
  }
  // Preamble before the first marker belongs to the first step.
  segments.front() = text.substr(0, markers.front().first) + " " + segments.front();
  return segments;
}

std::vector<std::string> split_line_markers(std::string_view raw) {
  std::vector<std::string> segments;
  bool any = false;
  for (const auto& line : split_lines(raw)) {
    if (std::regex_search(line, line_marker_regex())) {
      any = true;
      segments.push_back(line);
    } else if (segments.empty()) {
      segments.push_back(line);
    } else {
      segments.back() += "\n" + line;
    }
  }
  if (!any) return {};
  return segments;
}

bool blank(std::string_view raw) {
  for (char c : raw)
    if (!is_space(c)) return false;
  return true;
}

}  // namespace

const char* const kDefaultTerminalPattern =
    R"(maximum value of|minimum value of|the solution is|the solution to|the answer is|final answer|\\boxed\{|in conclusion)";

std::string normalize_step(std::string_view text) {
  std::string out = collapse_whitespace(text);
  for (;;) {
    std::smatch m;
    if (!std::regex_search(out, m, step_prefix_regex()) || m.length(0) == 0) break;
    out = collapse_whitespace(out.substr(static_cast<std::size_t>(m.length(0))));
  }
  return out;
}

TerminalRule::TerminalRule() : TerminalRule(kDefaultTerminalPattern) {}

TerminalRule::TerminalRule(const std::string& pattern, bool equals_in_last_step)
    : answer_pattern(pattern, std::regex::icase | std::regex::ECMAScript),
      equals_in_last_step(equals_in_last_step) {}

bool TerminalRule::matches_answer(std::string_view text) const {
  return std::regex_search(text.begin(), text.end(), answer_pattern);
}

bool TerminalRule::is_terminal_last(std::string_view text) const {
  if (matches_answer(text)) return true;
  return equals_in_last_step && text.find('=') != std::string_view::npos;
}

std::vector<ReasoningStep> decompose_attempt(std::string_view raw, DecomposePolicy policy,
                                             const TerminalRule& rule,
                                             StepRestructurer* restructurer) {
  if (blank(raw)) throw EmptyInput("student answer is blank");

  std::vector<std::string> segments;
  switch (policy) {
    case DecomposePolicy::external: {
      if (restructurer == nullptr)
        throw DomainError("external decomposition requires a restructurer");
      auto rewritten = restructurer->restructure(raw);
      return decompose_attempt(rewritten, DecomposePolicy::numbered_markers, rule);
    }
    case DecomposePolicy::numbered_markers:
      segments = split_inline_markers(raw);
      if (segments.empty()) segments = split_line_markers(raw);
      if (segments.empty()) throw UnparsableFormat("no step markers found");
      break;
    case DecomposePolicy::line_split:
      segments = split_lines(raw);
      break;
  }
  auto steps = finish(segments, rule);
  if (steps.empty()) throw UnparsableFormat("decomposition produced no steps");
  return steps;
}

std::vector<ReasoningStep> decompose_with_fallback(std::string_view raw, const TerminalRule& rule) {
  try {
    return decompose_attempt(raw, DecomposePolicy::numbered_markers, rule);
  } catch (const UnparsableFormat&) {
    return decompose_attempt(raw, DecomposePolicy::line_split, rule);
  }
}

}  // namespace smrc
