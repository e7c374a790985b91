#include "smrc/scripted.hpp"

#include <fstream>

#include "smrc/decompose.hpp"
#include "smrc/errors.hpp"

namespace smrc {

namespace {

constexpr std::string_view kSeparator = " > ";

// Re-normalizes every component so script keys match normalized step texts.
std::string canonical_key(std::string_view raw) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (!raw.empty()) {
    auto pos = raw.find(kSeparator, start);
    auto part = raw.substr(start, pos == std::string_view::npos ? pos : pos - start);
    parts.push_back(normalize_step(part));
    if (pos == std::string_view::npos) break;
    start = pos + kSeparator.size();
  }
  return ScriptedBackend::key(parts);
}

}  // namespace

std::string ScriptedBackend::key(std::span<const std::string> texts) {
  std::string out;
  for (const auto& t : texts) {
    if (!out.empty()) out += kSeparator;
    out += t;
  }
  return out;
}

std::string ScriptedBackend::key(const ReasoningPath& path) {
  auto texts = path.texts();
  return key(texts);
}

ScriptedBackend ScriptedBackend::from_json(const nlohmann::json& script) {
  try {
    ScriptedBackend b;
    b.question_ = script.value("question", std::string("scripted problem"));
    b.answer_ = script.value("answer", std::string("scripted answer"));
    b.student_answer_ = script.value("student_answer", std::string());
    const auto children = script.value("children", nlohmann::json::object());
    const auto continuations = script.value("continuations", nlohmann::json::object());
    const auto scores = script.value("scores", nlohmann::json::object());
    for (const auto& [k, v] : children.items()) {
      auto& list = b.children_[canonical_key(k)];
      for (const auto& s : v) list.push_back(normalize_step(s.get<std::string>()));
    }
    for (const auto& [k, v] : continuations.items()) {
      auto& list = b.continuations_[canonical_key(k)];
      for (const auto& r : v) {
        Reply reply;
        for (const auto& s : r.at("steps")) reply.steps.push_back(s.get<std::string>());
        reply.terminal = r.value("terminal", false);
        list.push_back(std::move(reply));
      }
    }
    for (const auto& k : script.value("terminal", nlohmann::json::array()))
      b.terminal_.insert(canonical_key(k.get<std::string>()));
    for (const auto& [k, v] : scores.items())
      b.scores_[canonical_key(k)] = v.get<double>();
    b.default_score_ = script.value("default_score", 0.0);
    for (const auto& k : script.value("correct", nlohmann::json::array()))
      b.correct_.insert(canonical_key(k.get<std::string>()));
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("bad script: ") + e.what());
  }
}

ScriptedBackend ScriptedBackend::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open script " + path);
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("script " + path + ": " + e.what());
  }
}

Problem ScriptedBackend::problem(std::string id) const {
  return Problem(std::move(id), question_, answer_);
}

Continuation ScriptedBackend::generate(const Problem&, const ReasoningPath& prefix,
                                       std::span<const FeedbackTurn>, unsigned sample_index) {
  const auto k = key(prefix);
  Continuation out;
  if (auto it = continuations_.find(k); it != continuations_.end() && !it->second.empty()) {
    const auto& reply = it->second[sample_index % it->second.size()];
    for (std::size_t i = 0; i < reply.steps.size(); ++i)
      out.steps.emplace_back(i + 1, reply.steps[i], reply.terminal && i + 1 == reply.steps.size());
  } else if (auto it = children_.find(k); it != children_.end() && !it->second.empty()) {
    const auto& text = it->second[sample_index % it->second.size()];
    auto child = k.empty() ? text : k + std::string(kSeparator) + text;
    out.steps.emplace_back(1, text, terminal_.count(child) > 0);
  } else {
    throw GeneratorFailure("script has no continuation for '" + k + "'");
  }
  for (const auto& s : out.steps) {
    if (!out.raw_text.empty()) out.raw_text += '\n';
    out.raw_text += s.text();
  }
  return out;
}

double ScriptedBackend::raw_score(const Problem&, const ReasoningPath& path) {
  const auto k = key(path);
  ++score_calls_[k];
  auto it = scores_.find(k);
  return it == scores_.end() ? default_score_ : it->second;
}

Verdict ScriptedBackend::judge(const Problem&, const ReasoningPath& path) {
  return {correct_.count(key(path)) > 0, std::nullopt};
}

}  // namespace smrc
