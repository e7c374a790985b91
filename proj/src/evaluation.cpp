#include "smrc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "smrc/errors.hpp"

namespace smrc {

namespace {

const std::set<std::string> kRecordFields{"question", "answer", "student_answer", "correct_step"};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

// Either the elements of a top-level array or one document per non-blank line.
std::vector<nlohmann::json> parse_documents(std::string_view text) {
  auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  std::vector<nlohmann::json> out;
  if (text[first] == '[') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSON array: ") + e.what());
    }
    for (auto& j : doc) out.push_back(std::move(j));
    return out;
  }
  std::size_t line_no = 0, start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      try {
        out.push_back(nlohmann::json::parse(line));
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("record " + std::to_string(out.size()) + " (line " +
                         std::to_string(line_no) + "): " + e.what());
      }
    }
    start = end + 1;
  }
  return out;
}

std::string required_text(const nlohmann::json& j, const char* field, std::size_t index) {
  if (!j.contains(field))
    throw SchemaError("record " + std::to_string(index) + ": missing field \"" + field + "\"");
  if (!j[field].is_string())
    throw SchemaError("record " + std::to_string(index) + ": field \"" + field +
                      "\" must be a string");
  return j[field].get<std::string>();
}

}  // namespace

void DatasetRecord::validate() const {
  if (question.empty()) throw SchemaError("question must be non-empty");
  if (answer.empty()) throw SchemaError("answer must be non-empty");
  if (student_answer.empty()) throw SchemaError("student_answer must be non-empty");
}

nlohmann::json record_to_json(const DatasetRecord& record) {
  return {{"question", record.question},
          {"answer", record.answer},
          {"student_answer", record.student_answer},
          {"correct_step", record.correct_step}};
}

DatasetRecord record_from_json(const nlohmann::json& j, std::size_t index) {
  const auto where = "record " + std::to_string(index);
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (!kRecordFields.count(k)) throw SchemaError(where + ": unexpected field \"" + k + "\"");
  DatasetRecord r;
  r.question = required_text(j, "question", index);
  r.answer = required_text(j, "answer", index);
  r.student_answer = required_text(j, "student_answer", index);
  if (!j.contains("correct_step")) throw SchemaError(where + ": missing field \"correct_step\"");
  const auto& steps = j["correct_step"];
  if (!steps.is_array()) throw SchemaError(where + ": \"correct_step\" must be an array");
  for (const auto& s : steps) {
    if (!s.is_string()) throw SchemaError(where + ": \"correct_step\" entries must be strings");
    r.correct_step.push_back(s.get<std::string>());
  }
  try {
    r.validate();
  } catch (const SchemaError& e) {
    throw SchemaError(where + ": " + e.what());
  }
  return r;
}

std::vector<DatasetRecord> parse_mseb(std::string_view text) {
  auto docs = parse_documents(text);
  std::vector<DatasetRecord> out;
  out.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) out.push_back(record_from_json(docs[i], i));
  return out;
}

std::vector<DatasetRecord> load_mseb(const std::string& path) { return parse_mseb(read_file(path)); }

std::string serialize_mseb(std::span<const DatasetRecord> records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) arr.push_back(record_to_json(r));
  return arr.dump(2) + "\n";
}

void write_mseb(const std::string& path, std::span<const DatasetRecord> records) {
  write_file(path, serialize_mseb(records));
}

std::string join_numbered_steps(std::span<const std::string> steps) {
  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i) out += '\n';
    out += "Step " + std::to_string(i + 1) + ": " + steps[i];
  }
  return out;
}

DatasetRecord convert_first_error(std::string question, std::string answer,
                                  std::span<const std::string> steps,
                                  std::size_t first_error_index) {
  if (first_error_index < 1 || first_error_index > steps.size() + 1)
    throw IndexOutOfRange("first_error_index " + std::to_string(first_error_index) +
                          " outside 1.." + std::to_string(steps.size() + 1));
  DatasetRecord r;
  r.question = std::move(question);
  r.answer = std::move(answer);
  r.student_answer = join_numbered_steps(steps);
  r.correct_step.assign(steps.begin(), steps.begin() + static_cast<long>(first_error_index - 1));
  r.validate();
  return r;
}

std::vector<DatasetRecord> parse_first_error_rows(std::string_view text) {
  auto docs = parse_documents(text);
  std::vector<DatasetRecord> out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto& j = docs[i];
    const auto where = "row " + std::to_string(i);
    if (!j.is_object()) throw SchemaError(where + ": expected an object");
    auto question = required_text(j, "question", i);
    auto answer = required_text(j, "answer", i);
    if (!j.contains("steps") || !j["steps"].is_array())
      throw SchemaError(where + ": \"steps\" must be an array");
    std::vector<std::string> steps;
    for (const auto& s : j["steps"]) {
      if (!s.is_string()) throw SchemaError(where + ": \"steps\" entries must be strings");
      steps.push_back(s.get<std::string>());
    }
    if (!j.contains("first_error_index") || !j["first_error_index"].is_number_integer())
      throw SchemaError(where + ": \"first_error_index\" must be an integer");
    auto idx = j["first_error_index"].get<long long>();
    if (idx < 1) throw IndexOutOfRange(where + ": first_error_index must be >= 1");
    try {
      out.push_back(convert_first_error(std::move(question), std::move(answer), steps,
                                        static_cast<std::size_t>(idx)));
    } catch (const IndexOutOfRange& e) {
      throw IndexOutOfRange(where + ": " + e.what());
    } catch (const SchemaError& e) {
      throw SchemaError(where + ": " + e.what());
    }
  }
  return out;
}

std::vector<DatasetRecord> load_first_error_rows(const std::string& path) {
  return parse_first_error_rows(read_file(path));
}

Problem to_problem(const DatasetRecord& record, std::string id) {
  return Problem(std::move(id), record.question, record.answer);
}

StudentAttempt to_attempt(const DatasetRecord& record, DecomposePolicy policy,
                          const TerminalRule& rule, StepRestructurer* restructurer) {
  auto steps = policy == DecomposePolicy::numbered_markers
                   ? decompose_with_fallback(record.student_answer, rule)
                   : decompose_attempt(record.student_answer, policy, rule, restructurer);
  std::set<std::string> correct;
  for (const auto& c : record.correct_step) correct.insert(normalize_step(c));
  std::vector<std::size_t> indices;
  for (const auto& s : steps)
    if (correct.count(s.text())) indices.push_back(s.index());
  return StudentAttempt(record.student_answer, std::move(steps), std::move(indices));
}

double acc(std::span<const AccSample> samples, AnswerJudge& judge) {
  if (samples.empty()) throw EmptyDataset("ACC needs at least one sample");
  std::size_t valid = 0;
  for (const auto& s : samples)
    if (judge.judge(s.problem, s.corrected).valid) ++valid;
  return static_cast<double>(valid) / static_cast<double>(samples.size());
}

double retained_fraction(const CsrrSample& sample, ContainmentJudge& judge) {
  if (sample.correct_steps.empty()) return 1.0;
  std::size_t kept = 0;
  for (const auto& step : sample.correct_steps)
    if (judge.contains(step, sample.corrected).valid) ++kept;
  return static_cast<double>(kept) / static_cast<double>(sample.correct_steps.size());
}

double csrr(std::span<const CsrrSample> samples, ContainmentJudge& judge) {
  if (samples.empty()) throw EmptyDataset("CSRR needs at least one sample");
  double total = 0.0;
  for (const auto& s : samples) total += retained_fraction(s, judge);
  return total / static_cast<double>(samples.size());
}

double csrr(std::span<const std::pair<StudentAttempt, ReasoningPath>> samples,
            ContainmentJudge& judge) {
  std::vector<CsrrSample> converted;
  converted.reserve(samples.size());
  for (const auto& [attempt, path] : samples) converted.push_back({attempt.correct_texts(), path});
  return csrr(converted, judge);
}

double hm(double a, double c) {
  if (a + c <= 0.0) return 0.0;
  return 2.0 * a * c / (a + c);
}

EvalReport evaluate(std::span<const EvalSample> samples, AnswerJudge& answer_judge,
                    ContainmentJudge& containment_judge) {
  if (samples.empty()) throw EmptyDataset("nothing to evaluate");
  EvalReport report;
  std::size_t valid = 0;
  double retained = 0.0;
  for (const auto& s : samples) {
    SampleScore score;
    score.id = s.id;
    score.valid = !s.corrected.empty() && answer_judge.judge(s.problem, s.corrected).valid;
    score.retained_fraction = retained_fraction({s.correct_steps, s.corrected}, containment_judge);
    valid += score.valid ? 1 : 0;
    retained += score.retained_fraction;
    report.per_sample.push_back(std::move(score));
  }
  const auto n = static_cast<double>(samples.size());
  report.acc = static_cast<double>(valid) / n;
  report.csrr = retained / n;
  report.hm = hm(report.acc, report.csrr);
  return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& s : report.per_sample)
    per.push_back({{"id", s.id}, {"valid", s.valid}, {"retained_fraction", s.retained_fraction}});
  return {{"acc", report.acc}, {"csrr", report.csrr}, {"hm", report.hm}, {"per_sample", per}};
}

Spread spread(std::span<const double> values) {
  Spread s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return s;
}

}  // namespace smrc
