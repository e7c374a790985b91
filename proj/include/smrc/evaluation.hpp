#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "smrc/decompose.hpp"
#include "smrc/domain.hpp"

namespace smrc {

/// One benchmark record: the four MSEB fields.
struct DatasetRecord {
  std::string question;
  std::string answer;
  std::string student_answer;
  std::vector<std::string> correct_step;

  /// Throws SchemaError when a required text is empty.
  void validate() const;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

nlohmann::json record_to_json(const DatasetRecord& record);
/// Throws SchemaError naming `index` on a missing, extra or mistyped field.
DatasetRecord record_from_json(const nlohmann::json& j, std::size_t index);

/// Accepts a JSON array or line-delimited JSON (detected from the first
/// non-blank character). Throws ParseError / SchemaError with the record index.
std::vector<DatasetRecord> parse_mseb(std::string_view text);
std::vector<DatasetRecord> load_mseb(const std::string& path);
/// Pretty-printed JSON array.
std::string serialize_mseb(std::span<const DatasetRecord> records);
void write_mseb(const std::string& path, std::span<const DatasetRecord> records);

/// Renders steps as "Step i: text" lines.
std::string join_numbered_steps(std::span<const std::string> steps);

/// Steps before the first error become the correct steps. `first_error_index`
/// is 1-based; |steps| + 1 means the solution has no error.
DatasetRecord convert_first_error(std::string question, std::string answer,
                                  std::span<const std::string> steps,
                                  std::size_t first_error_index);

/// Rows of {question, answer, steps: [text], first_error_index}, as a JSON
/// array or line-delimited JSON, converted with convert_first_error.
std::vector<DatasetRecord> parse_first_error_rows(std::string_view text);
std::vector<DatasetRecord> load_first_error_rows(const std::string& path);

Problem to_problem(const DatasetRecord& record, std::string id);

/// Decomposes the student answer; a step is marked correct when its
/// normalized text equals a normalized entry of `correct_step`.
StudentAttempt to_attempt(const DatasetRecord& record,
                          DecomposePolicy policy = DecomposePolicy::numbered_markers,
                          const TerminalRule& rule = TerminalRule{},
                          StepRestructurer* restructurer = nullptr);

// Metrics.

struct AccSample {
  Problem problem;
  ReasoningPath corrected;
};
/// Fraction of corrected paths the judge accepts. Throws EmptyDataset.
double acc(std::span<const AccSample> samples, AnswerJudge& judge);

struct CsrrSample {
  std::vector<std::string> correct_steps;
  ReasoningPath corrected;
};
/// Fraction of `correct_steps` the judge finds in `corrected`; 1 when there
/// are no correct steps.
double retained_fraction(const CsrrSample& sample, ContainmentJudge& judge);
/// Mean retained fraction. Throws EmptyDataset.
double csrr(std::span<const CsrrSample> samples, ContainmentJudge& judge);
double csrr(std::span<const std::pair<StudentAttempt, ReasoningPath>> samples,
            ContainmentJudge& judge);

/// Harmonic mean; 0 when both arguments are 0.
double hm(double acc, double csrr);

struct SampleScore {
  std::string id;
  bool valid = false;
  double retained_fraction = 0.0;
};

struct EvalReport {
  double acc = 0.0;
  double csrr = 0.0;
  double hm = 0.0;
  std::vector<SampleScore> per_sample;
};

struct EvalSample {
  std::string id;
  Problem problem;
  std::vector<std::string> correct_steps;
  ReasoningPath corrected;  // empty when the correction failed
};

/// Corpus-level ACC and CSRR, HM of the two, and the per-sample breakdown.
EvalReport evaluate(std::span<const EvalSample> samples, AnswerJudge& answer_judge,
                    ContainmentJudge& containment_judge);

nlohmann::json report_to_json(const EvalReport& report);

/// Mean and sample standard deviation (0 for a single value).
struct Spread {
  double mean = 0.0;
  double stddev = 0.0;
};
Spread spread(std::span<const double> values);

}  // namespace smrc
