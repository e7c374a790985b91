#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "smrc/decompose.hpp"
#include "smrc/domain.hpp"

namespace smrc::llm {

/// Chat-completions endpoint settings.
struct EndpointConfig {
  std::string base_url;  // e.g. http://localhost:8000/v1
  std::string model;
  std::string api_key;
  double timeout_seconds = 60.0;
  unsigned max_retries = 3;
  double temperature = 0.0;
  // Used for sample_index > 0 so repeated draws for one prefix can differ.
  double sampling_temperature = 0.7;
  double backoff_initial_seconds = 0.5;
  double backoff_max_seconds = 8.0;
  std::uint64_t jitter_seed = 0;
  unsigned max_in_flight = 4;

  /// Throws ConfigError.
  void validate() const;

  /// Reads SMRC_API_BASE, SMRC_API_KEY and SMRC_MODEL; unset variables leave
  /// the defaults untouched.
  static EndpointConfig from_env();
};

/// Delay before retry number `retry` (0-based): exponential, capped, scaled by
/// a jitter factor in [0.5, 1) drawn from (jitter_seed, retry).
double backoff_delay(const EndpointConfig& config, unsigned retry);

struct ChatMessage {
  std::string role;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

nlohmann::json chat_request_body(const EndpointConfig& config,
                                 std::span<const ChatMessage> messages, double temperature);

/// Prompt templates. Placeholders are written {name}.
struct PromptSet {
  std::string node_generation;    // {question}, {solution}
  std::string feedback;
  std::string decomposition;      // {student_answer}
  std::string acc_judge;          // {question}, {reference}, {solution}
  std::string containment_judge;  // {step}, {solution}
  std::string step_scorer;        // {question}, {solution}

  static PromptSet defaults();
};

/// Substitutes every {name} from `vars`; other braces are left alone.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

/// The user prompt for a path, followed by one assistant/user pair per
/// feedback turn (the assistant message is omitted when the rejected reply is
/// empty, e.g. after a transport failure).
std::vector<ChatMessage> generation_messages(const PromptSet& prompts, const Problem& problem,
                                             const ReasoningPath& path,
                                             std::span<const FeedbackTurn> feedback);

/// Parses a YES/NO reply from its first word; throws UnparsableVerdict.
Verdict parse_verdict(std::string_view reply);

/// Turns a full-solution reply into the continuation of `prefix`: drops a
/// leading "Solution:" line, splits the rest with decompose_with_fallback and
/// skips the leading steps that repeat the prefix.
/// Throws GeneratorFailure when nothing new remains.
Continuation continuation_from_reply(std::string_view reply, const ReasoningPath& prefix,
                                     const TerminalRule& rule);

/// Blocking chat-completions client. Retries connection failures, 429 and
/// 5xx responses up to max_retries times; at most max_in_flight requests run
/// at once.
class ChatClient {
 public:
  using Sleeper = std::function<void(double seconds)>;

  explicit ChatClient(EndpointConfig config, Sleeper sleeper = {});

  /// The assistant message content. Throws Timeout, HttpError or
  /// EmptyCompletion.
  std::string complete(std::span<const ChatMessage> messages, double temperature);
  std::string complete(std::span<const ChatMessage> messages) {
    return complete(messages, config_.temperature);
  }

  const EndpointConfig& config() const noexcept { return config_; }
  /// HTTP requests sent so far, retries included.
  std::size_t requests_sent() const noexcept { return requests_sent_; }

 private:
  EndpointConfig config_;
  Sleeper sleeper_;
  std::string host_;
  std::string path_prefix_;
  std::unique_ptr<std::counting_semaphore<1024>> permits_;
  std::atomic<std::size_t> requests_sent_{0};
};

class RemoteGenerator final : public Generator {
 public:
  RemoteGenerator(std::shared_ptr<ChatClient> client, PromptSet prompts,
                  TerminalRule rule = TerminalRule{});
  Continuation generate(const Problem& problem, const ReasoningPath& prefix,
                        std::span<const FeedbackTurn> feedback, unsigned sample_index) override;
  bool concurrent_calls_safe() const noexcept override { return true; }

 private:
  std::shared_ptr<ChatClient> client_;
  PromptSet prompts_;
  TerminalRule rule_;
};

class RemoteAnswerJudge final : public AnswerJudge {
 public:
  RemoteAnswerJudge(std::shared_ptr<ChatClient> client, PromptSet prompts);
  Verdict judge(const Problem& problem, const ReasoningPath& path) override;
  bool concurrent_calls_safe() const noexcept override { return true; }

 private:
  std::shared_ptr<ChatClient> client_;
  PromptSet prompts_;
};

class RemoteContainmentJudge final : public ContainmentJudge {
 public:
  RemoteContainmentJudge(std::shared_ptr<ChatClient> client, PromptSet prompts);
  Verdict contains(std::string_view original_step, const ReasoningPath& corrected) override;
  bool concurrent_calls_safe() const noexcept override { return true; }

 private:
  std::shared_ptr<ChatClient> client_;
  PromptSet prompts_;
};

/// Prompted stand-in for a trained reward model: asks the endpoint for a
/// number in [-1, 1] and reads the first number in the reply.
class RemoteScorer final : public Scorer {
 public:
  RemoteScorer(std::shared_ptr<ChatClient> client, PromptSet prompts);
  bool concurrent_calls_safe() const noexcept override { return true; }

 protected:
  double raw_score(const Problem& problem, const ReasoningPath& path) override;

 private:
  std::shared_ptr<ChatClient> client_;
  PromptSet prompts_;
};

/// Sends the decomposition prompt and returns the reply verbatim.
class RemoteRestructurer final : public StepRestructurer {
 public:
  RemoteRestructurer(std::shared_ptr<ChatClient> client, PromptSet prompts);
  std::string restructure(std::string_view raw) override;

 private:
  std::shared_ptr<ChatClient> client_;
  PromptSet prompts_;
};

}  // namespace smrc::llm
