#include "smrc/llm.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <random>
#include <regex>
#include <thread>

#include <httplib.h>

#include "smrc/errors.hpp"

namespace smrc::llm {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Releases a permit on scope exit.
struct Permit {
  explicit Permit(std::counting_semaphore<1024>& s) : sem(s) { sem.acquire(); }
  ~Permit() { sem.release(); }
  Permit(const Permit&) = delete;
  Permit& operator=(const Permit&) = delete;
  std::counting_semaphore<1024>& sem;
};

void set_timeout(httplib::Client& client, double seconds) {
  const auto whole = static_cast<time_t>(seconds);
  const auto usec = static_cast<time_t>((seconds - static_cast<double>(whole)) * 1e6);
  client.set_connection_timeout(whole, usec);
  client.set_read_timeout(whole, usec);
  client.set_write_timeout(whole, usec);
}

bool retriable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

void EndpointConfig::validate() const {
  if (base_url.empty()) throw ConfigError("endpoint base_url must be set (SMRC_API_BASE)");
  if (!(timeout_seconds > 0.0)) throw ConfigError("timeout must be > 0");
  if (max_in_flight < 1 || max_in_flight > 1024) throw ConfigError("max_in_flight must be 1..1024");
  if (backoff_initial_seconds < 0.0 || backoff_max_seconds < backoff_initial_seconds)
    throw ConfigError("backoff bounds must satisfy 0 <= initial <= max");
}

EndpointConfig EndpointConfig::from_env() {
  EndpointConfig c;
  if (const char* v = std::getenv("SMRC_API_BASE")) c.base_url = v;
  if (const char* v = std::getenv("SMRC_API_KEY")) c.api_key = v;
  if (const char* v = std::getenv("SMRC_MODEL")) c.model = v;
  return c;
}

double backoff_delay(const EndpointConfig& config, unsigned retry) {
  const double base =
      std::min(config.backoff_max_seconds,
               config.backoff_initial_seconds * std::ldexp(1.0, static_cast<int>(std::min(retry, 30u))));
  std::mt19937_64 rng(config.jitter_seed * 0x9E3779B97F4A7C15ULL + retry);
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return base * (0.5 + 0.5 * u);
}

nlohmann::json chat_request_body(const EndpointConfig& config,
                                 std::span<const ChatMessage> messages, double temperature) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", config.model}, {"messages", std::move(msgs)}, {"temperature", temperature}};
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = vars.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

std::vector<ChatMessage> generation_messages(const PromptSet& prompts, const Problem& problem,
                                             const ReasoningPath& path,
                                             std::span<const FeedbackTurn> feedback) {
  std::vector<ChatMessage> out;
  out.push_back({"user", render_template(prompts.node_generation,
                                         {{"question", problem.question},
                                          {"solution", path.render()}})});
  for (const auto& turn : feedback) {
    if (!turn.rejected_reply.empty()) out.push_back({"assistant", turn.rejected_reply});
    out.push_back({"user", turn.feedback.empty() ? prompts.feedback : turn.feedback});
  }
  return out;
}

Verdict parse_verdict(std::string_view reply) {
  std::size_t i = 0;
  while (i < reply.size() && !std::isalpha(static_cast<unsigned char>(reply[i]))) ++i;
  std::size_t j = i;
  while (j < reply.size() && std::isalpha(static_cast<unsigned char>(reply[j]))) ++j;
  const auto word = lower(reply.substr(i, j - i));
  std::optional<std::string> rationale;
  auto rest = normalize_step(reply.substr(j));
  while (!rest.empty() && (rest.front() == '.' || rest.front() == ',' || rest.front() == ':' ||
                           rest.front() == '*' || rest.front() == ' '))
    rest.erase(rest.begin());
  if (!rest.empty()) rationale = rest;
  if (word == "yes") return {true, rationale};
  if (word == "no") return {false, rationale};
  throw UnparsableVerdict("judge reply is neither YES nor NO: " + std::string(reply.substr(0, 80)));
}

Continuation continuation_from_reply(std::string_view reply, const ReasoningPath& prefix,
                                     const TerminalRule& rule) {
  static const std::regex kSolutionHeader(R"(^\s*solution\s*:?[ \t]*(\n|$))", std::regex::icase);
  const auto body = std::regex_replace(std::string(reply), kSolutionHeader, "",
                                       std::regex_constants::format_first_only);
  std::vector<ReasoningStep> steps;
  try {
    steps = decompose_with_fallback(body, rule);
  } catch (const DomainError& e) {
    throw GeneratorFailure(std::string("unusable reply: ") + e.what());
  }
  const auto prefix_texts = prefix.texts();
  std::size_t skip = 0;
  while (skip < steps.size() && skip < prefix_texts.size() && steps[skip].text() == prefix_texts[skip])
    ++skip;
  if (skip == steps.size()) throw GeneratorFailure("reply adds no new steps");
  Continuation out;
  out.raw_text = std::string(reply);
  for (std::size_t k = skip; k < steps.size(); ++k) out.steps.push_back(steps[k].with_index(k - skip + 1));
  return out;
}

ChatClient::ChatClient(EndpointConfig config, Sleeper sleeper)
    : config_(std::move(config)), sleeper_(std::move(sleeper)) {
  config_.validate();
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(config_.base_url, m, kUrl))
    throw ConfigError("base_url must look like http(s)://host[:port][/path]: " + config_.base_url);
  host_ = m[1].str();
  path_prefix_ = m[2].matched ? m[2].str() : std::string();
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  if (!sleeper_)
    sleeper_ = [](double s) { std::this_thread::sleep_for(std::chrono::duration<double>(s)); };
  permits_ = std::make_unique<std::counting_semaphore<1024>>(config_.max_in_flight);
}

std::string ChatClient::complete(std::span<const ChatMessage> messages, double temperature) {
  const auto body = chat_request_body(config_, messages, temperature).dump();
  const auto path = path_prefix_ + "/chat/completions";
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  std::string last_error;
  bool last_was_timeout = false;
  for (unsigned attempt = 0;; ++attempt) {
    httplib::Result res;
    {
      Permit permit(*permits_);
      httplib::Client client(host_);
      set_timeout(client, config_.timeout_seconds);
      ++requests_sent_;
      res = client.Post(path, headers, body, "application/json");
    }
    bool retry = false;
    if (!res) {
      last_was_timeout = res.error() == httplib::Error::Read ||
                         res.error() == httplib::Error::Write ||
                         res.error() == httplib::Error::ConnectionTimeout;
      last_error = "request failed: " + httplib::to_string(res.error());
      retry = true;
    } else if (res->status != 200) {
      last_was_timeout = false;
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
      if (!retriable_status(res->status)) throw HttpError(last_error);
      retry = true;
    } else {
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::parse_error&) {
        throw EmptyCompletion("response body is not JSON");
      }
      const auto* content = [&]() -> const nlohmann::json* {
        if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty())
          return nullptr;
        const auto& choice = doc["choices"][0];
        if (!choice.contains("message") || !choice["message"].contains("content")) return nullptr;
        return &choice["message"]["content"];
      }();
      if (!content || !content->is_string() || content->get<std::string>().empty())
        throw EmptyCompletion("completion has no content");
      return content->get<std::string>();
    }
    if (retry && attempt < config_.max_retries) {
      sleeper_(backoff_delay(config_, attempt));
      continue;
    }
    if (last_was_timeout) throw Timeout(last_error);
    throw HttpError(last_error);
  }
}

RemoteGenerator::RemoteGenerator(std::shared_ptr<ChatClient> client, PromptSet prompts,
                                 TerminalRule rule)
    : client_(std::move(client)), prompts_(std::move(prompts)), rule_(std::move(rule)) {}

Continuation RemoteGenerator::generate(const Problem& problem, const ReasoningPath& prefix,
                                       std::span<const FeedbackTurn> feedback,
                                       unsigned sample_index) {
  const auto messages = generation_messages(prompts_, problem, prefix, feedback);
  const double temperature =
      sample_index == 0 ? client_->config().temperature : client_->config().sampling_temperature;
  std::string reply;
  try {
    reply = client_->complete(messages, temperature);
  } catch (const LlmError& e) {
    throw GeneratorFailure(e.what());
  }
  return continuation_from_reply(reply, prefix, rule_);
}

RemoteAnswerJudge::RemoteAnswerJudge(std::shared_ptr<ChatClient> client, PromptSet prompts)
    : client_(std::move(client)), prompts_(std::move(prompts)) {}

Verdict RemoteAnswerJudge::judge(const Problem& problem, const ReasoningPath& path) {
  const std::vector<ChatMessage> messages{
      {"user", render_template(prompts_.acc_judge, {{"question", problem.question},
                                                    {"reference", problem.reference_answer},
                                                    {"solution", path.render()}})}};
  try {
    return parse_verdict(client_->complete(messages));
  } catch (const LlmError& e) {
    throw JudgeFailure(e.what());
  }
}

RemoteContainmentJudge::RemoteContainmentJudge(std::shared_ptr<ChatClient> client,
                                               PromptSet prompts)
    : client_(std::move(client)), prompts_(std::move(prompts)) {}

Verdict RemoteContainmentJudge::contains(std::string_view original_step,
                                         const ReasoningPath& corrected) {
  const std::vector<ChatMessage> messages{
      {"user", render_template(prompts_.containment_judge,
                               {{"step", std::string(original_step)},
                                {"solution", corrected.render()}})}};
  try {
    return parse_verdict(client_->complete(messages));
  } catch (const LlmError& e) {
    throw JudgeFailure(e.what());
  }
}

RemoteScorer::RemoteScorer(std::shared_ptr<ChatClient> client, PromptSet prompts)
    : client_(std::move(client)), prompts_(std::move(prompts)) {}

double RemoteScorer::raw_score(const Problem& problem, const ReasoningPath& path) {
  static const std::regex kNumber(R"([-+]?(?:\d+\.?\d*|\.\d+))");
  const std::vector<ChatMessage> messages{
      {"user", render_template(prompts_.step_scorer,
                               {{"question", problem.question}, {"solution", path.render()}})}};
  std::string reply;
  try {
    reply = client_->complete(messages);
  } catch (const LlmError& e) {
    throw ScorerFailure(e.what());
  }
  std::smatch m;
  if (!std::regex_search(reply, m, kNumber))
    throw ScorerFailure("score reply has no number: " + reply.substr(0, 80));
  return std::stod(m.str());
}

RemoteRestructurer::RemoteRestructurer(std::shared_ptr<ChatClient> client, PromptSet prompts)
    : client_(std::move(client)), prompts_(std::move(prompts)) {}

std::string RemoteRestructurer::restructure(std::string_view raw) {
  const std::vector<ChatMessage> messages{
      {"user", render_template(prompts_.decomposition, {{"student_answer", std::string(raw)}})}};
  try {
    return client_->complete(messages);
  } catch (const LlmError& e) {
    throw UnparsableFormat(std::string("restructuring failed: ") + e.what());
  }
}

}  // namespace smrc::llm
