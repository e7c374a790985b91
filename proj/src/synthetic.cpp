#include "smrc/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <random>

#include "smrc/decompose.hpp"
#include "smrc/errors.hpp"

namespace smrc::synth {

const char* const kQuestionPrefix = "Evaluate the expression: ";
const char* const kAnswerPrefix = "The answer is ";

Expr Expr::number(std::int64_t value) {
  Expr e;
  e.value_ = value;
  return e;
}

Expr Expr::binary(char op, Expr lhs, Expr rhs) {
  if (op != '+' && op != '-' && op != '*') throw ParseError(std::string("unknown operator ") + op);
  Expr e;
  e.op_ = op;
  e.lhs_ = std::make_shared<const Expr>(std::move(lhs));
  e.rhs_ = std::make_shared<const Expr>(std::move(rhs));
  return e;
}

std::int64_t apply(char op, std::int64_t a, std::int64_t b) {
  std::int64_t r = 0;
  bool overflow = false;
  switch (op) {
    case '+': overflow = __builtin_add_overflow(a, b, &r); break;
    case '-': overflow = __builtin_sub_overflow(a, b, &r); break;
    case '*': overflow = __builtin_mul_overflow(a, b, &r); break;
    default: throw ParseError(std::string("unknown operator ") + op);
  }
  if (overflow) throw ParseError("integer overflow while evaluating expression");
  return r;
}

std::int64_t Expr::evaluate() const {
  if (is_number()) return value_;
  return apply(op_, lhs_->evaluate(), rhs_->evaluate());
}

std::size_t Expr::op_count() const {
  return is_number() ? 0 : 1 + lhs_->op_count() + rhs_->op_count();
}

std::string Expr::render_operand() const {
  if (is_number()) return value_ < 0 ? "(" + std::to_string(value_) + ")" : std::to_string(value_);
  return "(" + render() + ")";
}

std::string Expr::render() const {
  if (is_number()) return std::to_string(value_);
  return lhs_->render_operand() + " " + op_ + " " + rhs_->render_operand();
}

Expr Expr::reduce() const {
  return reduce_with([](std::int64_t a, char op, std::int64_t b) { return apply(op, a, b); });
}

namespace {

// Recursive-descent parser over the ASCII form; × and − are mapped first.
class Parser {
 public:
  explicit Parser(std::string text) : s_(std::move(text)) {}

  Expr parse() {
    auto e = parse_sum();
    skip();
    if (pos_ != s_.size()) fail("trailing characters");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& why) {
    throw ParseError("cannot parse expression '" + s_ + "': " + why);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  Expr parse_sum() {
    auto lhs = parse_product();
    for (;;) {
      if (eat('+')) lhs = Expr::binary('+', lhs, parse_product());
      else if (eat('-')) lhs = Expr::binary('-', lhs, parse_product());
      else return lhs;
    }
  }
  Expr parse_product() {
    auto lhs = parse_unary();
    while (eat('*')) lhs = Expr::binary('*', lhs, parse_unary());
    return lhs;
  }
  Expr parse_unary() {
    if (eat('-')) {
      auto inner = parse_unary();
      if (inner.is_number()) return Expr::number(apply('-', 0, inner.literal()));
      fail("unary minus is only supported on literals");
    }
    return parse_atom();
  }
  Expr parse_atom() {
    skip();
    if (eat('(')) {
      auto e = parse_sum();
      if (!eat(')')) fail("missing ')'");
      return e;
    }
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) fail("expected a number");
    if (pos_ - start > 17) fail("number too long");
    return Expr::number(std::stoll(s_.substr(start, pos_ - start)));
  }

  std::string s_;
  std::size_t pos_ = 0;
};

std::string ascii_operators(std::string_view text) {
  std::string out(text);
  auto replace_all = [&out](const std::string& from, const std::string& to) {
    for (std::size_t p = out.find(from); p != std::string::npos; p = out.find(from, p + to.size()))
      out.replace(p, from.size(), to);
  };
  replace_all("\xC3\x97", "*");      // ×
  replace_all("\xE2\x88\x92", "-");  // −
  return out;
}

bool istarts_with(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(text[i])) !=
        std::tolower(static_cast<unsigned char>(prefix[i])))
      return false;
  return true;
}

// Portable bounded draw; std::uniform_int_distribution differs across libraries.
std::uint64_t draw(std::mt19937_64& rng, std::uint64_t bound) { return rng() % bound; }

Expr random_expr(std::mt19937_64& rng, unsigned ops) {
  if (ops == 0) {
    auto magnitude = static_cast<std::int64_t>(1 + draw(rng, 9));
    return Expr::number(draw(rng, 2) ? -magnitude : magnitude);
  }
  static constexpr char kOps[] = {'+', '-', '*'};
  const char op = kOps[draw(rng, 3)];
  const auto left_ops = static_cast<unsigned>(draw(rng, ops));
  auto lhs = random_expr(rng, left_ops);
  auto rhs = random_expr(rng, ops - 1 - left_ops);
  return Expr::binary(op, std::move(lhs), std::move(rhs));
}

bool all_subexpressions_nonzero(const Expr& e) {
  if (e.evaluate() == 0) return false;
  if (e.is_number()) return true;
  return all_subexpressions_nonzero(e.lhs()) && all_subexpressions_nonzero(e.rhs());
}

}  // namespace

Expr parse_expression(std::string_view text) { return Parser(ascii_operators(text)).parse(); }

std::string SynthProblem::question() const { return kQuestionPrefix + expression.render(); }

Problem SynthProblem::to_problem(std::string id) const {
  std::string reference;
  for (const auto& s : solve_from(expression)) {
    if (!reference.empty()) reference += '\n';
    reference += s.text();
  }
  return Problem(std::move(id), question(), reference);
}

SynthProblem parse_problem(const Problem& problem) {
  const std::string_view q = problem.question;
  const std::string_view prefix = kQuestionPrefix;
  auto pos = q.find(prefix);
  if (pos == std::string_view::npos)
    throw UnreachableState("not a synthetic problem: " + problem.question);
  try {
    SynthProblem p;
    p.expression = parse_expression(q.substr(pos + prefix.size()));
    p.ops = static_cast<unsigned>(p.expression.op_count());
    p.target = p.expression.evaluate();
    return p;
  } catch (const ParseError& e) {
    throw UnreachableState(std::string("synthetic problem does not parse: ") + e.what());
  }
}

std::string state_text(const Expr& state) {
  if (state.is_number()) return kAnswerPrefix + std::to_string(state.literal());
  return state.render();
}

std::optional<Expr> parse_state(std::string_view text) {
  auto body = normalize_step(text);
  std::string_view view = body;
  const std::string_view answer = kAnswerPrefix;
  if (istarts_with(view, answer)) view.remove_prefix(answer.size());
  while (!view.empty() && (view.back() == '.' || view.back() == ' ')) view.remove_suffix(1);
  try {
    return parse_expression(view);
  } catch (const ParseError&) {
    return std::nullopt;
  }
}

std::vector<ReasoningStep> solve_from(const Expr& state) {
  std::vector<ReasoningStep> steps;
  Expr cur = state;
  if (cur.is_number()) {
    steps.emplace_back(1, state_text(cur), true);
    return steps;
  }
  while (!cur.is_number()) {
    cur = cur.reduce();
    steps.emplace_back(steps.size() + 1, state_text(cur), cur.is_number());
  }
  return steps;
}

std::pair<SynthProblem, ReasoningPath> gen_problem(std::uint64_t seed, unsigned k) {
  if (k < 1 || k > 12) throw ConfigError("synthetic problems need 1 <= k <= 12");
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + k);
  for (;;) {
    auto expr = random_expr(rng, k);
    if (!all_subexpressions_nonzero(expr)) continue;
    SynthProblem p;
    p.seed = seed;
    p.ops = k;
    p.target = expr.evaluate();
    p.expression = std::move(expr);
    ReasoningPath path;
    for (const auto& s : solve_from(p.expression)) path.append(s, StepOrigin::student);
    return {std::move(p), std::move(path)};
  }
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::off_by_one: return "off-by-one";
    case ErrorKind::sign_flip: return "sign-flip";
    case ErrorKind::dropped_term: return "dropped-term";
  }
  return "unknown";
}

StudentAttempt inject_errors(const SynthProblem& problem, const ReasoningPath& canonical,
                             const ErrorSpec& spec) {
  const auto k = canonical.size();
  if (spec.position < 1 || spec.position > k)
    throw ConfigError("error position must lie within the canonical solution");

  std::vector<ReasoningStep> steps;
  Expr state = problem.expression;
  for (std::size_t i = 1; i < spec.position; ++i) {
    steps.push_back(canonical.steps()[i - 1].step.with_index(i));
    state = state.reduce();
  }
  state = state.reduce_with([kind = spec.kind](std::int64_t a, char op, std::int64_t b) {
    const auto right = apply(op, a, b);
    switch (kind) {
      case ErrorKind::sign_flip:
        if (right != 0) return -right;
        break;
      case ErrorKind::dropped_term:
        if (a != right) return a;
        break;
      case ErrorKind::off_by_one:
        break;
    }
    return right + 1;
  });
  steps.emplace_back(spec.position, state_text(state), state.is_number());
  while (!state.is_number()) {
    state = state.reduce();
    steps.emplace_back(steps.size() + 1, state_text(state), state.is_number());
  }
  if (state.literal() == problem.target)
    throw InvariantViolation("injected error did not change the final answer");

  std::string raw;
  for (const auto& s : steps) {
    if (!raw.empty()) raw += '\n';
    raw += "Step " + std::to_string(s.index()) + ": " + s.text();
  }
  std::vector<std::size_t> correct;
  for (std::size_t i = 1; i < spec.position; ++i) correct.push_back(i);
  return StudentAttempt(std::move(raw), std::move(steps), std::move(correct));
}

PrefixCheck check_prefix(const SynthProblem& problem, const ReasoningPath& path) {
  PrefixCheck out;
  out.last_valid_state = problem.expression;
  for (const auto& s : path.steps()) {
    auto state = parse_state(s.step.text());
    if (!state) break;
    try {
      if (state->evaluate() != problem.target) break;
    } catch (const ParseError&) {
      break;
    }
    ++out.valid_steps;
    out.last_valid_state = *state;
  }
  return out;
}

double oracle_score(const SynthProblem& problem, const ReasoningPath& path) {
  if (path.complete()) return oracle_answer_judge(problem, path).valid ? 1.0 : -1.0;
  const auto m = std::min<std::size_t>(check_prefix(problem, path).valid_steps, problem.ops);
  return static_cast<double>(m) / static_cast<double>(problem.ops + 1);
}

Continuation oracle_generate(const SynthProblem& problem, const ReasoningPath& prefix,
                             unsigned sample_index) {
  auto check = check_prefix(problem, prefix);
  Continuation out;
  if (sample_index == 0) {
    out.steps = solve_from(check.last_valid_state);
  } else {
    Expr state = check.last_valid_state;
    if (!prefix.empty())
      if (auto last = parse_state(prefix.steps().back().step.text())) state = *last;
    const auto offset = static_cast<std::int64_t>(sample_index);
    Expr first = state.is_number()
                     ? Expr::number(state.literal() + offset)
                     : state.reduce_with([offset](std::int64_t a, char op, std::int64_t b) {
                         return apply(op, a, b) + offset;
                       });
    out.steps.emplace_back(1, state_text(first), first.is_number());
    if (!first.is_number())
      for (auto& s : solve_from(first)) out.steps.push_back(s.with_index(out.steps.size() + 1));
  }
  for (const auto& s : out.steps) {
    if (!out.raw_text.empty()) out.raw_text += '\n';
    out.raw_text += s.text();
  }
  return out;
}

Verdict oracle_answer_judge(const SynthProblem& problem, const ReasoningPath& path) {
  if (!path.complete()) return {false, std::string("path has no final answer")};
  auto state = parse_state(path.steps().back().step.text());
  if (!state) return {false, std::string("final step does not parse")};
  try {
    if (state->evaluate() == problem.target) return {true, std::nullopt};
  } catch (const ParseError&) {
  }
  return {false, std::string("final value differs from target")};
}

Verdict oracle_containment_judge(std::string_view original_step, const ReasoningPath& corrected) {
  return VerbatimContainmentJudge{}.contains(original_step, corrected);
}

Continuation OracleGenerator::generate(const Problem& problem, const ReasoningPath& prefix,
                                       std::span<const FeedbackTurn>, unsigned sample_index) {
  return oracle_generate(parse_problem(problem), prefix, sample_index);
}

double OracleScorer::raw_score(const Problem& problem, const ReasoningPath& path) {
  try {
    return oracle_score(parse_problem(problem), path);
  } catch (const UnreachableState& e) {
    throw ScorerFailure(e.what());
  }
}

Verdict OracleAnswerJudge::judge(const Problem& problem, const ReasoningPath& path) {
  try {
    return oracle_answer_judge(parse_problem(problem), path);
  } catch (const UnreachableState& e) {
    throw JudgeFailure(e.what());
  }
}

std::vector<Instance> make_suite(std::size_t count, unsigned k_min, unsigned k_max,
                                 std::uint64_t seed) {
  if (k_min < 1 || k_max < k_min || k_max > 12) throw ConfigError("need 1 <= k_min <= k_max <= 12");
  std::mt19937_64 rng(seed);
  std::vector<Instance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto k = static_cast<unsigned>(k_min + draw(rng, k_max - k_min + 1));
    const auto problem_seed = rng();
    ErrorSpec spec;
    spec.position = 1 + draw(rng, k);
    spec.kind = static_cast<ErrorKind>(draw(rng, 3));
    auto [problem, canonical] = gen_problem(problem_seed, k);
    auto attempt = inject_errors(problem, canonical, spec);
    out.push_back({std::move(problem), std::move(canonical), spec, std::move(attempt)});
  }
  return out;
}

}  // namespace smrc::synth
