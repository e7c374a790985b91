#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "smrc/decompose.hpp"
#include "smrc/errors.hpp"
#include "smrc/evaluation.hpp"
#include "smrc/scripted.hpp"
#include "smrc/search.hpp"
#include "smrc/synthetic.hpp"

using namespace smrc;

namespace {

const std::string kData = SMRC_TEST_DATA;

class ConstScorer : public Scorer {
 public:
  explicit ConstScorer(double v) : v_(v) {}
  unsigned calls = 0;

 protected:
  double raw_score(const Problem&, const ReasoningPath&) override {
    ++calls;
    return v_;
  }

 private:
  double v_;
};

class ThrowingScorer : public Scorer {
 protected:
  double raw_score(const Problem&, const ReasoningPath&) override {
    throw ScorerFailure("down");
  }
};

// Returns one fixed step and records the feedback history it was given.
class RecordingGenerator : public Generator {
 public:
  std::vector<std::vector<FeedbackTurn>> histories;
  Continuation generate(const Problem&, const ReasoningPath&, std::span<const FeedbackTurn> fb,
                        unsigned) override {
    histories.emplace_back(fb.begin(), fb.end());
    Continuation c;
    c.steps.emplace_back(1, "try " + std::to_string(histories.size()));
    c.raw_text = c.steps.back().text();
    return c;
  }
};

StudentAttempt attempt_of(std::size_t n) {
  std::vector<ReasoningStep> steps;
  for (std::size_t i = 1; i <= n; ++i) steps.emplace_back(i, "s" + std::to_string(i));
  return StudentAttempt("raw", steps, {});
}

const Problem kProblem("p", "question", "answer");

}  // namespace

TEST(InitializeTree, ReferenceScoresPruneTwoEdges) {
  auto script = ScriptedBackend::load(kData + "/init_script.json");
  auto attempt = StudentAttempt(script.student_answer(),
                                decompose_attempt(script.student_answer(),
                                                  DecomposePolicy::numbered_markers),
                                {});
  std::vector<TraceEvent> events;
  SearchConfig config;
  auto tree = initialize_tree(script.problem(), attempt, script, config,
                              [&](const TraceEvent& e) { events.push_back(e); });

  struct Expected {
    std::vector<std::string> path;
    double v;
    SearchId parent;
  };
  const std::vector<Expected> expected{{{"a1"}, 0.2, 0},
                                       {{"a2"}, 0.1, 0},
                                       {{"a1", "a2"}, 0.4, 1},
                                       {{"a2", "a3"}, 0.3, 2},
                                       {{"a1", "a2", "a3"}, 0.6, 3}};
  ASSERT_EQ(tree.size(), expected.size() + 1);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& n = tree.node(i + 1);
    EXPECT_EQ(n.path.texts(), expected[i].path) << "node " << i + 1;
    EXPECT_DOUBLE_EQ(n.value, expected[i].v);
    EXPECT_EQ(n.parent, expected[i].parent);
    EXPECT_EQ(n.origin, NodeOrigin::student_subset);
    EXPECT_EQ(n.visits, 1u);
    EXPECT_DOUBLE_EQ(n.cumulative, n.value);
  }
  std::size_t pruned = 0;
  for (const auto& e : events) pruned += e.action == TraceAction::pruned;
  EXPECT_EQ(pruned, 2u);  // Q->a3 and a1->a3
  // Every candidate is scored exactly once.
  for (const auto& [key, calls] : script.score_calls()) EXPECT_EQ(calls, 1u) << key;
  EXPECT_EQ(script.score_calls().size(), 7u);
}

TEST(InitializeTree, ConstantScorerEnumeratesAllSubsets) {
  for (std::size_t n = 1; n <= 3; ++n) {
    ConstScorer scorer(0.0);
    auto tree = initialize_tree(kProblem, attempt_of(n), scorer, SearchConfig{});
    ASSERT_EQ(tree.size(), std::size_t{1} << n);
    std::set<std::vector<std::size_t>> seen;
    for (const auto& node : tree.nodes()) seen.insert(node.path.student_indices());
    // Independent enumeration of index subsets in increasing order.
    std::set<std::vector<std::size_t>> all;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      std::vector<std::size_t> s;
      for (std::size_t i = 0; i < n; ++i)
        if (mask & (std::size_t{1} << i)) s.push_back(i + 1);
      all.insert(s);
    }
    EXPECT_EQ(seen, all);
  }
}

TEST(InitializeTree, BeamBoundsLayersAboveEnumCap) {
  ConstScorer scorer(0.0);
  SearchConfig config;
  config.enum_cap = 4;
  config.beam_width = 3;
  auto tree = initialize_tree(kProblem, attempt_of(6), scorer, config);
  std::map<std::size_t, std::size_t> per_depth;
  for (const auto& n : tree.nodes()) ++per_depth[n.depth];
  for (const auto& [depth, count] : per_depth) {
    if (depth > 0) {
      EXPECT_LE(count, 3u) << "depth " << depth;
    }
  }
  for (const auto& n : tree.nodes()) EXPECT_TRUE(n.path.preserves_student_order());
}

TEST(InitializeTree, ScorerFailureAborts) {
  ThrowingScorer scorer;
  EXPECT_THROW(initialize_tree(kProblem, attempt_of(2), scorer, SearchConfig{}), ScorerFailure);
  RecordingGenerator gen;
  EXPECT_THROW(run_mcts(kProblem, attempt_of(2), gen, scorer, SearchConfig{}),
               InitializationFailure);
}

TEST(Uct, FixtureMatchesHandComputation) {
  SearchNode n;
  n.cumulative = 0.6;
  n.visits = 2;
  // 0.3 + 0.4 * sqrt(ln(10) / 2), evaluated in long double.
  const long double reference = 0.3L + 0.4L * std::sqrt(std::log(10.0L) / 2.0L);
  EXPECT_NEAR(uct(n, 10, 0.4), 0.7292, 1e-4);
  EXPECT_NEAR(uct(n, 10, 0.4), static_cast<double>(reference), 1e-12);
}

TEST(Uct, ZeroExplorationIsMeanReward) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> w(-50.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    SearchNode n;
    n.cumulative = w(rng);
    n.visits = 1 + rng() % 100;
    const auto parent = n.visits + rng() % 1000;
    EXPECT_EQ(uct(n, parent, 0.0), n.cumulative / static_cast<double>(n.visits));
  }
}

TEST(Uct, UnvisitedIsInfinite) {
  SearchNode n;
  EXPECT_EQ(uct(n, 5, 0.4), std::numeric_limits<double>::infinity());
}

TEST(SelectNode, MatchesIndependentArgmaxDescent) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> w(-3.0, 3.0);
  for (int trial = 0; trial < 300; ++trial) {
    SearchTree tree;
    tree.node(0).visits = 1 + rng() % 20;
    const auto n = 1 + rng() % 12;
    for (std::size_t i = 0; i < n; ++i) {
      const auto parent = static_cast<SearchId>(rng() % tree.size());
      if (tree.node(parent).terminal) continue;
      ReasoningPath p = tree.node(parent).path;
      const bool terminal = rng() % 5 == 0;
      p.append(ReasoningStep(1, "g" + std::to_string(i), terminal), StepOrigin::generated);
      auto id = tree.add_child(parent, p, 0.0, NodeOrigin::generated);
      tree.node(id).visits = rng() % 4 == 0 ? 0 : 1 + rng() % 10;
      tree.node(id).cumulative = w(rng);
    }
    // Independent descent written directly from the UCT formula.
    SearchId cur = 0;
    for (;;) {
      const auto& node = tree.node(cur);
      SearchId best = 0;
      long double best_score = -1.0L / 0.0L;
      bool any = false;
      for (auto c : node.children) {
        const auto& ch = tree.node(c);
        if (ch.terminal) continue;
        long double s = ch.visits == 0
                            ? 1.0L / 0.0L
                            : ch.cumulative / static_cast<double>(ch.visits) +
                                  0.4 * std::sqrt(std::log(static_cast<double>(
                                                      std::max<std::size_t>(node.visits, 1))) /
                                                  static_cast<double>(ch.visits));
        if (!any || s > best_score) {
          best = c;
          best_score = s;
          any = true;
        }
      }
      if (!any) break;
      cur = best;
      if (tree.node(best).visits == 0) break;
    }
    EXPECT_EQ(select_node(tree, 0.4), cur) << "trial " << trial;
  }
}

TEST(Expand, OracleChildImprovesOnNode) {
  auto [problem, canonical] = synth::gen_problem(42, 4);
  auto p = problem.to_problem("g");
  SearchTree tree;
  ReasoningPath first;
  first.append(canonical.steps()[0].step, StepOrigin::student);
  synth::OracleScorer scorer;
  synth::OracleGenerator gen;
  auto id = tree.add_child(0, first, scorer.score(p, first), NodeOrigin::student_subset);
  auto out = expand(tree, id, p, gen, scorer, SearchConfig{});
  ASSERT_TRUE(out.child);
  EXPECT_EQ(out.attempts, 1u);
  EXPECT_GT(tree.node(*out.child).value, tree.node(id).value);
  EXPECT_TRUE(tree.node(*out.child).terminal);
  EXPECT_EQ(tree.node(*out.child).path.size(), 4u);
}

TEST(Expand, ConstantMinusOneExhaustsFeedback) {
  ConstScorer scorer(-1.0);
  RecordingGenerator gen;
  SearchTree tree;
  SearchConfig config;
  std::vector<TraceEvent> events;
  auto out = expand(tree, 0, kProblem, gen, scorer, config, 3,
                    [&](const TraceEvent& e) { events.push_back(e); });
  EXPECT_FALSE(out.child);
  EXPECT_EQ(out.attempts, config.feedback_max + 1);
  ASSERT_EQ(gen.histories.size(), config.feedback_max + 1);
  for (std::size_t r = 0; r < gen.histories.size(); ++r) {
    ASSERT_EQ(gen.histories[r].size(), r);
    for (const auto& turn : gen.histories[r]) EXPECT_EQ(turn.feedback, kFeedbackPrompt);
  }
  EXPECT_EQ(gen.histories[1][0].rejected_reply, "try 1");
  std::size_t feedback = 0;
  for (const auto& e : events) feedback += e.action == TraceAction::feedback;
  EXPECT_EQ(feedback, config.feedback_max);
  EXPECT_EQ(tree.size(), 1u);
}

TEST(Expand, EqualValueIsRejected) {
  ConstScorer scorer(0.0);  // root value is 0 too
  RecordingGenerator gen;
  SearchTree tree;
  SearchConfig config;
  config.feedback_max = 0;
  EXPECT_FALSE(expand(tree, 0, kProblem, gen, scorer, config).child);
}

TEST(Backpropagate, AddsRewardAlongPath) {
  SearchTree tree;
  ReasoningPath a;
  a.append(ReasoningStep(1, "a"), StepOrigin::student);
  auto n1 = tree.add_child(0, a, 0.2, NodeOrigin::student_subset);
  auto n2 = tree.add_child(n1, a.extended(ReasoningStep(1, "b"), StepOrigin::generated), 0.5,
                           NodeOrigin::generated);
  backpropagate(tree, n2, 0.5);
  EXPECT_EQ(tree.node(n2).visits, 1u);
  EXPECT_DOUBLE_EQ(tree.node(n1).cumulative, 0.5);
  EXPECT_EQ(tree.node(0).visits, 1u);
  backpropagate(tree, n1, -1.0);
  EXPECT_DOUBLE_EQ(tree.node(n1).cumulative, -0.5);
  EXPECT_EQ(tree.node(n2).visits, 1u);
  EXPECT_EQ(tree.node(0).visits, 2u);
}

TEST(SearchConfig, ValidationRejectsBadValues) {
  SearchConfig c;
  EXPECT_NO_THROW(c.validate());
  c.exploration = -0.1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SearchConfig{};
  c.max_iterations = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SearchConfig{};
  c.threshold = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RunMcts, LastStepWrongTerminatesByThreshold) {
  auto [problem, canonical] = synth::gen_problem(7, 5);
  auto attempt = synth::inject_errors(problem, canonical, {5, synth::ErrorKind::off_by_one});
  synth::OracleGenerator gen;
  synth::OracleScorer scorer;
  auto p = problem.to_problem("x");
  auto result = run_mcts(p, attempt, gen, scorer, SearchConfig{});
  EXPECT_EQ(result.terminated_by, Termination::threshold);
  EXPECT_EQ(result.best_value, 1.0);
  VerbatimContainmentJudge judge;
  EXPECT_EQ(retained_fraction({attempt.correct_texts(), result.best_path}, judge), 1.0);
  EXPECT_TRUE(synth::oracle_answer_judge(problem, result.best_path).valid);
}

TEST(RunSearch, DeterministicAcrossRuns) {
  auto suite = synth::make_suite(20, 1, 6, 3);
  synth::OracleGenerator gen;
  synth::OracleScorer scorer;
  for (auto algo : {SearchAlgorithm::mcts, SearchAlgorithm::bfs, SearchAlgorithm::dfs}) {
    for (std::size_t i = 0; i < suite.size(); ++i) {
      const auto p = suite[i].problem.to_problem(std::to_string(i));
      std::vector<nlohmann::json> t1, t2;
      auto r1 = run_search(algo, p, suite[i].attempt, gen, scorer, SearchConfig{},
                           [&](const TraceEvent& e) { t1.push_back(trace_event_to_json(e)); });
      auto r2 = run_search(algo, p, suite[i].attempt, gen, scorer, SearchConfig{},
                           [&](const TraceEvent& e) { t2.push_back(trace_event_to_json(e)); });
      EXPECT_EQ(r1.best_path, r2.best_path);
      EXPECT_EQ(r1.best_value, r2.best_value);
      EXPECT_EQ(r1.iterations_used, r2.iterations_used);
      EXPECT_EQ(t1, t2);
    }
  }
}

TEST(RunSearch, EmittedPathsPreserveStudentOrder) {
  auto suite = synth::make_suite(60, 1, 6, 17);
  synth::OracleGenerator gen;
  synth::OracleScorer scorer;
  for (auto algo : {SearchAlgorithm::mcts, SearchAlgorithm::bfs, SearchAlgorithm::dfs}) {
    for (std::size_t i = 0; i < suite.size(); ++i) {
      const auto p = suite[i].problem.to_problem(std::to_string(i));
      auto r = run_search(algo, p, suite[i].attempt, gen, scorer, SearchConfig{});
      EXPECT_TRUE(r.best_path.preserves_student_order());
      EXPECT_EQ(r.retained_student_steps, r.best_path.student_indices());
      const auto idx = r.best_path.student_indices();
      EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
    }
  }
}

TEST(RunBfs, ExpandsFullestStudentNodeFirst) {
  auto script = ScriptedBackend::load(kData + "/init_script.json");
  auto attempt = StudentAttempt(script.student_answer(),
                                decompose_attempt(script.student_answer(),
                                                  DecomposePolicy::numbered_markers),
                                {});
  ConstScorer never(-1.0);
  RecordingGenerator gen;
  SearchConfig config;
  config.max_iterations = 1;
  config.feedback_max = 0;
  std::vector<TraceEvent> events;
  // Scripted values for initialization, then a scorer that refuses every expansion.
  auto tree = initialize_tree(script.problem(), attempt, script, config);
  ASSERT_EQ(tree.size(), 6u);
  struct Mixed : Scorer {
    ScriptedBackend* s;
    double raw_score(const Problem& p, const ReasoningPath& path) override {
      return path.steps().back().origin == StepOrigin::generated ? -1.0 : s->score(p, path);
    }
  } mixed;
  mixed.s = &script;
  auto r = run_bfs(script.problem(), attempt, gen, mixed, config,
                   [&](const TraceEvent& e) { events.push_back(e); });
  ASSERT_FALSE(events.empty());
  const auto& first_expansion =
      *std::find_if(events.begin(), events.end(), [](const TraceEvent& e) { return e.iteration > 0; });
  EXPECT_EQ(first_expansion.selected_id, 5u);  // a1 a2 a3
  EXPECT_EQ(r.terminated_by, Termination::budget);
  EXPECT_EQ(r.best_path.texts(), (std::vector<std::string>{"a1", "a2", "a3"}));
}
