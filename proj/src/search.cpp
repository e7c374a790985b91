#include "smrc/search.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>

#include "smrc/errors.hpp"

namespace smrc {

const char* const kFeedbackPrompt =
    "It seems there might be some issues with your answer. Please review it and provide a new "
    "response.";

SearchTree::SearchTree() { nodes_.push_back(SearchNode{}); }

SearchId SearchTree::add_child(SearchId parent, ReasoningPath path, double value,
                               NodeOrigin origin) {
  if (parent >= nodes_.size()) throw InvariantViolation("unknown parent node");
  if (!path.preserves_student_order())
    throw InvariantViolation("search path breaks student step order");
  SearchNode n;
  n.id = nodes_.size();
  n.parent = parent;
  n.terminal = path.complete();
  n.path = std::move(path);
  n.value = value;
  n.origin = origin;
  n.depth = nodes_[parent].depth + 1;
  nodes_[parent].children.push_back(n.id);
  nodes_.push_back(std::move(n));
  return nodes_.back().id;
}

const SearchNode& SearchTree::node(SearchId id) const {
  if (id >= nodes_.size()) throw InvariantViolation("unknown search node");
  return nodes_[id];
}

SearchNode& SearchTree::node(SearchId id) {
  if (id >= nodes_.size()) throw InvariantViolation("unknown search node");
  return nodes_[id];
}

void SearchConfig::validate() const {
  if (!(exploration >= 0.0)) throw ConfigError("exploration constant must be >= 0");
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("threshold must be in (0, 1]");
  if (max_iterations < 1) throw ConfigError("max iterations must be >= 1");
  if (beam_width < 1) throw ConfigError("beam width must be >= 1");
}

std::string_view to_string(Termination t) {
  return t == Termination::threshold ? "threshold" : "budget";
}

std::string_view to_string(TraceAction a) {
  switch (a) {
    case TraceAction::expanded: return "expanded";
    case TraceAction::pruned: return "pruned";
    case TraceAction::feedback: return "feedback";
    case TraceAction::terminated: return "terminated";
  }
  return "unknown";
}

nlohmann::json trace_event_to_json(const TraceEvent& e) {
  return {{"iteration", e.iteration}, {"selected_id", e.selected_id},
          {"action", std::string(to_string(e.action))},
          {"v", e.value}, {"W", e.cumulative}, {"N", e.visits}};
}

namespace {

void emit(const TraceSink& trace, const TraceEvent& e) {
  if (trace) trace(e);
}

struct Candidate {
  SearchId parent;
  ReasoningPath path;
  double value;
};

}  // namespace

SearchTree initialize_tree(const Problem& problem, const StudentAttempt& attempt, Scorer& scorer,
                           const SearchConfig& config, const TraceSink& trace) {
  if (attempt.steps.empty()) throw InitializationFailure("student attempt has no steps");
  SearchTree tree;
  if (config.seed_statistics) tree.node(tree.root()).visits = 1;

  const bool beam = attempt.steps.size() > config.enum_cap;
  std::vector<SearchId> layer{tree.root()};
  while (!layer.empty()) {
    std::vector<Candidate> candidates;
    for (auto id : layer) {
      const auto& parent = tree.node(id);
      if (parent.terminal) continue;
      const auto last = parent.path.last_student_index();
      const double parent_value = parent.value;
      const ReasoningPath parent_path = parent.path;
      for (const auto& step : attempt.steps) {
        if (step.index() <= last) continue;
        auto path = parent_path.extended(step, StepOrigin::student);
        const double v = scorer.score(problem, path);
        if (v < parent_value) {
          emit(trace, {0, id, TraceAction::pruned, v, 0.0, 0});
          continue;
        }
        candidates.push_back({id, std::move(path), v});
      }
    }
    if (beam && candidates.size() > config.beam_width) {
      std::vector<std::size_t> order(candidates.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return candidates[a].value > candidates[b].value;
      });
      order.resize(config.beam_width);
      std::sort(order.begin(), order.end());
      std::vector<Candidate> kept;
      for (auto i : order) kept.push_back(std::move(candidates[i]));
      candidates = std::move(kept);
    }
    std::vector<SearchId> next;
    for (auto& c : candidates) {
      auto id = tree.add_child(c.parent, std::move(c.path), c.value, NodeOrigin::student_subset);
      if (config.seed_statistics) {
        tree.node(id).cumulative = c.value;
        tree.node(id).visits = 1;
      }
      next.push_back(id);
    }
    layer = std::move(next);
  }
  return tree;
}

double uct(const SearchNode& node, std::size_t parent_visits, double c) {
  if (node.visits == 0) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(node.visits);
  const double parent = static_cast<double>(std::max<std::size_t>(parent_visits, 1));
  return node.cumulative / n + c * std::sqrt(std::log(parent) / n);
}

SearchId select_node(const SearchTree& tree, double c) {
  SearchId cur = tree.root();
  for (;;) {
    const auto& node = tree.node(cur);
    std::optional<SearchId> best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (auto child : node.children) {
      const auto& ch = tree.node(child);
      if (ch.terminal) continue;
      const double s = uct(ch, node.visits, c);
      if (!best || s > best_score) {
        best = child;
        best_score = s;
      }
    }
    if (!best) return cur;
    if (tree.node(*best).visits == 0) return *best;
    cur = *best;
  }
}

ExpansionOutcome expand(SearchTree& tree, SearchId node_id, const Problem& problem,
                        Generator& generator, Scorer& scorer, const SearchConfig& config,
                        unsigned iteration, const TraceSink& trace) {
  if (tree.node(node_id).terminal) throw InvariantViolation("cannot expand a terminal node");
  const ReasoningPath base = tree.node(node_id).path;
  const double base_value = tree.node(node_id).value;

  ExpansionOutcome out;
  std::vector<FeedbackTurn> history;
  for (unsigned round = 0; round <= config.feedback_max; ++round) {
    ++out.attempts;
    std::string reply;
    try {
      auto cont = generator.generate(problem, base, history, 0);
      reply = cont.raw_text;
      if (reply.empty())
        for (const auto& s : cont.steps) reply += (reply.empty() ? "" : "\n") + s.text();
      if (cont.steps.empty()) throw GeneratorFailure("empty continuation");
      auto path = base.extended(cont.steps, StepOrigin::generated);
      const double v = scorer.score(problem, path);
      if (v > base_value) {
        auto child = tree.add_child(node_id, std::move(path), v, NodeOrigin::generated);
        out.child = child;
        emit(trace, {iteration, node_id, TraceAction::expanded, v, 0.0, 0});
        return out;
      }
      emit(trace, {iteration, node_id, TraceAction::pruned, v, 0.0, 0});
    } catch (const GeneratorFailure&) {
    } catch (const ScorerFailure&) {
    } catch (const DomainError&) {
      // the continuation could not be appended to the path
    }
    if (round == config.feedback_max) break;
    emit(trace, {iteration, node_id, TraceAction::feedback, base_value, 0.0, 0});
    history.push_back({std::move(reply), config.feedback_text});
  }
  return out;
}

void backpropagate(SearchTree& tree, SearchId node, double reward) {
  for (std::optional<SearchId> cur = node; cur; cur = tree.node(*cur).parent) {
    auto& n = tree.node(*cur);
    n.cumulative += reward;
    n.visits += 1;
  }
}

namespace {

SearchTree init_or_fail(const Problem& problem, const StudentAttempt& attempt, Scorer& scorer,
                        const SearchConfig& config, const TraceSink& trace) {
  try {
    return initialize_tree(problem, attempt, scorer, config, trace);
  } catch (const InitializationFailure&) {
    throw;
  } catch (const Error& e) {
    throw InitializationFailure(std::string("tree initialization failed: ") + e.what());
  }
}

std::size_t count_init_nodes(const SearchTree& tree) { return tree.size() - 1; }

CorrectionResult finish(const SearchTree& tree, std::optional<SearchId> chosen,
                        Termination how, unsigned iterations, SearchStats stats) {
  if (!chosen) {
    // Highest-valued complete path, else highest-valued node overall.
    for (const auto& n : tree.nodes()) {
      if (!n.terminal) continue;
      if (!chosen || n.value > tree.node(*chosen).value) chosen = n.id;
    }
    if (!chosen) {
      for (const auto& n : tree.nodes())
        if (!chosen || n.value > tree.node(*chosen).value) chosen = n.id;
    }
  }
  const auto& best = tree.node(*chosen);
  if (!best.path.preserves_student_order())
    throw InvariantViolation("emitted path breaks student step order");
  CorrectionResult r;
  r.best_path = best.path;
  r.best_value = best.value;
  r.iterations_used = iterations;
  r.terminated_by = how;
  r.retained_student_steps = best.path.student_indices();
  r.stats = stats;
  return r;
}

// Shared step of every search: expand, backpropagate, and report whether the
// new child ends the search.
std::optional<SearchId> step(SearchTree& tree, SearchId selected, const Problem& problem,
                             Generator& generator, Scorer& scorer, const SearchConfig& config,
                             unsigned iteration, const TraceSink& trace, SearchStats& stats,
                             std::optional<SearchId>& added) {
  auto outcome = expand(tree, selected, problem, generator, scorer, config, iteration, trace);
  stats.feedback_rounds += outcome.attempts - 1;
  added = outcome.child;
  if (!outcome.child) {
    ++stats.failed_expansions;
    return std::nullopt;
  }
  ++stats.expansions;
  const auto child = *outcome.child;
  const double q = tree.node(child).value;
  backpropagate(tree, child, q);
  if (q >= config.threshold && tree.node(child).terminal) {
    const auto& n = tree.node(child);
    emit(trace, {iteration, child, TraceAction::terminated, n.value, n.cumulative, n.visits});
    return child;
  }
  return std::nullopt;
}

}  // namespace

CorrectionResult run_mcts(const Problem& problem, const StudentAttempt& attempt,
                          Generator& generator, Scorer& scorer, const SearchConfig& config,
                          const TraceSink& trace) {
  config.validate();
  auto tree = init_or_fail(problem, attempt, scorer, config, trace);
  SearchStats stats;
  stats.initialized_nodes = count_init_nodes(tree);
  unsigned used = 0;
  for (unsigned t = 1; t <= config.max_iterations; ++t) {
    used = t;
    const auto selected = select_node(tree, config.exploration);
    std::optional<SearchId> added;
    if (auto done = step(tree, selected, problem, generator, scorer, config, t, trace, stats, added))
      return finish(tree, done, Termination::threshold, used, stats);
  }
  return finish(tree, std::nullopt, Termination::budget, used, stats);
}

CorrectionResult run_bfs(const Problem& problem, const StudentAttempt& attempt,
                         Generator& generator, Scorer& scorer, const SearchConfig& config,
                         const TraceSink& trace) {
  config.validate();
  auto tree = init_or_fail(problem, attempt, scorer, config, trace);
  SearchStats stats;
  stats.initialized_nodes = count_init_nodes(tree);

  std::optional<SearchId> fullest;
  for (const auto& n : tree.nodes()) {
    if (n.terminal) continue;
    if (!fullest || n.path.student_indices().size() >
                        tree.node(*fullest).path.student_indices().size())
      fullest = n.id;
  }
  std::vector<SearchId> order;
  for (const auto& n : tree.nodes())
    if (n.id != *fullest) order.push_back(n.id);
  std::stable_sort(order.begin(), order.end(), [&](SearchId a, SearchId b) {
    return tree.node(a).depth < tree.node(b).depth;
  });
  std::deque<SearchId> queue{*fullest};
  queue.insert(queue.end(), order.begin(), order.end());

  unsigned used = 0;
  while (used < config.max_iterations && !queue.empty()) {
    const auto selected = queue.front();
    queue.pop_front();
    if (tree.node(selected).terminal) continue;
    ++used;
    std::optional<SearchId> added;
    if (auto done = step(tree, selected, problem, generator, scorer, config, used, trace, stats,
                         added))
      return finish(tree, done, Termination::threshold, used, stats);
    if (added && !tree.node(*added).terminal) queue.push_back(*added);
  }
  return finish(tree, std::nullopt, Termination::budget, used, stats);
}

CorrectionResult run_dfs(const Problem& problem, const StudentAttempt& attempt,
                         Generator& generator, Scorer& scorer, const SearchConfig& config,
                         const TraceSink& trace) {
  config.validate();
  auto tree = init_or_fail(problem, attempt, scorer, config, trace);
  SearchStats stats;
  stats.initialized_nodes = count_init_nodes(tree);

  std::set<SearchId> tried;
  unsigned used = 0;
  while (used < config.max_iterations) {
    std::optional<SearchId> pick;
    for (const auto& n : tree.nodes()) {
      if (n.terminal || tried.count(n.id)) continue;
      if (!pick) {
        pick = n.id;
        continue;
      }
      const auto& p = tree.node(*pick);
      if (n.depth > p.depth || (n.depth == p.depth && n.value > p.value)) pick = n.id;
    }
    if (!pick) break;
    tried.insert(*pick);
    ++used;
    std::optional<SearchId> added;
    if (auto done = step(tree, *pick, problem, generator, scorer, config, used, trace, stats, added))
      return finish(tree, done, Termination::threshold, used, stats);
  }
  return finish(tree, std::nullopt, Termination::budget, used, stats);
}

CorrectionResult run_search(SearchAlgorithm algorithm, const Problem& problem,
                            const StudentAttempt& attempt, Generator& generator, Scorer& scorer,
                            const SearchConfig& config, const TraceSink& trace) {
  switch (algorithm) {
    case SearchAlgorithm::mcts: return run_mcts(problem, attempt, generator, scorer, config, trace);
    case SearchAlgorithm::bfs: return run_bfs(problem, attempt, generator, scorer, config, trace);
    case SearchAlgorithm::dfs: return run_dfs(problem, attempt, generator, scorer, config, trace);
  }
  throw ConfigError("unknown search algorithm");
}

}  // namespace smrc
