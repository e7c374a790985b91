#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "smrc/domain.hpp"

namespace smrc {

using SearchId = std::size_t;

enum class NodeOrigin { student_subset, generated };

/// A node of the correction tree. `value` is the scorer output when the node
/// was created; `visits` and `cumulative` are the running UCT statistics.
struct SearchNode {
  SearchId id = 0;
  std::optional<SearchId> parent;
  ReasoningPath path;
  double value = 0.0;
  std::size_t visits = 0;
  double cumulative = 0.0;
  std::vector<SearchId> children;
  bool terminal = false;
  NodeOrigin origin = NodeOrigin::student_subset;
  std::size_t depth = 0;
};

class SearchTree {
 public:
  SearchTree();

  SearchId root() const noexcept { return 0; }
  SearchId add_child(SearchId parent, ReasoningPath path, double value, NodeOrigin origin);

  const SearchNode& node(SearchId id) const;
  SearchNode& node(SearchId id);
  std::span<const SearchNode> nodes() const noexcept { return nodes_; }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  std::vector<SearchNode> nodes_;
};

extern const char* const kFeedbackPrompt;

struct SearchConfig {
  double exploration = 0.4;        // c
  unsigned max_iterations = 30;    // T
  double threshold = 0.95;         // theta
  unsigned feedback_max = 4;
  unsigned enum_cap = 12;          // full subset enumeration up to this many steps
  unsigned beam_width = 64;        // per-layer width above enum_cap
  bool seed_statistics = true;     // initialization nodes start with W = v, N = 1
  std::string feedback_text = kFeedbackPrompt;

  /// Throws ConfigError when an invariant is broken.
  void validate() const;
};

enum class Termination { threshold, budget };
std::string_view to_string(Termination t);

struct SearchStats {
  std::size_t initialized_nodes = 0;
  std::size_t expansions = 0;
  std::size_t failed_expansions = 0;
  std::size_t feedback_rounds = 0;
};

struct CorrectionResult {
  ReasoningPath best_path;
  double best_value = 0.0;
  unsigned iterations_used = 0;
  Termination terminated_by = Termination::budget;
  std::vector<std::size_t> retained_student_steps;
  SearchStats stats;
};

enum class TraceAction { expanded, pruned, feedback, terminated };
std::string_view to_string(TraceAction a);

struct TraceEvent {
  unsigned iteration = 0;  // 0 during initialization
  SearchId selected_id = 0;
  TraceAction action = TraceAction::expanded;
  double value = 0.0;
  double cumulative = 0.0;
  std::size_t visits = 0;
};

using TraceSink = std::function<void(const TraceEvent&)>;
nlohmann::json trace_event_to_json(const TraceEvent& e);

/// Layer-wise tree over order-preserving subsets of the student's steps.
/// Every node is scored on creation and a child scoring strictly below its
/// parent is dropped together with its would-be subtree. Above `enum_cap`
/// steps each layer keeps only the `beam_width` best nodes.
SearchTree initialize_tree(const Problem& problem, const StudentAttempt& attempt, Scorer& scorer,
                           const SearchConfig& config, const TraceSink& trace = {});

/// W/N + c * sqrt(ln(parent_visits) / N); +inf for an unvisited node.
double uct(const SearchNode& node, std::size_t parent_visits, double c);

/// Descends by maximal UCT among non-terminal children (ties: smallest id),
/// stopping at a node without such children or at an unvisited child.
SearchId select_node(const SearchTree& tree, double c);

struct ExpansionOutcome {
  std::optional<SearchId> child;
  unsigned attempts = 0;
};

/// Asks for a continuation of `node`'s path and keeps it only if it scores
/// strictly above the node; otherwise sends the feedback turn and retries, up
/// to `feedback_max` extra rounds. A success adds one generated child.
ExpansionOutcome expand(SearchTree& tree, SearchId node, const Problem& problem,
                        Generator& generator, Scorer& scorer, const SearchConfig& config,
                        unsigned iteration = 0, const TraceSink& trace = {});

/// W += reward and N += 1 on `node` and every ancestor.
void backpropagate(SearchTree& tree, SearchId node, double reward);

CorrectionResult run_mcts(const Problem& problem, const StudentAttempt& attempt,
                          Generator& generator, Scorer& scorer, const SearchConfig& config,
                          const TraceSink& trace = {});

/// Level-order baseline: the node holding the most student steps is expanded
/// first, then the remaining nodes by depth; no value preference.
CorrectionResult run_bfs(const Problem& problem, const StudentAttempt& attempt,
                         Generator& generator, Scorer& scorer, const SearchConfig& config,
                         const TraceSink& trace = {});

/// Depth-first baseline: always expands the deepest untried non-terminal node
/// (ties: higher value, then smaller id).
CorrectionResult run_dfs(const Problem& problem, const StudentAttempt& attempt,
                         Generator& generator, Scorer& scorer, const SearchConfig& config,
                         const TraceSink& trace = {});

enum class SearchAlgorithm { mcts, bfs, dfs };

CorrectionResult run_search(SearchAlgorithm algorithm, const Problem& problem,
                            const StudentAttempt& attempt, Generator& generator, Scorer& scorer,
                            const SearchConfig& config, const TraceSink& trace = {});

}  // namespace smrc
