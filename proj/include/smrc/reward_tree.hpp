#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "smrc/domain.hpp"
#include "smrc/rational.hpp"

namespace smrc {

using RolloutId = std::size_t;

struct RolloutNode {
  RolloutId id = 0;
  std::optional<RolloutId> parent;
  std::string step_text;  // empty for the root
  bool terminal = false;
  std::vector<RolloutId> children;
  std::size_t depth = 0;
  std::optional<int> label;       // +1 / -1, leaves only
  std::optional<Rational> value;  // write-once
};

/// Arena-backed rollout tree. Node ids are creation order; the root is id 0
/// with value fixed at 0.
class RolloutTree {
 public:
  explicit RolloutTree(std::string problem_id);

  RolloutId root() const noexcept { return 0; }
  RolloutId add_node(RolloutId parent, std::string step_text, bool terminal = false);

  const RolloutNode& node(RolloutId id) const;
  std::span<const RolloutNode> nodes() const noexcept { return nodes_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  const std::string& problem_id() const noexcept { return problem_id_; }

  bool is_leaf(RolloutId id) const;
  /// Non-root nodes without children, in id order.
  std::vector<RolloutId> leaves() const;

  void set_label(RolloutId id, int label);
  /// Throws InvariantViolation if the node already has a value.
  void assign_value(RolloutId id, const Rational& value);

  /// Ids from the first step below the root down to `id` inclusive.
  std::vector<RolloutId> path_from_root(RolloutId id) const;
  std::vector<std::string> prefix_texts(RolloutId id) const;
  /// The root-to-node steps as a generated path; the last step carries the
  /// node's terminal flag.
  ReasoningPath prefix_path(RolloutId id) const;

 private:
  std::string problem_id_;
  std::vector<RolloutNode> nodes_;
};

struct RolloutOptions {
  unsigned branching = 2;
  unsigned max_depth = 3;
  std::size_t node_cap = 10'000;
};

/// Level-by-level expansion. Every non-terminal node above `max_depth` asks the
/// generator for `branching` samples; the first step of each sample becomes a
/// child, duplicates among siblings are dropped. GeneratorFailure propagates
/// (the partial tree is discarded); NodeBudgetExceeded when the cap is hit.
RolloutTree build_rollout_tree(const Problem& problem, Generator& generator,
                               const RolloutOptions& options);

/// Labels every leaf +1 (judge valid) or -1.
void label_leaves(RolloutTree& tree, AnswerJudge& judge, const Problem& problem);

enum class LeafPhase { correct, incorrect };

/// Deepest unprocessed leaf with the phase's label; ties go to the smallest id.
std::optional<RolloutId> select_next_leaf(const RolloutTree& tree,
                                          const std::set<RolloutId>& processed, LeafPhase phase);

struct PropagationSegment {
  RolloutId leaf;
  RolloutId anchor;
  Rational share;
  std::vector<RolloutId> assigned;  // top-down
};

/// Differential reward allocation. Leaves are taken correct-first, deepest
/// first; each walks up to the nearest valued ancestor (the anchor) and the
/// gap label - value(anchor) is split evenly over the unvalued nodes below it.
/// Values accumulate top-down from the anchor. Returns the segments in order.
std::vector<PropagationSegment> propagate_rewards(RolloutTree& tree);

struct TrainingRecord {
  std::string problem_id;
  std::string question;
  ReasoningPath prefix;
  Rational exact_value;
  double value = 0.0;
};

/// One record per non-root node in id order. Throws NotPropagated if any node
/// lacks a value.
std::vector<TrainingRecord> export_training_records(const RolloutTree& tree,
                                                    const Problem& problem);

nlohmann::json training_record_to_json(const TrainingRecord& record);
void write_training_records(std::ostream& out, std::span<const TrainingRecord> records);

nlohmann::json tree_to_json(const RolloutTree& tree);
RolloutTree tree_from_json(const nlohmann::json& doc);

}  // namespace smrc
