#include "smrc/reward_tree.hpp"

#include <algorithm>
#include <ostream>

#include "smrc/decompose.hpp"
#include "smrc/errors.hpp"

namespace smrc {

RolloutTree::RolloutTree(std::string problem_id) : problem_id_(std::move(problem_id)) {
  RolloutNode root;
  root.value = Rational(0);
  nodes_.push_back(std::move(root));
}

RolloutId RolloutTree::add_node(RolloutId parent, std::string step_text, bool terminal) {
  if (parent >= nodes_.size()) throw InvariantViolation("unknown parent node");
  if (nodes_[parent].label) throw InvariantViolation("labeled leaves cannot gain children");
  RolloutNode n;
  n.id = nodes_.size();
  n.parent = parent;
  n.step_text = normalize_step(step_text);
  n.terminal = terminal;
  n.depth = nodes_[parent].depth + 1;
  nodes_[parent].children.push_back(n.id);
  nodes_.push_back(std::move(n));
  return nodes_.back().id;
}

const RolloutNode& RolloutTree::node(RolloutId id) const {
  if (id >= nodes_.size()) throw InvariantViolation("unknown node id");
  return nodes_[id];
}

bool RolloutTree::is_leaf(RolloutId id) const { return id != 0 && node(id).children.empty(); }

std::vector<RolloutId> RolloutTree::leaves() const {
  std::vector<RolloutId> out;
  for (const auto& n : nodes_)
    if (is_leaf(n.id)) out.push_back(n.id);
  return out;
}

void RolloutTree::set_label(RolloutId id, int label) {
  if (!is_leaf(id)) throw InvariantViolation("only leaves carry labels");
  if (label != 1 && label != -1) throw InvariantViolation("labels are +1 or -1");
  nodes_[id].label = label;
}

void RolloutTree::assign_value(RolloutId id, const Rational& value) {
  auto& n = nodes_.at(id);
  if (n.value) throw InvariantViolation("node value assigned twice");
  n.value = value;
}

std::vector<RolloutId> RolloutTree::path_from_root(RolloutId id) const {
  std::vector<RolloutId> out;
  for (auto cur = id; cur != 0; cur = *node(cur).parent) out.push_back(cur);
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<std::string> RolloutTree::prefix_texts(RolloutId id) const {
  std::vector<std::string> out;
  for (auto n : path_from_root(id)) out.push_back(nodes_[n].step_text);
  return out;
}

ReasoningPath RolloutTree::prefix_path(RolloutId id) const {
  ReasoningPath path;
  auto ids = path_from_root(id);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& n = nodes_[ids[i]];
    bool last = i + 1 == ids.size();
    path.append(ReasoningStep(i + 1, n.step_text, last && n.terminal), StepOrigin::generated);
  }
  return path;
}

RolloutTree build_rollout_tree(const Problem& problem, Generator& generator,
                               const RolloutOptions& options) {
  if (options.branching < 1 || options.max_depth < 1)
    throw ConfigError("branching and max_depth must be >= 1");
  RolloutTree tree(problem.id);
  std::vector<RolloutId> frontier{tree.root()};
  for (unsigned depth = 0; depth < options.max_depth && !frontier.empty(); ++depth) {
    std::vector<RolloutId> next;
    for (auto id : frontier) {
      if (id != tree.root() && tree.node(id).terminal) continue;
      const auto prefix = tree.prefix_path(id);
      std::vector<std::string> seen;
      for (unsigned sample = 0; sample < options.branching; ++sample) {
        auto cont = generator.generate(problem, prefix, {}, sample);
        if (cont.steps.empty()) throw GeneratorFailure("generator returned no steps");
        const auto& step = cont.steps.front();
        if (std::find(seen.begin(), seen.end(), step.text()) != seen.end()) continue;
        seen.push_back(step.text());
        if (tree.size() >= options.node_cap)
          throw NodeBudgetExceeded("rollout tree exceeded " + std::to_string(options.node_cap) +
                                   " nodes");
        next.push_back(tree.add_node(id, step.text(), step.terminal()));
      }
    }
    frontier = std::move(next);
  }
  return tree;
}

void label_leaves(RolloutTree& tree, AnswerJudge& judge, const Problem& problem) {
  for (auto leaf : tree.leaves()) {
    auto verdict = judge.judge(problem, tree.prefix_path(leaf));
    tree.set_label(leaf, verdict.valid ? 1 : -1);
  }
}

std::optional<RolloutId> select_next_leaf(const RolloutTree& tree,
                                          const std::set<RolloutId>& processed, LeafPhase phase) {
  const int wanted = phase == LeafPhase::correct ? 1 : -1;
  std::optional<RolloutId> best;
  for (auto id : tree.leaves()) {
    const auto& n = tree.node(id);
    if (processed.count(id) || n.label != wanted) continue;
    if (!best || n.depth > tree.node(*best).depth) best = id;  // ids ascend: ties keep the first
  }
  return best;
}

std::vector<PropagationSegment> propagate_rewards(RolloutTree& tree) {
  if (tree.node(tree.root()).value != Rational(0))
    throw InvariantViolation("root value must be 0");
  for (auto leaf : tree.leaves())
    if (!tree.node(leaf).label) throw InvariantViolation("all leaves must be labeled");

  std::vector<PropagationSegment> segments;
  std::set<RolloutId> processed;
  for (auto phase : {LeafPhase::correct, LeafPhase::incorrect}) {
    while (auto leaf = select_next_leaf(tree, processed, phase)) {
      processed.insert(*leaf);
      PropagationSegment seg;
      seg.leaf = *leaf;
      std::vector<RolloutId> unassigned;
      RolloutId cur = *leaf;
      while (!tree.node(cur).value) {
        unassigned.push_back(cur);
        cur = *tree.node(cur).parent;
      }
      seg.anchor = cur;
      std::reverse(unassigned.begin(), unassigned.end());
      const Rational label(*tree.node(*leaf).label);
      if (unassigned.empty()) {
        if (*tree.node(*leaf).value != label)
          throw InvariantViolation("leaf value differs from its label");
        segments.push_back(std::move(seg));
        continue;
      }
      seg.share = (label - *tree.node(seg.anchor).value) /
                  Rational(static_cast<std::int64_t>(unassigned.size()));
      Rational running = *tree.node(seg.anchor).value;
      for (auto id : unassigned) {
        running = running + seg.share;
        tree.assign_value(id, running);
      }
      if (*tree.node(*leaf).value != label)
        throw InvariantViolation("leaf value differs from its label");
      seg.assigned = std::move(unassigned);
      segments.push_back(std::move(seg));
    }
  }
  return segments;
}

std::vector<TrainingRecord> export_training_records(const RolloutTree& tree,
                                                    const Problem& problem) {
  std::vector<TrainingRecord> out;
  for (const auto& n : tree.nodes()) {
    if (n.id == tree.root()) continue;
    if (!n.value)
      throw NotPropagated("node " + std::to_string(n.id) + " has no propagated value");
    out.push_back({tree.problem_id(), problem.question, tree.prefix_path(n.id), *n.value,
                   n.value->to_double()});
  }
  return out;
}

nlohmann::json training_record_to_json(const TrainingRecord& record) {
  return {{"problem_id", record.problem_id},
          {"question", record.question},
          {"prefix", record.prefix.texts()},
          {"value", record.value}};
}

void write_training_records(std::ostream& out, std::span<const TrainingRecord> records) {
  for (const auto& r : records) out << training_record_to_json(r).dump() << '\n';
}

nlohmann::json tree_to_json(const RolloutTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : tree.nodes()) {
    nlohmann::json j{{"id", n.id},
                     {"parent", n.parent ? nlohmann::json(*n.parent) : nlohmann::json(nullptr)},
                     {"step", n.step_text}};
    if (n.terminal) j["terminal"] = true;
    if (n.label) j["label"] = *n.label;
    if (n.value) {
      j["value"] = n.value->to_double();
      j["value_exact"] = n.value->to_string();
    }
    nodes.push_back(std::move(j));
  }
  return {{"problem_id", tree.problem_id()}, {"root", tree.root()}, {"nodes", std::move(nodes)}};
}

RolloutTree tree_from_json(const nlohmann::json& doc) {
  try {
    RolloutTree tree(doc.value("problem_id", std::string{}));
    if (doc.at("root").get<RolloutId>() != 0) throw SchemaError("root must be node 0");
    const auto& nodes = doc.at("nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& j = nodes[i];
      if (j.at("id").get<RolloutId>() != i) throw SchemaError("node ids must be 0..n-1 in order");
      if (i == 0) continue;
      auto parent = j.at("parent").get<RolloutId>();
      if (parent >= i) throw SchemaError("parent must precede child");
      tree.add_node(parent, j.at("step").get<std::string>(), j.value("terminal", false));
    }
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      const auto& j = nodes[i];
      if (j.contains("label")) tree.set_label(i, j["label"].get<int>());
      if (j.contains("value_exact"))
        tree.assign_value(i, Rational::parse(j["value_exact"].get<std::string>()));
    }
    return tree;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("bad tree snapshot: ") + e.what());
  }
}

}  // namespace smrc
