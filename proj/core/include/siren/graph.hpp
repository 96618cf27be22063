#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace siren {

using NodeId = std::size_t;
using Edge = std::pair<NodeId, NodeId>;  // (parent, child)

// Immutable causal DAG with a designated leaf (the node whose outlier is
// explained). Construction validates indices, acyclicity, and that the leaf
// is a sink.
class Dag {
 public:
  Dag() = default;
  // leaf defaults to the sink that comes last in topological order.
  Dag(std::size_t n_nodes, std::vector<Edge> edges,
      std::optional<NodeId> leaf = std::nullopt);

  std::size_t n_nodes() const { return parents_.size(); }
  std::span<const NodeId> parents(NodeId node) const;
  std::span<const NodeId> children(NodeId node) const;
  const std::vector<NodeId>& topo_order() const { return topo_order_; }
  NodeId leaf() const { return leaf_; }
  // Sorted by (parent, child).
  std::vector<Edge> edges() const;
  std::size_t n_edges() const;
  bool is_root(NodeId node) const { return parents(node).empty(); }

  // Same structure, different target sink.
  Dag with_leaf(NodeId leaf) const;

  friend bool operator==(const Dag& a, const Dag& b) {
    return a.parents_ == b.parents_ && a.leaf_ == b.leaf_;
  }

 private:
  std::vector<std::vector<NodeId>> parents_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<NodeId> topo_order_;
  NodeId leaf_ = 0;
};

// Kahn's algorithm, ties broken by ascending node index. Throws
// StructuralError naming a node that lies on a cycle, ArgumentError on an
// out-of-range parent index.
std::vector<NodeId> topological_sort(
    const std::vector<std::vector<NodeId>>& parents);
std::vector<NodeId> topological_sort(const Dag& dag);

// Transitive closure of parents, excluding the node itself; ascending.
std::vector<NodeId> ancestors(const Dag& dag, NodeId node);

// ancestors(leaf) plus the leaf, ascending. The attribution candidate set.
std::vector<NodeId> ancestor_closure(const Dag& dag, NodeId node);

// Number of edges on the longest directed path ending at each node.
std::vector<std::size_t> longest_path_depths(const Dag& dag);

// Uniform random permutation, then each forward edge with probability
// edge_prob. The last node of the permutation is the leaf.
Dag random_dag(std::size_t n_nodes, double edge_prob, std::uint64_t seed);

// Picks the sink with the greatest depth (lowest index on ties) and returns
// the subgraph induced on it and its ancestors, relabelled in ascending
// original order, with that sink as leaf. nullopt if no sink reaches
// min_depth.
std::optional<Dag> select_rooted_subgraph(const Dag& dag,
                                          std::size_t min_depth);

// {"n_nodes": n, "edges": [[p, c], ...], "leaf": l}
nlohmann::json to_json(const Dag& dag);
Dag dag_from_json(const nlohmann::json& j);

}  // namespace siren
