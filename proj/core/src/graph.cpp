#include "siren/graph.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <queue>
#include <random>
#include <string>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "siren/error.hpp"

namespace siren {

std::vector<NodeId> topological_sort(
    const std::vector<std::vector<NodeId>>& parents) {
  const std::size_t n = parents.size();
  std::vector<std::vector<NodeId>> children(n);
  std::vector<std::size_t> in_degree(n, 0);
  for (NodeId child = 0; child < n; ++child) {
    for (NodeId parent : parents[child]) {
      if (parent >= n) {
        throw ArgumentError(fmt::format(
            "node {} lists parent {} but the graph has {} nodes", child,
            parent, n));
      }
      children[parent].push_back(child);
      ++in_degree[child];
    }
  }

  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (NodeId v = 0; v < n; ++v) {
    if (in_degree[v] == 0) ready.push(v);
  }
  std::vector<NodeId> order;
  order.reserve(n);
  while (!ready.empty()) {
    const NodeId v = ready.top();
    ready.pop();
    order.push_back(v);
    for (NodeId c : children[v]) {
      if (--in_degree[c] == 0) ready.push(c);
    }
  }
  if (order.size() == n) return order;

  // Every unsorted node has an unsorted parent; walking parents must revisit
  // a node, and the first revisited node lies on a cycle.
  NodeId v = 0;
  while (in_degree[v] == 0) ++v;
  std::vector<bool> seen(n, false);
  while (!seen[v]) {
    seen[v] = true;
    for (NodeId p : parents[v]) {
      if (in_degree[p] > 0) {
        v = p;
        break;
      }
    }
  }
  throw StructuralError(
      fmt::format("graph contains a directed cycle through node {}", v), v);
}

Dag::Dag(std::size_t n_nodes, std::vector<Edge> edges,
         std::optional<NodeId> leaf)
    : parents_(n_nodes), children_(n_nodes) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (const auto& [parent, child] : edges) {
    if (parent >= n_nodes || child >= n_nodes) {
      throw ArgumentError(fmt::format("edge [{}, {}] out of range for {} nodes",
                                      parent, child, n_nodes));
    }
    if (parent == child) {
      throw StructuralError(fmt::format("self loop on node {}", parent),
                            parent);
    }
    parents_[child].push_back(parent);
    children_[parent].push_back(child);
  }
  for (auto& p : parents_) std::sort(p.begin(), p.end());
  for (auto& c : children_) std::sort(c.begin(), c.end());
  topo_order_ = topological_sort(parents_);

  if (n_nodes == 0) return;
  if (leaf) {
    if (*leaf >= n_nodes) {
      throw ArgumentError(fmt::format("leaf {} out of range", *leaf));
    }
    if (!children_[*leaf].empty()) {
      throw ArgumentError(fmt::format("leaf {} has children", *leaf));
    }
    leaf_ = *leaf;
  } else {
    for (auto it = topo_order_.rbegin(); it != topo_order_.rend(); ++it) {
      if (children_[*it].empty()) {
        leaf_ = *it;
        break;
      }
    }
  }
}

std::span<const NodeId> Dag::parents(NodeId node) const {
  if (node >= n_nodes()) {
    throw ArgumentError(fmt::format("node {} out of range", node));
  }
  return parents_[node];
}

std::span<const NodeId> Dag::children(NodeId node) const {
  if (node >= n_nodes()) {
    throw ArgumentError(fmt::format("node {} out of range", node));
  }
  return children_[node];
}

std::vector<Edge> Dag::edges() const {
  std::vector<Edge> out;
  for (NodeId parent = 0; parent < n_nodes(); ++parent) {
    for (NodeId child : children_[parent]) out.emplace_back(parent, child);
  }
  return out;
}

std::size_t Dag::n_edges() const {
  std::size_t total = 0;
  for (const auto& p : parents_) total += p.size();
  return total;
}

Dag Dag::with_leaf(NodeId leaf) const { return Dag(n_nodes(), edges(), leaf); }

std::vector<NodeId> topological_sort(const Dag& dag) {
  return dag.topo_order();
}

std::vector<NodeId> ancestors(const Dag& dag, NodeId node) {
  if (node >= dag.n_nodes()) {
    throw ArgumentError(fmt::format("node {} out of range", node));
  }
  std::vector<bool> seen(dag.n_nodes(), false);
  std::vector<NodeId> stack(dag.parents(node).begin(),
                            dag.parents(node).end());
  while (!stack.empty()) {
    const NodeId v = stack.back();
    stack.pop_back();
    if (seen[v]) continue;
    seen[v] = true;
    for (NodeId p : dag.parents(v)) {
      if (!seen[p]) stack.push_back(p);
    }
  }
  std::vector<NodeId> out;
  for (NodeId v = 0; v < dag.n_nodes(); ++v) {
    if (seen[v]) out.push_back(v);
  }
  return out;
}

std::vector<NodeId> ancestor_closure(const Dag& dag, NodeId node) {
  std::vector<NodeId> out = ancestors(dag, node);
  out.insert(std::upper_bound(out.begin(), out.end(), node), node);
  return out;
}

std::vector<std::size_t> longest_path_depths(const Dag& dag) {
  std::vector<std::size_t> depth(dag.n_nodes(), 0);
  for (NodeId v : dag.topo_order()) {
    for (NodeId p : dag.parents(v)) {
      depth[v] = std::max(depth[v], depth[p] + 1);
    }
  }
  return depth;
}

Dag random_dag(std::size_t n_nodes, double edge_prob, std::uint64_t seed) {
  if (n_nodes < 2) {
    throw ArgumentError("random_dag needs at least 2 nodes");
  }
  if (!(edge_prob > 0.0 && edge_prob <= 1.0)) {
    throw ArgumentError(
        fmt::format("edge_prob must lie in (0, 1], got {}", edge_prob));
  }
  std::mt19937_64 rng(seed);
  std::vector<NodeId> perm(n_nodes);
  std::iota(perm.begin(), perm.end(), NodeId{0});
  for (std::size_t i = n_nodes - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(perm[i], perm[j]);
  }
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < n_nodes; ++a) {
    for (std::size_t b = a + 1; b < n_nodes; ++b) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      if (u < edge_prob) edges.emplace_back(perm[a], perm[b]);
    }
  }
  Dag dag(n_nodes, std::move(edges));
  // The final permutation entry never gets an outgoing edge.
  return dag.with_leaf(perm.back());
}

std::optional<Dag> select_rooted_subgraph(const Dag& dag,
                                          std::size_t min_depth) {
  const auto depth = longest_path_depths(dag);
  std::optional<NodeId> best;
  for (NodeId v = 0; v < dag.n_nodes(); ++v) {
    if (!dag.children(v).empty() || depth[v] < min_depth) continue;
    if (!best || depth[v] > depth[*best]) best = v;
  }
  if (!best) return std::nullopt;

  const std::vector<NodeId> keep = ancestor_closure(dag, *best);
  std::vector<std::optional<NodeId>> relabel(dag.n_nodes());
  for (std::size_t i = 0; i < keep.size(); ++i) relabel[keep[i]] = i;
  std::vector<Edge> edges;
  for (const auto& [parent, child] : dag.edges()) {
    if (relabel[parent] && relabel[child]) {
      edges.emplace_back(*relabel[parent], *relabel[child]);
    }
  }
  return Dag(keep.size(), std::move(edges), *relabel[*best]);
}

nlohmann::json to_json(const Dag& dag) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [p, c] : dag.edges()) edges.push_back({p, c});
  return {{"n_nodes", dag.n_nodes()}, {"edges", edges}, {"leaf", dag.leaf()}};
}

Dag dag_from_json(const nlohmann::json& j) {
  try {
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) {
        throw ParseError("graph edge must be a [parent, child] pair");
      }
      edges.emplace_back(e[0].get<NodeId>(), e[1].get<NodeId>());
    }
    std::optional<NodeId> leaf;
    if (j.contains("leaf")) leaf = j.at("leaf").get<NodeId>();
    return Dag(j.at("n_nodes").get<std::size_t>(), std::move(edges), leaf);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("graph json: {}", e.what()));
  }
}

}  // namespace siren
