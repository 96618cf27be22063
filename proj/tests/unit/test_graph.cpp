#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "siren/error.hpp"
#include "siren/graph.hpp"

using siren::Dag;
using siren::NodeId;

namespace {

Dag chain(std::size_t n) {
  std::vector<siren::Edge> edges;
  for (NodeId i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return Dag(n, edges);
}

Dag diamond() { return Dag(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}}); }

bool parents_first(const Dag& dag, const std::vector<NodeId>& order) {
  std::vector<std::size_t> pos(dag.n_nodes());
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  for (auto [p, c] : dag.edges()) {
    if (pos[p] >= pos[c]) return false;
  }
  return true;
}

}  // namespace

TEST(TopologicalSort, ChainIsAlreadySorted) {
  EXPECT_EQ(siren::topological_sort(chain(3)), (std::vector<NodeId>{0, 1, 2}));
}

TEST(TopologicalSort, EdgelessUsesIndexOrder) {
  EXPECT_EQ(siren::topological_sort(Dag(3, {})), (std::vector<NodeId>{0, 1, 2}));
}

TEST(TopologicalSort, TwoCycleIsStructuralError) {
  std::vector<std::vector<NodeId>> parents{{1}, {0}};
  try {
    siren::topological_sort(parents);
    FAIL() << "expected a cycle error";
  } catch (const siren::StructuralError& e) {
    EXPECT_TRUE(e.node() == 0 || e.node() == 1);
  }
  EXPECT_THROW(Dag(2, {{0, 1}, {1, 0}}), siren::StructuralError);
}

TEST(TopologicalSort, TieBreakByIndex) {
  Dag d(4, {{3, 0}, {2, 0}});
  EXPECT_EQ(siren::topological_sort(d), (std::vector<NodeId>{1, 2, 3, 0}));
}

TEST(TopologicalSort, OutOfRangeParent) {
  std::vector<std::vector<NodeId>> parents{{5}, {}};
  EXPECT_THROW(siren::topological_sort(parents), siren::ArgumentError);
}

TEST(Dag, LeafMustBeSink) {
  EXPECT_THROW(Dag(3, {{0, 1}, {1, 2}}, 1), siren::ArgumentError);
  EXPECT_EQ(Dag(3, {{0, 1}, {1, 2}}).leaf(), 2u);
}

TEST(Ancestors, Chain) {
  EXPECT_EQ(siren::ancestors(chain(3), 2), (std::vector<NodeId>{0, 1}));
}

TEST(Ancestors, Edgeless) {
  Dag d(3, {});
  for (NodeId i = 0; i < 3; ++i) EXPECT_TRUE(siren::ancestors(d, i).empty());
}

TEST(Ancestors, Diamond) {
  EXPECT_EQ(siren::ancestors(diamond(), 3), (std::vector<NodeId>{0, 1, 2}));
  EXPECT_EQ(siren::ancestor_closure(diamond(), 3), (std::vector<NodeId>{0, 1, 2, 3}));
}

TEST(Ancestors, InvalidIndex) {
  EXPECT_THROW(siren::ancestors(chain(3), 7), siren::ArgumentError);
}

TEST(RandomDag, FullProbabilityGivesCompleteDag) {
  Dag d = siren::random_dag(5, 1.0, 11);
  EXPECT_EQ(d.n_edges(), 10u);
}

TEST(RandomDag, ZeroProbabilityRejected) {
  EXPECT_THROW(siren::random_dag(5, 0.0, 1), siren::ArgumentError);
  EXPECT_THROW(siren::random_dag(1, 0.5, 1), siren::ArgumentError);
  EXPECT_THROW(siren::random_dag(5, 1.5, 1), siren::ArgumentError);
}

TEST(RandomDag, SeededAndAcyclic) {
  Dag a = siren::random_dag(50, 0.1, 7);
  Dag b = siren::random_dag(50, 0.1, 7);
  EXPECT_EQ(a.edges(), b.edges());
  EXPECT_TRUE(parents_first(a, siren::topological_sort(a)));
  EXPECT_NE(a.edges(), siren::random_dag(50, 0.1, 8).edges());
}

TEST(RandomDag, PropertyTopoOrderValid) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Dag d = siren::random_dag(5 + seed % 30, 0.05 + 0.01 * static_cast<double>(seed), seed);
    ASSERT_TRUE(parents_first(d, d.topo_order())) << "seed " << seed;
    ASSERT_TRUE(d.children(d.leaf()).empty());
  }
}

TEST(SelectRootedSubgraph, ChainOfTwelve) {
  auto sub = siren::select_rooted_subgraph(chain(12), 10);
  ASSERT_TRUE(sub.has_value());
  EXPECT_EQ(sub->n_nodes(), 12u);
  EXPECT_EQ(sub->leaf(), 11u);
}

TEST(SelectRootedSubgraph, StarTooShallow) {
  Dag star(6, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}});
  EXPECT_FALSE(siren::select_rooted_subgraph(star, 10).has_value());
}

TEST(SelectRootedSubgraph, Diamond) {
  auto sub = siren::select_rooted_subgraph(diamond(), 2);
  ASSERT_TRUE(sub.has_value());
  EXPECT_EQ(*sub, diamond());
  EXPECT_EQ(siren::longest_path_depths(diamond()), (std::vector<std::size_t>{0, 1, 1, 2}));
}

TEST(SelectRootedSubgraph, InducedOnAncestorsOnly) {
  // 4 is a second sink, 5 hangs off the deep sink's path but is not an ancestor.
  Dag d(6, {{0, 1}, {1, 2}, {2, 3}, {0, 4}, {1, 5}});
  auto sub = siren::select_rooted_subgraph(d, 3);
  ASSERT_TRUE(sub.has_value());
  EXPECT_EQ(sub->n_nodes(), 4u);
  EXPECT_EQ(sub->leaf(), 3u);
}

TEST(SelectRootedSubgraph, PropertyAncestorsAreAllOtherNodes) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto sub = siren::select_rooted_subgraph(siren::random_dag(20, 0.3, seed), 3);
    if (!sub) continue;
    auto anc = siren::ancestors(*sub, sub->leaf());
    EXPECT_EQ(anc.size() + 1, sub->n_nodes());
    EXPECT_EQ(std::count(anc.begin(), anc.end(), sub->leaf()), 0);
  }
}

TEST(DagJson, RoundTrip) {
  Dag d = siren::random_dag(12, 0.4, 3);
  auto j = siren::to_json(d);
  EXPECT_EQ(j.at("n_nodes").get<std::size_t>(), 12u);
  EXPECT_EQ(siren::dag_from_json(j), d);
}

TEST(DagJson, Malformed) {
  EXPECT_THROW(siren::dag_from_json(nlohmann::json{{"n_nodes", 2}}), siren::ParseError);
}
