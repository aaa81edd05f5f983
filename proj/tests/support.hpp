#pragma once

#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "claimver/kg_store.hpp"

namespace claimver::testing {

// (subject id, predicate, object id); labels are "Label <id>" unless given.
struct Edge {
  std::string s;
  std::string p;
  std::string o;
};

inline std::string default_label(const std::string& id) { return "Label " + id; }

inline KnowledgeGraph make_kg(const std::vector<Edge>& edges, const std::vector<KgNode>& nodes = {}) {
  KgBuilder b;
  for (const auto& n : nodes) b.add_node(n);
  std::size_t line = 0;
  for (const auto& e : edges) {
    b.add_triplet(NodeId(e.s), default_label(e.s), e.p, NodeId(e.o), default_label(e.o), ++line);
  }
  return std::move(b).build();
}

// Random multigraph with up to max_nodes nodes and max_edges edges, including
// occasional parallel edges and self-loops.
inline KnowledgeGraph random_kg(std::mt19937_64& rng, int max_nodes, int max_edges) {
  std::uniform_int_distribution<int> n_nodes(2, max_nodes);
  const int n = n_nodes(rng);
  std::uniform_int_distribution<int> n_edges(0, max_edges);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::uniform_int_distribution<int> pred(0, 2);
  KgBuilder b;
  for (int i = 0; i < n; ++i) b.add_node({NodeId("N" + std::to_string(i)), "node " + std::to_string(i), {}, {}});
  const int m = n_edges(rng);
  for (int i = 0; i < m; ++i) {
    const auto s = "N" + std::to_string(pick(rng));
    const auto o = "N" + std::to_string(pick(rng));
    b.add_triplet(NodeId(s), "", "p" + std::to_string(pred(rng)), NodeId(o), "", static_cast<std::size_t>(i + 1));
  }
  return std::move(b).build();
}

}  // namespace claimver::testing
