#pragma once

// Exhaustive reference enumeration for testing retrieval. Deliberately naive:
// plain DFS over raw edges with no distance pruning or grouping.

#include <algorithm>
#include <vector>

#include "claimver/kg_store.hpp"
#include "claimver/retrieval.hpp"

namespace claimver {

// All simple paths from u to v with 1..max_hops edges, each parallel edge a
// distinct path, sorted by (length, node ids, edges).
inline std::vector<KgPath> enumerate_paths_oracle(const KnowledgeGraph& kg, const NodeId& u, const NodeId& v,
                                                  int max_hops) {
  if (!kg.contains(u)) throw RetrievalError("unknown node '" + u.value + "'");
  if (!kg.contains(v)) throw RetrievalError("unknown node '" + v.value + "'");
  std::vector<KgPath> out;
  if (u == v) return out;

  std::vector<NodeId> nodes{u};
  std::vector<Triplet> edges;
  auto visit = [&](auto&& self, const NodeId& at) -> void {
    if (at == v) {
      out.push_back({{u, v}, nodes, edges});
      return;
    }
    if (static_cast<int>(edges.size()) == max_hops) return;
    for (const auto& t : kg.edges()) {
      NodeId next;
      if (t.subject == at) {
        next = t.object;
      } else if (t.object == at) {
        next = t.subject;
      } else {
        continue;
      }
      if (std::find(nodes.begin(), nodes.end(), next) != nodes.end()) continue;
      nodes.push_back(next);
      edges.push_back(t);
      self(self, next);
      edges.pop_back();
      nodes.pop_back();
    }
  };
  visit(visit, u);
  std::sort(out.begin(), out.end(), path_less);
  return out;
}

}  // namespace claimver
