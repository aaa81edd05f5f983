#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "claimver/kg_store.hpp"

namespace claimver {

struct RetrievalConfig {
  int max_hops = 3;
  int max_paths_per_pair = 4;

  void validate() const {
    if (max_hops < 1) throw std::invalid_argument("max_hops must be >= 1");
    if (max_paths_per_pair < 1) throw std::invalid_argument("max_paths_per_pair must be >= 1");
  }

  bool operator==(const RetrievalConfig&) const = default;
};

struct KgPath {
  std::pair<NodeId, NodeId> endpoints;
  std::vector<NodeId> nodes;
  std::vector<Triplet> edges;

  std::size_t length() const { return edges.size(); }
  bool operator==(const KgPath&) const = default;
};

// Ranking: fewer hops first, then node-id sequence, then the edge sequence
// (only differs for parallel edges).
inline bool path_less(const KgPath& a, const KgPath& b) {
  if (a.edges.size() != b.edges.size()) return a.edges.size() < b.edges.size();
  if (a.nodes != b.nodes) return a.nodes < b.nodes;
  return a.edges < b.edges;
}

struct RetrievedTriplets {
  std::vector<KgPath> paths;
  std::vector<Triplet> triplets;  // union of path edges, first-seen order

  bool operator==(const RetrievedTriplets&) const = default;
};

class RetrievalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// Hop distances from `origin`, explored no further than max_hops.
inline std::unordered_map<std::size_t, int> bounded_bfs(const KnowledgeGraph& kg, std::size_t origin, int max_hops) {
  std::unordered_map<std::size_t, int> dist{{origin, 0}};
  std::deque<std::size_t> frontier{origin};
  while (!frontier.empty()) {
    const auto u = frontier.front();
    frontier.pop_front();
    const int d = dist[u];
    if (d == max_hops) continue;
    for (const auto& adj : kg.adjacent(u)) {
      if (dist.try_emplace(adj.neighbor, d + 1).second) frontier.push_back(adj.neighbor);
    }
  }
  return dist;
}

// Walks simple node sequences from `from` to `to` of an exact length, in
// lexicographic node-id order, pruning with distances to `to`. Each node
// sequence expands into its parallel-edge combinations in triplet order.
class PairSearch {
 public:
  PairSearch(const KnowledgeGraph& kg, std::size_t from, std::size_t to,
             const std::unordered_map<std::size_t, int>& dist_to_target, std::size_t quota)
      : kg_(kg), from_(from), to_(to), dist_(dist_to_target), quota_(quota) {}

  std::vector<KgPath> run(int max_hops) {
    auto it = dist_.find(from_);
    if (from_ == to_ || it == dist_.end()) return {};
    for (int len = it->second; len <= max_hops && out_.size() < quota_; ++len) {
      target_len_ = static_cast<std::size_t>(len);
      seq_.assign(1, from_);
      on_path_.assign(kg_.node_count(), false);
      on_path_[from_] = true;
      dfs(from_);
    }
    return std::move(out_);
  }

 private:
  void dfs(std::size_t u) {
    if (out_.size() >= quota_) return;
    const std::size_t depth = seq_.size() - 1;
    if (u == to_) {
      if (depth == target_len_) emit();
      return;
    }
    if (depth >= target_len_) return;
    const std::size_t remaining = target_len_ - depth;
    const auto adj = kg_.adjacent(u);
    for (std::size_t i = 0; i < adj.size();) {
      const auto v = adj[i].neighbor;
      std::size_t j = i;
      while (j < adj.size() && adj[j].neighbor == v) ++j;
      const std::size_t group_begin = i;
      i = j;
      if (on_path_[v]) continue;
      auto d = dist_.find(v);
      if (d == dist_.end() || static_cast<std::size_t>(d->second) > remaining - 1) continue;
      if (v == to_ && remaining != 1) continue;
      seq_.push_back(v);
      groups_.push_back(adj.subspan(group_begin, j - group_begin));
      on_path_[v] = true;
      dfs(v);
      on_path_[v] = false;
      groups_.pop_back();
      seq_.pop_back();
      if (out_.size() >= quota_) return;
    }
  }

  void emit() {
    std::vector<std::size_t> choice(groups_.size(), 0);
    while (out_.size() < quota_) {
      KgPath path;
      path.endpoints = {kg_.node(from_).id, kg_.node(to_).id};
      for (auto n : seq_) path.nodes.push_back(kg_.node(n).id);
      for (std::size_t k = 0; k < groups_.size(); ++k) path.edges.push_back(kg_.edges()[groups_[k][choice[k]].edge]);
      out_.push_back(std::move(path));
      // Odometer over the per-hop edge alternatives, last hop fastest.
      std::size_t k = groups_.size();
      while (k > 0) {
        --k;
        if (++choice[k] < groups_[k].size()) break;
        choice[k] = 0;
        if (k == 0) return;
      }
      if (groups_.empty()) return;
    }
  }

  const KnowledgeGraph& kg_;
  std::size_t from_;
  std::size_t to_;
  const std::unordered_map<std::size_t, int>& dist_;
  std::size_t quota_;
  std::size_t target_len_ = 0;
  std::vector<std::size_t> seq_;
  std::vector<std::span<const KnowledgeGraph::Adjacent>> groups_;
  std::vector<bool> on_path_;
  std::vector<KgPath> out_;
};

}  // namespace detail

// Bounded shortest simple paths between one pair of nodes, ranked by path_less.
inline std::vector<KgPath> paths_between(const KnowledgeGraph& kg, const NodeId& u, const NodeId& v,
                                         const RetrievalConfig& cfg) {
  cfg.validate();
  const auto ui = kg.index_of(u);
  const auto vi = kg.index_of(v);
  if (!ui) throw RetrievalError("unknown seed node '" + u.value + "'");
  if (!vi) throw RetrievalError("unknown seed node '" + v.value + "'");
  const auto dist = detail::bounded_bfs(kg, *vi, cfg.max_hops);
  return detail::PairSearch(kg, *ui, *vi, dist, static_cast<std::size_t>(cfg.max_paths_per_pair)).run(cfg.max_hops);
}

// Multi-origin bounded search: one BFS per seed records hop distances; every
// unordered seed pair is then connected by walking only nodes whose distance
// to the far seed still fits the hop budget. Pairs are visited in seed-id
// order, so output is deterministic.
inline RetrievedTriplets retrieve(const KnowledgeGraph& kg, std::span<const NodeId> seeds,
                                  const RetrievalConfig& cfg = {}) {
  cfg.validate();
  std::vector<std::size_t> idx;
  for (const auto& s : seeds) {
    auto i = kg.index_of(s);
    if (!i) throw RetrievalError("unknown seed node '" + s.value + "'");
    idx.push_back(*i);
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());

  std::vector<std::unordered_map<std::size_t, int>> dist;
  dist.reserve(idx.size());
  for (auto i : idx) dist.push_back(detail::bounded_bfs(kg, i, cfg.max_hops));

  RetrievedTriplets out;
  std::set<Triplet> seen;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      auto paths = detail::PairSearch(kg, idx[a], idx[b], dist[b], static_cast<std::size_t>(cfg.max_paths_per_pair))
                       .run(cfg.max_hops);
      for (auto& p : paths) {
        for (const auto& t : p.edges) {
          if (seen.insert(t).second) out.triplets.push_back(t);
        }
        out.paths.push_back(std::move(p));
      }
    }
  }
  return out;
}

}  // namespace claimver
