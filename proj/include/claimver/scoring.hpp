#pragma once

// Attribution scores: per-claim score from the predicted label, the triplets
// match score (weighted semantic similarity + entity presence ratio), and the
// document-level score, an asymmetric sigmoid over sum(TMS * claim score).

#include <algorithm>
#include <cmath>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "claimver/embedding.hpp"
#include "claimver/entity_linker.hpp"
#include "claimver/kg_store.hpp"
#include "claimver/response_parser.hpp"

namespace claimver {

struct ScoringConfig {
  double alpha = 0.5;      // semantic similarity weight
  double beta = 0.5;       // entity presence ratio weight
  double gamma_neg = 3.0;  // slope for negative sums
  double gamma_pos = 1.0;  // slope for non-negative sums

  void validate() const {
    if (!(alpha >= 0) || !(beta >= 0) || !(alpha + beta > 0)) {
      throw std::invalid_argument("alpha and beta must be >= 0 with alpha + beta > 0");
    }
    if (!(gamma_pos >= 0) || !(gamma_neg >= gamma_pos)) {
      throw std::invalid_argument("gammas must satisfy gamma_neg >= gamma_pos >= 0");
    }
  }

  bool operator==(const ScoringConfig&) const = default;
};

class ClaimScore {
 public:
  constexpr explicit ClaimScore(int v) : value_(v) {
    if (v < -1 || v > 2) throw std::out_of_range("claim score must lie in {-1, 0, 1, 2}");
  }
  constexpr int value() const { return value_; }
  bool operator==(const ClaimScore&) const = default;

 private:
  int value_;
};

constexpr ClaimScore claim_score(PredictionLabel label, std::size_t n_triplets) {
  switch (label) {
    case PredictionLabel::Attributable:
      return ClaimScore(2);
    case PredictionLabel::Extrapolatory:
      return ClaimScore(n_triplets > 0 ? 1 : 0);
    case PredictionLabel::NoAttribution:
      return ClaimScore(0);
    case PredictionLabel::Contradictory:
      return ClaimScore(-1);
  }
  return ClaimScore(0);
}

// |claim ∩ triplet| / |claim|, 0 for an empty claim set.
inline double entity_presence_ratio(const std::set<NodeId>& claim_entities, const std::set<NodeId>& triplet_entities) {
  if (claim_entities.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& e : claim_entities) hits += triplet_entities.contains(e) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(claim_entities.size());
}

inline double semantic_similarity(Embedder& embedder, std::string_view claim_text, std::string_view triplets_text) {
  const auto a = embedder.embed(claim_text);
  const auto b = embedder.embed(triplets_text);
  return std::clamp(cosine_similarity(a, b), 0.0, 1.0);
}

inline double triplets_match_score(const ScoringConfig& cfg, double ss, double epr, std::size_t n_triplets) {
  if (n_triplets == 0) return 0.0;
  return cfg.alpha * ss + cfg.beta * epr;
}

// 1 / (1 + exp(-gamma x)), gamma = gamma_neg for x < 0 else gamma_pos.
// Saturates to 0 or 1 for extreme x.
inline double modified_sigmoid(double x, const ScoringConfig& cfg = {}) {
  if (x < 0) {
    const double e = std::exp(cfg.gamma_neg * x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(-cfg.gamma_pos * x));
}

struct ScoredClaim {
  ClaimResult claim;
  ClaimScore cs{0};
  double ss = 0;
  double epr = 0;
  double tms = 0;

  bool operator==(const ScoredClaim&) const = default;
};

struct AttributionResult {
  double sum_term = 0;
  double kas = 0.5;
};

inline AttributionResult kg_attribution_score(std::span<const ScoredClaim> claims, const ScoringConfig& cfg = {}) {
  AttributionResult r;
  for (const auto& c : claims) r.sum_term += c.tms * c.cs.value();
  r.kas = modified_sigmoid(r.sum_term, cfg);
  return r;
}

// Evidence text compared against the claim: "(s, p, o); (s, p, o)".
inline std::string triplets_text(std::span<const Triplet> triplets) {
  std::string out;
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    if (i > 0) out += "; ";
    out += triplets[i].to_string();
  }
  return out;
}

// Linked entities lying inside the claim's located span.
inline std::set<NodeId> claim_entities(const ClaimResult& claim, std::span<const LinkedEntity> entities) {
  std::set<NodeId> out;
  if (!claim.located()) return out;
  for (const auto& e : entities) {
    if (e.start >= *claim.start && e.end <= *claim.end) out.insert(e.node);
  }
  return out;
}

inline std::set<NodeId> triplet_entities(std::span<const Triplet> triplets) {
  std::set<NodeId> out;
  for (const auto& t : triplets) {
    out.insert(t.subject);
    out.insert(t.object);
  }
  return out;
}

inline ScoredClaim score_claim(ClaimResult claim, std::span<const LinkedEntity> entities, Embedder& embedder,
                               const ScoringConfig& cfg = {}) {
  ScoredClaim s{std::move(claim)};
  const auto& rel = s.claim.rel_triplets;
  s.cs = claim_score(s.claim.prediction, rel.size());
  if (!rel.empty()) {
    s.ss = semantic_similarity(embedder, s.claim.span, triplets_text(rel));
    s.epr = entity_presence_ratio(claim_entities(s.claim, entities), triplet_entities(rel));
  }
  s.tms = triplets_match_score(cfg, s.ss, s.epr, rel.size());
  return s;
}

}  // namespace claimver
