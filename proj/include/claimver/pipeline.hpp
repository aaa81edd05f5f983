#pragma once

#include <future>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "claimver/embedding.hpp"
#include "claimver/entity_linker.hpp"
#include "claimver/kg_store.hpp"
#include "claimver/llm_backend.hpp"
#include "claimver/prompts.hpp"
#include "claimver/report.hpp"
#include "claimver/response_parser.hpp"
#include "claimver/retrieval.hpp"
#include "claimver/scoring.hpp"

namespace claimver {

struct PipelineOptions {
  RetrievalConfig retrieval;
  ScoringConfig scoring;
  std::size_t chunk_chars = 0;  // 0 = one prompt for the whole text
  std::vector<TextHook> hooks;
};

// A failed stage. Carries the diagnostics gathered before the failure.
class PipelineError : public std::runtime_error {
 public:
  // Process exit codes used by the CLI.
  static constexpr int kInputError = 2;
  static constexpr int kBackendError = 3;
  static constexpr int kParseError = 4;

  PipelineError(std::string stage, const std::string& message, int exit_code, std::vector<std::string> diagnostics = {})
      : std::runtime_error(stage + ": " + message),
        stage_(std::move(stage)),
        exit_code_(exit_code),
        diagnostics_(std::move(diagnostics)) {}

  const std::string& stage() const { return stage_; }
  int exit_code() const { return exit_code_; }
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  std::string stage_;
  int exit_code_;
  std::vector<std::string> diagnostics_;
};

namespace detail {

// Uses the primary embedder until it fails once, then the hashed fallback.
class FallbackEmbedder : public Embedder {
 public:
  FallbackEmbedder(Embedder& primary, std::vector<std::string>& diagnostics)
      : primary_(&primary), diagnostics_(&diagnostics) {}

  std::vector<double> embed(std::string_view s) override {
    if (!failed_) {
      try {
        return primary_->embed(s);
      } catch (const std::exception& e) {
        failed_ = true;
        diagnostics_->push_back(std::string("embedder failed, using hashed bag-of-tokens fallback: ") + e.what());
      }
    }
    return fallback_.embed(s);
  }

 private:
  Embedder* primary_;
  std::vector<std::string>* diagnostics_;
  HashedBagEmbedder fallback_;
  bool failed_ = false;
};

struct ChunkWork {
  TextChunk chunk;
  std::vector<LinkedEntity> entities;  // offsets relative to the chunk
  RetrievedTriplets retrieved;
  PromptBundle prompt;
  std::string completion;
};

inline std::vector<NodeId> seeds_of(const std::vector<LinkedEntity>& entities) {
  std::set<NodeId> seen;
  std::vector<NodeId> out;
  for (const auto& e : entities) {
    if (seen.insert(e.node).second) out.push_back(e.node);
  }
  return out;
}

}  // namespace detail

// preprocess -> chunk -> link -> retrieve -> prompt -> complete -> parse ->
// validate -> score. Chunks get independent prompts; one KAS covers all claims.
inline VerificationReport run_pipeline(const KnowledgeGraph& kg, std::string_view text, CompletionBackend& backend,
                                       Embedder& embedder, const PipelineOptions& opts = {}) {
  std::vector<std::string> diags;
  try {
    opts.retrieval.validate();
    opts.scoring.validate();
  } catch (const std::exception& e) {
    throw PipelineError("config", e.what(), PipelineError::kInputError);
  }
  if (text::trim(text).empty()) throw PipelineError("input", "input text is empty", PipelineError::kInputError);

  std::string prepared(text);
  for (std::size_t i = 0; i < opts.hooks.size(); ++i) {
    try {
      prepared = opts.hooks[i](prepared);
    } catch (const std::exception& e) {
      throw PipelineError("preprocess", PreprocessError(i, e.what()).what(), PipelineError::kInputError, diags);
    }
  }
  if (prepared != text) diags.push_back("input text rewritten by preprocessing hooks; offsets refer to the rewritten text");

  std::vector<TextChunk> chunks =
      opts.chunk_chars > 0 ? chunk_text(prepared, opts.chunk_chars) : std::vector<TextChunk>{{prepared, 0, false}};
  if (chunks.size() > 1) diags.push_back("input split into " + std::to_string(chunks.size()) + " chunks");

  const EntityLinker linker(kg);
  std::vector<detail::ChunkWork> work;
  for (auto& chunk : chunks) {
    detail::ChunkWork w;
    w.chunk = std::move(chunk);
    if (w.chunk.oversize) diags.push_back("chunk at offset " + std::to_string(w.chunk.offset) + " exceeds the budget");
    w.entities = linker.link(w.chunk.text);
    try {
      w.retrieved = retrieve(kg, detail::seeds_of(w.entities), opts.retrieval);
    } catch (const std::exception& e) {
      throw PipelineError("triplet-retrieval", e.what(), PipelineError::kInputError, diags);
    }
    w.prompt = build_verification_prompt(w.chunk.text, w.retrieved);
    work.push_back(std::move(w));
  }

  try {
    if (work.size() == 1) {
      work[0].completion = backend.complete(work[0].prompt);
    } else {
      std::vector<std::future<std::string>> pending;
      for (const auto& w : work) {
        pending.push_back(std::async(std::launch::async, [&backend, &w] { return backend.complete(w.prompt); }));
      }
      std::optional<std::string> first_error;
      for (std::size_t i = 0; i < work.size(); ++i) {
        try {
          work[i].completion = pending[i].get();
        } catch (const std::exception& e) {
          if (!first_error) first_error = e.what();
        }
      }
      if (first_error) throw std::runtime_error(*first_error);
    }
  } catch (const std::exception& e) {
    throw PipelineError("llm-backend", e.what(), PipelineError::kBackendError, diags);
  }

  VerificationReport report;
  report.input_text = prepared;
  report.config = {opts.scoring, opts.retrieval, opts.chunk_chars};
  detail::FallbackEmbedder safe_embedder(embedder, diags);
  std::set<Triplet> seen_triplets;
  int index_offset = 0;
  for (std::size_t ci = 0; ci < work.size(); ++ci) {
    auto& w = work[ci];
    const std::string prefix = work.size() > 1 ? "chunk " + std::to_string(ci + 1) + ": " : "";
    ParseResult parsed;
    try {
      parsed = parse_response(w.completion);
    } catch (const ResponseParseError& e) {
      diags.push_back(prefix + "unparseable model response: " + e.raw().substr(0, 200));
      throw PipelineError("response-parser", e.what(), PipelineError::kParseError, diags);
    }
    for (const auto& d : parsed.diagnostics) diags.push_back(prefix + d);

    auto validated = validate_claims(parsed.claims, w.chunk.text, w.retrieved, kg);
    // Scoring compares chunk-relative offsets; shift to the full text afterwards.
    int max_index = index_offset;
    for (auto& claim : validated) {
      auto scored = score_claim(std::move(claim), w.entities, safe_embedder, opts.scoring);
      if (scored.claim.start) {
        *scored.claim.start += w.chunk.offset;
        *scored.claim.end += w.chunk.offset;
      }
      scored.claim.index += index_offset;
      max_index = std::max(max_index, scored.claim.index);
      report.claims.push_back(std::move(scored));
    }
    index_offset = max_index;

    for (auto& e : w.entities) {
      e.start += w.chunk.offset;
      e.end += w.chunk.offset;
      const auto* node = kg.find_node(e.node);
      if (!e.alternates.empty()) {
        std::string alts;
        for (const auto& a : e.alternates) alts += " " + a.value;
        diags.push_back("ambiguous mention \"" + e.mention + "\" linked to " + e.node.value + "; alternates:" + alts);
      }
      report.entities.push_back({std::move(e), node ? node->label : std::string{}, node ? node->description : std::string{}});
    }
    for (auto& p : w.retrieved.paths) report.retrieved.paths.push_back(std::move(p));
    for (auto& t : w.retrieved.triplets) {
      if (seen_triplets.insert(t).second) report.retrieved.triplets.push_back(std::move(t));
    }
  }

  report.n = report.claims.size();
  report.kas = kg_attribution_score(report.claims, opts.scoring).kas;
  report.diagnostics = std::move(diags);
  return report;
}

struct DatagenItem {
  std::string full_text;
  std::optional<std::string> text_span;  // absent: one record per sentence
};

struct DatagenRecord {
  std::string full_text;
  std::string text_span;
  std::vector<Triplet> triplets;
  PromptBundle prompt;
  std::optional<std::string> response;
};

// Prompts for span-level attribution labeling. Evidence comes from the
// entities of the whole text so multi-entity paths are available per span.
inline std::vector<DatagenRecord> build_datagen_records(const KnowledgeGraph& kg, const DatagenItem& item,
                                                        const RetrievalConfig& cfg = {}) {
  const auto entities = link_entities(kg, item.full_text);
  const auto retrieved = retrieve(kg, detail::seeds_of(entities), cfg);
  std::vector<std::string> spans;
  if (item.text_span) {
    spans.push_back(*item.text_span);
  } else {
    std::size_t begin = 0;
    for (auto end : detail::sentence_ends(item.full_text)) {
      auto s = text::trim(std::string_view(item.full_text).substr(begin, end - begin));
      if (!s.empty()) spans.emplace_back(s);
      begin = end;
    }
  }
  std::vector<DatagenRecord> out;
  for (auto& span : spans) {
    DatagenRecord r;
    r.full_text = item.full_text;
    r.prompt = build_datagen_prompt(item.full_text, span, retrieved.triplets);
    r.text_span = std::move(span);
    r.triplets = retrieved.triplets;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace claimver
