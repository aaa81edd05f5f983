#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "claimver/kg_store.hpp"
#include "claimver/text.hpp"

namespace claimver {

struct LinkedEntity {
  std::string mention;
  std::size_t start = 0;  // byte offset into the linked text
  std::size_t end = 0;    // exclusive
  NodeId node;
  std::vector<NodeId> alternates;  // other nodes sharing the matched label

  bool operator==(const LinkedEntity&) const = default;
};

struct TextChunk {
  std::string text;
  std::size_t offset = 0;
  bool oversize = false;  // exceeds the budget because a single character does

  bool operator==(const TextChunk&) const = default;
};

// Leftmost-longest dictionary matcher over the graph's label index. Keys are
// stored in normalized form; the text is folded on the fly so reported
// offsets refer to the original bytes.
class EntityLinker {
 public:
  explicit EntityLinker(const KnowledgeGraph& kg) : kg_(&kg) {
    nodes_.push_back({});
    for (const auto& [key, ids] : kg.label_index()) {
      if (key.empty()) continue;
      std::uint32_t state = 0;
      for (unsigned char ch : key) state = child_or_insert(state, ch);
      nodes_[state].entry = static_cast<std::int64_t>(entries_.size());
      entries_.push_back(&ids);
    }
  }

  std::vector<LinkedEntity> link(std::string_view text) const {
    std::vector<LinkedEntity> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
      const auto c = text::decode_at(text, pos);
      if (text::is_space(c.cp) || !starts_word(text, pos, c.cp)) {
        pos += c.len;
        continue;
      }
      auto [end, entry] = longest_match(text, pos);
      if (entry < 0) {
        pos += c.len;
        continue;
      }
      const auto& ids = *entries_[static_cast<std::size_t>(entry)];
      LinkedEntity e;
      e.mention = std::string(text.substr(pos, end - pos));
      e.start = pos;
      e.end = end;
      e.node = ids.front();
      e.alternates.assign(ids.begin() + 1, ids.end());
      out.push_back(std::move(e));
      pos = end;
    }
    return out;
  }

  const KnowledgeGraph& graph() const { return *kg_; }

 private:
  struct TrieNode {
    std::int64_t entry = -1;
  };

  static std::uint64_t edge_key(std::uint32_t state, unsigned char ch) {
    return (static_cast<std::uint64_t>(state) << 8) | ch;
  }

  std::uint32_t child_or_insert(std::uint32_t state, unsigned char ch) {
    auto [it, inserted] = edges_.try_emplace(edge_key(state, ch), static_cast<std::uint32_t>(nodes_.size()));
    if (inserted) nodes_.push_back({});
    return it->second;
  }

  bool step(std::uint32_t& state, unsigned char ch) const {
    auto it = edges_.find(edge_key(state, ch));
    if (it == edges_.end()) return false;
    state = it->second;
    return true;
  }

  static bool starts_word(std::string_view text, std::size_t pos, char32_t cp) {
    if (pos == 0 || !text::is_word(cp)) return true;
    // Previous code point: walk back over continuation bytes.
    std::size_t p = pos - 1;
    while (p > 0 && (static_cast<unsigned char>(text[p]) & 0xC0) == 0x80) --p;
    return !text::is_word(text::decode_at(text, p).cp);
  }

  static bool ends_word(std::string_view text, std::size_t end, char32_t last) {
    if (end >= text.size() || !text::is_word(last)) return true;
    return !text::is_word(text::decode_at(text, end).cp);
  }

  // Returns (end offset, entry) of the longest boundary-aligned match at pos.
  std::pair<std::size_t, std::int64_t> longest_match(std::string_view text, std::size_t pos) const {
    std::uint32_t state = 0;
    std::size_t best_end = pos;
    std::int64_t best = -1;
    std::size_t i = pos;
    while (i < text.size()) {
      auto c = text::decode_at(text, i);
      if (text::is_space(c.cp)) {
        while (i < text.size() && text::is_space(c.cp)) {
          i += c.len;
          if (i < text.size()) c = text::decode_at(text, i);
        }
        if (i >= text.size() || !step(state, ' ')) break;
        continue;
      }
      std::string folded;
      if (c.len == 1 && c.cp >= 0x80) {
        folded.push_back(text[i]);
      } else {
        text::append_utf8(folded, text::fold(c.cp));
      }
      bool ok = true;
      for (unsigned char ch : folded) {
        if (!step(state, ch)) {
          ok = false;
          break;
        }
      }
      if (!ok) break;
      i += c.len;
      if (nodes_[state].entry >= 0 && ends_word(text, i, c.cp)) {
        best_end = i;
        best = nodes_[state].entry;
      }
    }
    return {best_end, best};
  }

  const KnowledgeGraph* kg_;
  std::vector<TrieNode> nodes_;
  std::unordered_map<std::uint64_t, std::uint32_t> edges_;
  std::vector<const std::vector<NodeId>*> entries_;
};

// Non-overlapping mentions sorted by start. Ambiguous labels resolve to the
// smallest node id; the rest are kept as alternates.
inline std::vector<LinkedEntity> link_entities(const KnowledgeGraph& kg, std::string_view text) {
  return EntityLinker(kg).link(text);
}

namespace detail {

// Sentence ends after [.?!] when followed by whitespace and an uppercase
// letter, or by optional whitespace and the end of text. The trailing
// whitespace belongs to the sentence it follows.
inline std::vector<std::size_t> sentence_ends(std::string_view s) {
  std::vector<std::size_t> ends;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char ch = s[i];
    if (ch != '.' && ch != '?' && ch != '!') continue;
    std::size_t j = i + 1;
    while (j < s.size()) {
      const auto c = text::decode_at(s, j);
      if (!text::is_space(c.cp)) break;
      j += c.len;
    }
    if (j == s.size()) {
      ends.push_back(j);
      break;
    }
    if (j > i + 1) {
      const auto next = text::decode_at(s, j).cp;
      if (text::fold(next) != next) {
        ends.push_back(j);
        i = j - 1;
      }
    }
  }
  if (ends.empty() || ends.back() != s.size()) ends.push_back(s.size());
  return ends;
}

// Largest cut <= limit that falls on a code point boundary, preferring the
// end of a whitespace run.
inline std::size_t hard_cut(std::string_view s, std::size_t begin, std::size_t limit) {
  std::size_t last_boundary = begin;
  std::size_t last_space_end = begin;
  for (std::size_t i = begin; i < limit;) {
    const auto c = text::decode_at(s, i);
    if (i + c.len > limit) break;
    i += c.len;
    last_boundary = i;
    if (text::is_space(c.cp)) last_space_end = i;
  }
  if (last_space_end > begin && last_boundary < s.size()) return last_space_end;
  if (last_boundary > begin) return last_boundary;
  return begin + text::decode_at(s, begin).len;  // one character wider than the budget
}

}  // namespace detail

// Splits on sentence boundaries, packing whole sentences up to `budget` bytes;
// an oversize sentence is hard-split. Concatenating the chunks restores text.
inline std::vector<TextChunk> chunk_text(std::string_view text, std::size_t budget) {
  if (budget < 1) throw std::invalid_argument("chunk budget must be >= 1");
  std::vector<TextChunk> chunks;
  if (text.empty()) return chunks;

  std::size_t chunk_begin = 0;
  std::size_t chunk_end = 0;
  auto flush = [&](std::size_t end) {
    if (end <= chunk_begin) return;
    chunks.push_back({std::string(text.substr(chunk_begin, end - chunk_begin)), chunk_begin, end - chunk_begin > budget});
    chunk_begin = end;
  };

  std::size_t sentence_begin = 0;
  for (std::size_t sentence_end : detail::sentence_ends(text)) {
    if (sentence_end - chunk_begin <= budget) {
      chunk_end = sentence_end;
      sentence_begin = sentence_end;
      continue;
    }
    flush(chunk_end);
    while (sentence_end - sentence_begin > budget) {
      const auto cut = detail::hard_cut(text, sentence_begin, sentence_begin + budget);
      flush(cut);
      sentence_begin = cut;
    }
    chunk_end = sentence_end;
    sentence_begin = sentence_end;
  }
  flush(chunk_end);
  return chunks;
}

// A text rewrite applied before linking (e.g. coreference resolution).
// Throwing aborts preprocessing.
using TextHook = std::function<std::string(std::string_view)>;

class PreprocessError : public std::runtime_error {
 public:
  PreprocessError(std::size_t hook_index, const std::string& message)
      : std::runtime_error("preprocessing hook #" + std::to_string(hook_index) + " failed: " + message),
        hook_index_(hook_index) {}

  std::size_t hook_index() const { return hook_index_; }

 private:
  std::size_t hook_index_;
};

struct PreprocessResult {
  std::string text;
  std::vector<LinkedEntity> entities;
};

inline PreprocessResult preprocess(const KnowledgeGraph& kg, std::string_view text,
                                   const std::vector<TextHook>& hooks = {}) {
  std::string current(text);
  for (std::size_t i = 0; i < hooks.size(); ++i) {
    try {
      current = hooks[i](current);
    } catch (const std::exception& e) {
      throw PreprocessError(i, e.what());
    }
  }
  auto entities = link_entities(kg, current);
  return {std::move(current), std::move(entities)};
}

}  // namespace claimver
