#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "claimver/kg_store.hpp"
#include "claimver/retrieval.hpp"
#include "claimver/text.hpp"

namespace claimver {

enum class PredictionLabel { Attributable, Extrapolatory, Contradictory, NoAttribution };

inline std::string_view to_string(PredictionLabel p) {
  switch (p) {
    case PredictionLabel::Attributable:
      return "Attributable";
    case PredictionLabel::Extrapolatory:
      return "Extrapolatory";
    case PredictionLabel::Contradictory:
      return "Contradictory";
    case PredictionLabel::NoAttribution:
      return "NoAttribution";
  }
  return "NoAttribution";
}

// Model-facing labels only; NoAttribution is never accepted from model output.
inline std::optional<PredictionLabel> parse_prediction(std::string_view raw) {
  std::string s;
  for (char ch : text::trim(raw)) {
    if (ch == '"' || ch == '\'' || ch == '.' || ch == '*') continue;
    s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  s = std::string(text::trim(s));
  if (s == "attributable") return PredictionLabel::Attributable;
  if (s == "extrapolatory") return PredictionLabel::Extrapolatory;
  if (s == "contradictory") return PredictionLabel::Contradictory;
  return std::nullopt;
}

// Report (de)serialization of a label, including NoAttribution.
inline std::optional<PredictionLabel> label_from_string(std::string_view s) {
  if (s == "NoAttribution") return PredictionLabel::NoAttribution;
  return parse_prediction(s);
}

struct RawClaim {
  int index = 0;  // 1-based
  std::string text_span;
  std::string prediction;
  std::string triplets_field;
  std::string rationale;

  bool operator==(const RawClaim&) const = default;
};

struct IncompleteGroup {
  int index = 0;
  std::vector<std::string> missing_keys;
};

struct ParseResult {
  std::vector<RawClaim> claims;  // complete groups, by index
  std::vector<IncompleteGroup> incomplete;
  std::vector<std::string> diagnostics;
};

class ResponseParseError : public std::runtime_error {
 public:
  explicit ResponseParseError(std::string raw)
      : std::runtime_error("no complete claim groups in model response"), raw_(std::move(raw)) {}

  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

namespace detail {

inline constexpr std::array<std::string_view, 4> kClaimKeys = {"text_span", "prediction", "triplets", "rationale"};

inline bool key_boundary_before(std::string_view s, std::size_t pos) {
  if (pos == 0) return true;
  const char c = s[pos - 1];
  return c == '"' || c == '\'' || c == '{' || c == ',' || c == '-' || c == '*' ||
         std::isspace(static_cast<unsigned char>(c));
}

// Reads a double-quoted string starting at s[pos] == '"'. Returns decoded text
// and the offset just past the closing quote; unterminated strings run to the
// end of the line.
inline std::pair<std::string, std::size_t> read_quoted(std::string_view s, std::size_t pos,
                                                       std::vector<std::string>& diags) {
  std::size_t i = pos + 1;
  while (i < s.size() && s[i] != '"') {
    if (s[i] == '\\' && i + 1 < s.size()) ++i;
    ++i;
  }
  if (i >= s.size()) {
    diags.push_back("unterminated string value");
    auto eol = s.find('\n', pos);
    if (eol == std::string_view::npos) eol = s.size();
    return {std::string(text::trim(s.substr(pos + 1, eol - pos - 1))), eol};
  }
  const auto literal = s.substr(pos, i - pos + 1);
  try {
    return {nlohmann::json::parse(literal).get<std::string>(), i + 1};
  } catch (const nlohmann::json::exception&) {
    diags.push_back("string value with invalid escapes kept verbatim");
    return {std::string(literal.substr(1, literal.size() - 2)), i + 1};
  }
}

// Reads a bracketed value ([...]) verbatim, honoring nested brackets and quotes.
inline std::pair<std::string, std::size_t> read_bracketed(std::string_view s, std::size_t pos) {
  int depth = 0;
  bool in_quote = false;
  for (std::size_t i = pos; i < s.size(); ++i) {
    const char c = s[i];
    if (in_quote) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_quote = false;
      }
      continue;
    }
    if (c == '"') {
      in_quote = true;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']' && --depth == 0) {
      return {std::string(s.substr(pos, i - pos + 1)), i + 1};
    }
  }
  auto eol = s.find('\n', pos);
  if (eol == std::string_view::npos) eol = s.size();
  return {std::string(text::trim(s.substr(pos, eol - pos))), eol};
}

inline std::pair<std::string, std::size_t> read_bare(std::string_view s, std::size_t pos) {
  auto eol = s.find('\n', pos);
  if (eol == std::string_view::npos) eol = s.size();
  auto v = text::trim(s.substr(pos, eol - pos));
  while (!v.empty() && (v.back() == ',' || v.back() == '}')) v = text::trim(v.substr(0, v.size() - 1));
  return {std::string(v), eol};
}

struct KeyHit {
  std::size_t key;  // into kClaimKeys
  int index;        // 0 = unnumbered
  std::size_t value_pos;
};

// Finds the next "<key><digits>"? : at or after pos.
inline std::optional<std::pair<std::size_t, KeyHit>> next_key(std::string_view s, std::string_view lower,
                                                              std::size_t pos) {
  while (pos < s.size()) {
    std::size_t best = std::string_view::npos;
    std::size_t best_key = 0;
    for (std::size_t k = 0; k < kClaimKeys.size(); ++k) {
      const auto at = lower.find(kClaimKeys[k], pos);
      if (at < best) {
        best = at;
        best_key = k;
      }
    }
    if (best == std::string_view::npos) return std::nullopt;
    std::size_t i = best + kClaimKeys[best_key].size();
    int index = 0;
    std::size_t digits = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])) && digits < 6) {
      index = index * 10 + (s[i] - '0');
      ++i;
      ++digits;
    }
    if (i < s.size() && (s[i] == '"' || s[i] == '\'' || s[i] == '*')) ++i;
    if (i < s.size() && s[i] == '*') ++i;
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const bool is_key = key_boundary_before(s, best) && i < s.size() && s[i] == ':' && (digits == 0 || index > 0);
    if (is_key) {
      ++i;
      while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
      return std::pair{best, KeyHit{best_key, index, i}};
    }
    pos = best + 1;
  }
  return std::nullopt;
}

}  // namespace detail

// Extracts numbered text_spanN / predictionN / tripletsN / rationaleN groups.
// Tolerates surrounding braces, quoting styles and trailing commas.
// Unnumbered keys count as group 1. Throws ResponseParseError when no group
// has all four keys.
inline ParseResult parse_response(std::string_view raw) {
  ParseResult out;
  std::string lower(raw);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

  struct Group {
    std::array<std::optional<std::string>, 4> fields;
    std::vector<std::size_t> order;
  };
  std::map<int, Group> groups;
  std::size_t pos = 0;
  while (auto hit = detail::next_key(raw, lower, pos)) {
    const auto& key = hit->second;
    std::pair<std::string, std::size_t> value;
    const std::size_t vp = key.value_pos;
    if (vp < raw.size() && raw[vp] == '"') {
      value = detail::read_quoted(raw, vp, out.diagnostics);
    } else if (vp < raw.size() && raw[vp] == '[') {
      value = detail::read_bracketed(raw, vp);
    } else {
      value = detail::read_bare(raw, vp);
      // Several bare pairs on one line: stop at the next key.
      if (auto next = detail::next_key(raw, lower, vp); next && next->first < value.second) {
        std::size_t cut = next->first;
        while (cut > vp && std::string_view("\"'*-,; \t").find(raw[cut - 1]) != std::string_view::npos) --cut;
        value = {std::string(text::trim(raw.substr(vp, cut - vp))), cut};
      }
    }
    pos = std::max(value.second, vp + 1);

    const int index = key.index == 0 ? 1 : key.index;
    auto& g = groups[index];
    const auto name = std::string(detail::kClaimKeys[key.key]) + std::to_string(index);
    if (g.fields[key.key]) {
      out.diagnostics.push_back("duplicate key \"" + name + "\", first value kept");
      continue;
    }
    g.fields[key.key] = std::move(value.first);
    g.order.push_back(key.key);
  }

  for (auto& [index, g] : groups) {
    IncompleteGroup missing{index, {}};
    for (std::size_t k = 0; k < 4; ++k) {
      if (!g.fields[k]) missing.missing_keys.push_back(std::string(detail::kClaimKeys[k]) + std::to_string(index));
    }
    if (!missing.missing_keys.empty()) {
      std::string msg = "claim " + std::to_string(index) + " incomplete, missing";
      for (const auto& m : missing.missing_keys) msg += " " + m;
      out.diagnostics.push_back(std::move(msg));
      out.incomplete.push_back(std::move(missing));
      continue;
    }
    if (!std::is_sorted(g.order.begin(), g.order.end())) {
      out.diagnostics.push_back("claim " + std::to_string(index) + " keys out of order");
    }
    out.claims.push_back({index, std::move(*g.fields[0]), std::move(*g.fields[1]), std::move(*g.fields[2]),
                          std::move(*g.fields[3])});
  }
  if (out.claims.empty()) throw ResponseParseError(std::string(raw));
  return out;
}

// Renders claims in the numbered key/value shape the instruction prompt asks for.
inline std::string render_response(const std::vector<RawClaim>& claims) {
  std::string out = "{\n";
  for (std::size_t i = 0; i < claims.size(); ++i) {
    const auto& c = claims[i];
    const auto n = std::to_string(c.index);
    auto line = [&out, &n](std::string_view key, const std::string& value, bool last) {
      out += "\"" + std::string(key) + n + "\": " + nlohmann::json(value).dump() + (last ? "\n" : ",\n");
    };
    const bool last = i + 1 == claims.size();
    line("text_span", c.text_span, false);
    line("prediction", c.prediction, false);
    line("triplets", c.triplets_field, false);
    line("rationale", c.rationale, last);
  }
  out += "}";
  return out;
}

struct ClaimResult {
  int index = 0;
  std::string span;
  std::optional<std::size_t> start;
  std::optional<std::size_t> end;
  PredictionLabel prediction = PredictionLabel::NoAttribution;
  std::vector<Triplet> rel_triplets;
  std::string rationale;
  std::vector<std::string> diagnostics;

  bool located() const { return start.has_value(); }
  bool operator==(const ClaimResult&) const = default;
};

namespace detail {

inline bool is_na(std::string_view s) {
  auto t = text::trim(s);
  while (!t.empty() && (t.front() == '"' || t.front() == '\'' || t.front() == '[')) t.remove_prefix(1);
  while (!t.empty() && (t.back() == '"' || t.back() == '\'' || t.back() == ']' || t.back() == '.')) t.remove_suffix(1);
  t = text::trim(t);
  if (t.empty()) return true;
  std::string l;
  for (char c : t) l.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return l == "na" || l == "n/a" || l == "none";
}

inline std::string strip_quotes(std::string_view s) {
  auto t = text::trim(s);
  while (t.size() >= 1 && (t.front() == '"' || t.front() == '\'' || t.front() == '`')) t.remove_prefix(1);
  while (t.size() >= 1 && (t.back() == '"' || t.back() == '\'' || t.back() == '`')) t.remove_suffix(1);
  return std::string(text::trim(t));
}

// Splits on `sep` outside double quotes.
inline std::vector<std::string> split_outside_quotes(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  bool in_quote = false;
  for (char c : s) {
    if (c == '"') in_quote = !in_quote;
    if (c == sep && !in_quote) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

// Candidate (s, p, o) readings of one triplet item. More than three comma
// parts yield every contiguous regrouping so labels containing commas can
// still match.
inline std::vector<CandidateTriplet> candidate_readings(std::string_view item) {
  std::vector<CandidateTriplet> out;
  auto body = text::trim(item);
  while (!body.empty() && (body.back() == ',' || body.back() == ';')) body = text::trim(body.substr(0, body.size() - 1));
  if (body.size() >= 2 && ((body.front() == '(' && body.back() == ')') || (body.front() == '[' && body.back() == ']'))) {
    body = body.substr(1, body.size() - 2);
  }
  std::vector<std::string> parts = split_outside_quotes(body, '|');
  if (parts.size() != 3) parts = split_outside_quotes(body, ',');
  for (auto& p : parts) p = strip_quotes(p);
  if (parts.size() < 3) return out;
  if (parts.size() == 3) {
    out.push_back({parts[0], parts[1], parts[2]});
    return out;
  }
  auto join = [&parts](std::size_t b, std::size_t e) {
    std::string s;
    for (std::size_t i = b; i < e; ++i) {
      if (i > b) s += ", ";
      s += parts[i];
    }
    return s;
  };
  for (std::size_t i = 1; i + 1 < parts.size(); ++i) {
    for (std::size_t j = i + 1; j < parts.size(); ++j) out.push_back({join(0, i), join(i, j), join(j, parts.size())});
  }
  return out;
}

// Breaks a triplets field into items: parenthesized or bracketed groups when
// present, otherwise one item per line (or per ';').
inline std::vector<std::string> triplet_items(std::string_view field) {
  std::vector<std::string> items;
  std::string_view inner = text::trim(field);
  if (inner.size() >= 2 && inner.front() == '[' && inner.back() == ']') inner = inner.substr(1, inner.size() - 2);
  auto collect_groups = [&items, inner](char open, char close) {
    bool in_quote = false;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < inner.size(); ++i) {
      const char c = inner[i];
      if (c == '"') in_quote = !in_quote;
      if (in_quote) continue;
      if (c == open && depth++ == 0) start = i;
      if (c == close && depth > 0 && --depth == 0) items.emplace_back(inner.substr(start, i - start + 1));
    }
  };
  if (inner.find('(') != std::string_view::npos) {
    collect_groups('(', ')');
    if (!items.empty()) return items;
  }
  if (inner.find('[') != std::string_view::npos) {
    collect_groups('[', ']');
    if (!items.empty()) return items;
  }
  for (auto line : text::split(inner, '\n')) {
    for (auto piece : text::split(line, ';')) {
      auto t = text::trim(piece);
      while (!t.empty() && (t.front() == '-' || t.front() == '*')) t = text::trim(t.substr(1));
      if (!t.empty() && !is_na(t)) items.emplace_back(t);
    }
  }
  return items;
}

inline const std::vector<std::string_view>& stop_words() {
  static const std::vector<std::string_view> words = {
      "a",    "an",   "the",  "of",   "in",  "on",   "at",   "to",    "for",  "by",   "with", "from",
      "and",  "or",   "is",   "was",  "are", "were", "be",   "been",  "as",   "that", "this", "it",
      "its",  "his",  "her",  "their", "has", "had", "have", "which", "who",  "also", "into", "than"};
  return words;
}

inline bool is_stop_word(std::string_view w) {
  const auto& sw = stop_words();
  return std::find(sw.begin(), sw.end(), w) != sw.end();
}

enum class SpanMatch { exact, normalized, stopword_gap, none };

struct SpanLocation {
  SpanMatch match = SpanMatch::none;
  std::size_t start = 0;
  std::size_t end = 0;
};

// Exact substring, then case/whitespace-normalized substring, then an in-order
// token alignment where the input may contain extra stop words the span lacks.
inline SpanLocation locate_span(std::string_view input, std::string_view span) {
  if (text::trim(span).empty()) return {};
  if (auto at = input.find(span); at != std::string_view::npos) return {SpanMatch::exact, at, at + span.size()};

  const auto norm_input = text::normalize_with_map(input);
  const auto norm_span = text::normalize(span);
  if (!norm_span.empty()) {
    if (auto at = norm_input.text.find(norm_span); at != std::string::npos) {
      auto [b, e] = norm_input.source_range(at, at + norm_span.size());
      return {SpanMatch::normalized, b, e};
    }
  }

  const auto in_tokens = text::tokenize_words(input);
  const auto span_tokens = text::tokenize_words(span);
  if (span_tokens.empty()) return {};
  for (std::size_t s = 0; s < in_tokens.size(); ++s) {
    if (in_tokens[s].norm != span_tokens[0].norm) continue;
    std::size_t i = s + 1;
    std::size_t k = 1;
    while (k < span_tokens.size() && i < in_tokens.size()) {
      if (in_tokens[i].norm == span_tokens[k].norm) {
        ++k;
        ++i;
      } else if (is_stop_word(in_tokens[i].norm)) {
        ++i;
      } else {
        break;
      }
    }
    if (k == span_tokens.size()) return {SpanMatch::stopword_gap, in_tokens[s].begin, in_tokens[i - 1].end};
  }
  return {};
}

inline std::optional<Triplet> match_retrieved(const RetrievedTriplets& retrieved, const CandidateTriplet& c) {
  const auto s = text::normalize(c.subject_label);
  const auto p = text::normalize(c.predicate);
  const auto o = text::normalize(c.object_label);
  for (const auto& t : retrieved.triplets) {
    if (text::normalize(t.subject_label) == s && text::normalize(t.predicate) == p &&
        text::normalize(t.object_label) == o) {
      return t;
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Locates spans, checks triplet membership and maps labels. Never throws on
// model content: every problem becomes a diagnostic on the claim, and claims
// that cannot be verified drop to NoAttribution.
inline std::vector<ClaimResult> validate_claims(const std::vector<RawClaim>& raws, std::string_view input_text,
                                                const RetrievedTriplets& retrieved, const KnowledgeGraph& kg) {
  std::vector<ClaimResult> out;
  out.reserve(raws.size());
  for (const auto& raw : raws) {
    ClaimResult c;
    c.index = raw.index;
    c.span = raw.text_span;
    c.rationale = raw.rationale;
    bool span_ok = false;

    if (detail::is_na(raw.text_span)) {
      c.diagnostics.push_back("text span missing (\"NA\")");
    } else {
      const auto loc = detail::locate_span(input_text, raw.text_span);
      switch (loc.match) {
        case detail::SpanMatch::exact:
          span_ok = true;
          break;
        case detail::SpanMatch::normalized:
          span_ok = true;
          c.diagnostics.push_back("span located only after case/whitespace normalization");
          break;
        case detail::SpanMatch::stopword_gap:
          c.diagnostics.push_back("span omits words of the input text");
          break;
        case detail::SpanMatch::none:
          c.diagnostics.push_back("span not found in input text");
          break;
      }
      if (loc.match != detail::SpanMatch::none) {
        c.start = loc.start;
        c.end = loc.end;
      }
    }

    std::set<Triplet> kept;
    if (!detail::is_na(raw.triplets_field)) {
      for (const auto& item : detail::triplet_items(raw.triplets_field)) {
        const auto readings = detail::candidate_readings(item);
        if (readings.empty()) {
          c.diagnostics.push_back("unparseable triplet: " + item);
          continue;
        }
        std::optional<Triplet> found;
        bool from_kg = false;
        for (const auto& r : readings) {
          if ((found = detail::match_retrieved(retrieved, r))) break;
        }
        if (!found) {
          for (const auto& r : readings) {
            if ((found = kg.contains_triplet(r))) {
              from_kg = true;
              break;
            }
          }
        }
        if (!found) {
          c.diagnostics.push_back("triplet not in retrieved set or KG, dropped: " + item);
          continue;
        }
        if (from_kg) c.diagnostics.push_back("triplet found in KG but not among retrieved triplets: " + found->to_string());
        if (kept.insert(*found).second) c.rel_triplets.push_back(*found);
      }
    }

    const auto label = parse_prediction(raw.prediction);
    if (!label) {
      c.diagnostics.push_back("unparseable prediction \"" + raw.prediction + "\"");
      c.prediction = PredictionLabel::NoAttribution;
    } else if (!span_ok) {
      c.prediction = PredictionLabel::NoAttribution;
    } else {
      c.prediction = *label;
      if ((*label == PredictionLabel::Attributable || *label == PredictionLabel::Contradictory) &&
          c.rel_triplets.empty()) {
        c.diagnostics.push_back(std::string(to_string(*label)) + " claim has no validated triplets; downgraded to NoAttribution");
        c.prediction = PredictionLabel::NoAttribution;
      }
    }

    if (c.start) {
      for (const auto& prev : out) {
        if (prev.start && *prev.start < *c.end && *c.start < *prev.end) {
          c.diagnostics.push_back("span overlaps claim " + std::to_string(prev.index));
        }
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace claimver
