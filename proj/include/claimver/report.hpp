#pragma once

#include <algorithm>
#include <cstdio>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "claimver/entity_linker.hpp"
#include "claimver/retrieval.hpp"
#include "claimver/scoring.hpp"

namespace claimver {

struct ReportEntity {
  LinkedEntity entity;
  std::string label;
  std::string description;

  bool operator==(const ReportEntity&) const = default;
};

struct ConfigEcho {
  ScoringConfig scoring;
  RetrievalConfig retrieval;
  std::size_t chunk_chars = 0;  // 0 = unchunked

  bool operator==(const ConfigEcho&) const = default;
};

struct VerificationReport {
  std::string input_text;
  std::vector<ReportEntity> entities;
  RetrievedTriplets retrieved;
  std::vector<ScoredClaim> claims;
  std::size_t n = 0;
  double kas = 0.5;
  ConfigEcho config;
  std::vector<std::string> diagnostics;

  bool operator==(const VerificationReport&) const = default;
};

namespace detail {

using nlohmann::json;

inline json triplet_json(const Triplet& t) {
  return {{"subject", t.subject.value},
          {"subject_label", t.subject_label},
          {"predicate", t.predicate},
          {"object", t.object.value},
          {"object_label", t.object_label}};
}

inline Triplet triplet_from(const json& j) {
  return {NodeId(j.at("subject").get<std::string>()), j.at("predicate").get<std::string>(),
          NodeId(j.at("object").get<std::string>()), j.at("subject_label").get<std::string>(),
          j.at("object_label").get<std::string>()};
}

inline json ids_json(const std::vector<NodeId>& ids) {
  json a = json::array();
  for (const auto& id : ids) a.push_back(id.value);
  return a;
}

inline std::vector<NodeId> ids_from(const json& j) {
  std::vector<NodeId> out;
  for (const auto& v : j) out.emplace_back(v.get<std::string>());
  return out;
}

inline json optional_offset(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

inline std::optional<std::size_t> offset_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::size_t>();
}

}  // namespace detail

inline nlohmann::json to_json(const VerificationReport& r) {
  using nlohmann::json;
  json entities = json::array();
  for (const auto& e : r.entities) {
    entities.push_back({{"mention", e.entity.mention},
                        {"start", e.entity.start},
                        {"end", e.entity.end},
                        {"node", e.entity.node.value},
                        {"alternates", detail::ids_json(e.entity.alternates)},
                        {"label", e.label},
                        {"description", e.description}});
  }
  json triplets = json::array();
  for (const auto& t : r.retrieved.triplets) triplets.push_back(detail::triplet_json(t));
  json paths = json::array();
  for (const auto& p : r.retrieved.paths) {
    json edges = json::array();
    for (const auto& t : p.edges) edges.push_back(detail::triplet_json(t));
    paths.push_back({{"endpoints", {p.endpoints.first.value, p.endpoints.second.value}},
                     {"nodes", detail::ids_json(p.nodes)},
                     {"edges", std::move(edges)}});
  }
  json claims = json::array();
  for (const auto& c : r.claims) {
    json ts = json::array();
    for (const auto& t : c.claim.rel_triplets) ts.push_back(detail::triplet_json(t));
    claims.push_back({{"index", c.claim.index},
                      {"span", c.claim.span},
                      {"start", detail::optional_offset(c.claim.start)},
                      {"end", detail::optional_offset(c.claim.end)},
                      {"prediction", std::string(to_string(c.claim.prediction))},
                      {"triplets", std::move(ts)},
                      {"rationale", c.claim.rationale},
                      {"ss", c.ss},
                      {"epr", c.epr},
                      {"tms", c.tms},
                      {"claim_score", c.cs.value()},
                      {"diagnostics", c.claim.diagnostics}});
  }
  return {{"input_text", r.input_text},
          {"entities", std::move(entities)},
          {"retrieved_triplets", std::move(triplets)},
          {"retrieved_paths", std::move(paths)},
          {"claims", std::move(claims)},
          {"n", r.n},
          {"kas", r.kas},
          {"config",
           {{"alpha", r.config.scoring.alpha},
            {"beta", r.config.scoring.beta},
            {"gamma_neg", r.config.scoring.gamma_neg},
            {"gamma_pos", r.config.scoring.gamma_pos},
            {"max_hops", r.config.retrieval.max_hops},
            {"max_paths", r.config.retrieval.max_paths_per_pair},
            {"chunk_chars", r.config.chunk_chars}}},
          {"diagnostics", r.diagnostics}};
}

inline VerificationReport report_from_json(const nlohmann::json& j) {
  VerificationReport r;
  r.input_text = j.at("input_text").get<std::string>();
  for (const auto& e : j.at("entities")) {
    ReportEntity re;
    re.entity.mention = e.at("mention").get<std::string>();
    re.entity.start = e.at("start").get<std::size_t>();
    re.entity.end = e.at("end").get<std::size_t>();
    re.entity.node = NodeId(e.at("node").get<std::string>());
    re.entity.alternates = detail::ids_from(e.at("alternates"));
    re.label = e.at("label").get<std::string>();
    re.description = e.at("description").get<std::string>();
    r.entities.push_back(std::move(re));
  }
  for (const auto& t : j.at("retrieved_triplets")) r.retrieved.triplets.push_back(detail::triplet_from(t));
  if (j.contains("retrieved_paths")) {
    for (const auto& p : j.at("retrieved_paths")) {
      KgPath path;
      path.endpoints = {NodeId(p.at("endpoints").at(0).get<std::string>()),
                        NodeId(p.at("endpoints").at(1).get<std::string>())};
      path.nodes = detail::ids_from(p.at("nodes"));
      for (const auto& t : p.at("edges")) path.edges.push_back(detail::triplet_from(t));
      r.retrieved.paths.push_back(std::move(path));
    }
  }
  for (const auto& c : j.at("claims")) {
    ScoredClaim sc;
    sc.claim.index = c.at("index").get<int>();
    sc.claim.span = c.at("span").get<std::string>();
    sc.claim.start = detail::offset_from(c.at("start"));
    sc.claim.end = detail::offset_from(c.at("end"));
    const auto label = label_from_string(c.at("prediction").get<std::string>());
    if (!label) throw std::invalid_argument("unknown prediction label in report");
    sc.claim.prediction = *label;
    for (const auto& t : c.at("triplets")) sc.claim.rel_triplets.push_back(detail::triplet_from(t));
    sc.claim.rationale = c.at("rationale").get<std::string>();
    sc.claim.diagnostics = c.at("diagnostics").get<std::vector<std::string>>();
    sc.ss = c.at("ss").get<double>();
    sc.epr = c.at("epr").get<double>();
    sc.tms = c.at("tms").get<double>();
    sc.cs = ClaimScore(c.at("claim_score").get<int>());
    r.claims.push_back(std::move(sc));
  }
  r.n = j.at("n").get<std::size_t>();
  r.kas = j.at("kas").get<double>();
  const auto& cfg = j.at("config");
  r.config.scoring = {cfg.at("alpha").get<double>(), cfg.at("beta").get<double>(), cfg.at("gamma_neg").get<double>(),
                      cfg.at("gamma_pos").get<double>()};
  r.config.retrieval = {cfg.at("max_hops").get<int>(), cfg.at("max_paths").get<int>()};
  r.config.chunk_chars = cfg.at("chunk_chars").get<std::size_t>();
  r.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
  return r;
}

enum class RenderFormat { json, ansi, html };

inline RenderFormat parse_render_format(std::string_view s) {
  if (s == "json") return RenderFormat::json;
  if (s == "ansi") return RenderFormat::ansi;
  if (s == "html") return RenderFormat::html;
  throw std::invalid_argument("unknown output format '" + std::string(s) + "'");
}

namespace detail {

// Maximal runs of the text, each tagged with the claim (position in the
// report) whose color applies there: the latest claim covering it, or -1.
struct Segment {
  std::size_t begin;
  std::size_t end;
  int claim;
};

inline std::vector<Segment> color_segments(const VerificationReport& r) {
  std::vector<std::size_t> cuts{0, r.input_text.size()};
  for (const auto& c : r.claims) {
    if (!c.claim.located()) continue;
    cuts.push_back(std::min(*c.claim.start, r.input_text.size()));
    cuts.push_back(std::min(*c.claim.end, r.input_text.size()));
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<Segment> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    int top = -1;
    for (std::size_t k = 0; k < r.claims.size(); ++k) {
      const auto& c = r.claims[k].claim;
      if (c.located() && *c.start <= cuts[i] && cuts[i + 1] <= *c.end) top = static_cast<int>(k);
    }
    if (!out.empty() && out.back().claim == top) {
      out.back().end = cuts[i + 1];
    } else {
      out.push_back({cuts[i], cuts[i + 1], top});
    }
  }
  return out;
}

// Index of the earlier claim this claim overlaps, if any.
inline std::optional<std::size_t> overlapped_by_earlier(const VerificationReport& r, std::size_t k) {
  const auto& c = r.claims[k].claim;
  if (!c.located()) return std::nullopt;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& p = r.claims[i].claim;
    if (p.located() && *p.start < *c.end && *c.start < *p.end) return i;
  }
  return std::nullopt;
}

inline std::string_view ansi_color(PredictionLabel p) {
  switch (p) {
    case PredictionLabel::Attributable:
      return "\x1b[32m";
    case PredictionLabel::Extrapolatory:
      return "\x1b[33m";
    case PredictionLabel::Contradictory:
      return "\x1b[31m";
    case PredictionLabel::NoAttribution:
      return "\x1b[90m";
  }
  return "\x1b[90m";
}

inline constexpr std::string_view kAnsiReset = "\x1b[0m";

inline std::string_view css_class(PredictionLabel p) {
  switch (p) {
    case PredictionLabel::Attributable:
      return "attributable";
    case PredictionLabel::Extrapolatory:
      return "extrapolatory";
    case PredictionLabel::Contradictory:
      return "contradictory";
    case PredictionLabel::NoAttribution:
      return "no-attribution";
  }
  return "no-attribution";
}

inline std::string html_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

inline std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string render_ansi(const VerificationReport& r) {
  std::ostringstream os;
  os << "Text\n";
  for (const auto& seg : color_segments(r)) {
    const auto piece = std::string_view(r.input_text).substr(seg.begin, seg.end - seg.begin);
    if (seg.claim < 0) {
      os << piece;
    } else {
      os << ansi_color(r.claims[static_cast<std::size_t>(seg.claim)].claim.prediction) << piece << kAnsiReset;
    }
  }
  os << "\n\nClaims (" << r.n << ")\n";
  for (std::size_t k = 0; k < r.claims.size(); ++k) {
    const auto& sc = r.claims[k];
    const auto& c = sc.claim;
    os << ansi_color(c.prediction) << "[" << (k + 1) << "] " << to_string(c.prediction) << kAnsiReset
       << "  score " << sc.cs.value() << "  TMS " << fixed(sc.tms) << " (SS " << fixed(sc.ss) << ", EPR "
       << fixed(sc.epr) << ")\n";
    os << "    span: \"" << c.span << "\"";
    if (c.located()) os << " [" << *c.start << ", " << *c.end << ")";
    os << "\n";
    for (const auto& t : c.rel_triplets) os << "    triplet: " << t.to_string() << "\n";
    if (!c.rationale.empty()) os << "    rationale: " << c.rationale << "\n";
    if (auto prev = overlapped_by_earlier(r, k)) {
      os << "    note: overlaps claim " << (*prev + 1) << "; shared text shown in this claim's color\n";
    }
    for (const auto& d : c.diagnostics) os << "    ! " << d << "\n";
  }
  if (!r.entities.empty()) {
    os << "\nEntities\n";
    for (const auto& e : r.entities) {
      os << "  [" << e.label << " | " << e.entity.node.value << "]";
      if (!e.description.empty()) os << " " << e.description;
      os << "\n";
    }
  }
  os << "\nKAS " << fixed(r.kas, 6) << "\n";
  for (const auto& d : r.diagnostics) os << "! " << d << "\n";
  return os.str();
}

inline std::string render_html(const VerificationReport& r) {
  std::ostringstream os;
  os << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Claim verification</title>\n"
        "<style>\n"
        "body{font-family:sans-serif;max-width:60em;margin:2em auto}\n"
        ".text{line-height:1.8;font-size:1.1em}\n"
        ".attributable{background:#c8e6c9}.extrapolatory{background:#ffe0b2}\n"
        ".contradictory{background:#ffcdd2}.no-attribution{background:#e0e0e0}\n"
        ".entity{display:inline-block;border:1px solid #888;padding:.2em .5em;margin:.2em}\n"
        "</style></head><body>\n<p class=\"text\">";
  for (const auto& seg : color_segments(r)) {
    const auto piece = html_escape(std::string_view(r.input_text).substr(seg.begin, seg.end - seg.begin));
    if (seg.claim < 0) {
      os << piece;
    } else {
      const auto& c = r.claims[static_cast<std::size_t>(seg.claim)].claim;
      os << "<span class=\"" << css_class(c.prediction) << "\" data-claim=\"" << (seg.claim + 1) << "\">" << piece
         << "</span>";
    }
  }
  os << "</p>\n<ol class=\"claims\">\n";
  for (std::size_t k = 0; k < r.claims.size(); ++k) {
    const auto& sc = r.claims[k];
    const auto& c = sc.claim;
    os << "<li class=\"" << css_class(c.prediction) << "\"><b>" << to_string(c.prediction) << "</b> score "
       << sc.cs.value() << ", TMS " << fixed(sc.tms) << "<br>&ldquo;" << html_escape(c.span) << "&rdquo;<ul>\n";
    for (const auto& t : c.rel_triplets) os << "<li>" << html_escape(t.to_string()) << "</li>\n";
    if (!c.rationale.empty()) os << "<li><i>" << html_escape(c.rationale) << "</i></li>\n";
    if (auto prev = overlapped_by_earlier(r, k)) {
      os << "<li class=\"note\">overlaps claim " << (*prev + 1) << "; shared text shown in this claim's color</li>\n";
    }
    for (const auto& d : c.diagnostics) os << "<li class=\"diagnostic\">" << html_escape(d) << "</li>\n";
    os << "</ul></li>\n";
  }
  os << "</ol>\n<div class=\"entities\">\n";
  for (const auto& e : r.entities) {
    os << "<span class=\"entity\"><b>" << html_escape(e.label) << "</b> " << html_escape(e.entity.node.value);
    if (!e.description.empty()) os << "<br><small>" << html_escape(e.description) << "</small>";
    os << "</span>\n";
  }
  os << "</div>\n<p class=\"kas\">KAS <b>" << fixed(r.kas, 6) << "</b></p>\n";
  for (const auto& d : r.diagnostics) os << "<p class=\"diagnostic\">" << html_escape(d) << "</p>\n";
  os << "</body></html>\n";
  return os.str();
}

}  // namespace detail

inline std::string render(const VerificationReport& r, RenderFormat format) {
  switch (format) {
    case RenderFormat::json:
      return to_json(r).dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
    case RenderFormat::ansi:
      return detail::render_ansi(r);
    case RenderFormat::html:
      return detail::render_html(r);
  }
  return {};
}

}  // namespace claimver
