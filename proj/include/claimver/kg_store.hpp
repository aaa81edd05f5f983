#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "claimver/text.hpp"

namespace claimver {

struct NodeId {
  std::string value;

  NodeId() = default;
  explicit NodeId(std::string v) : value(std::move(v)) {}

  bool empty() const { return value.empty(); }
  auto operator<=>(const NodeId&) const = default;
  bool operator==(const NodeId&) const = default;
};

struct KgNode {
  NodeId id;
  std::string label;
  std::string description;
  std::vector<std::string> aliases;

  bool operator==(const KgNode&) const = default;
};

// Field order makes the defaulted ordering (subject, predicate, object).
struct Triplet {
  NodeId subject;
  std::string predicate;
  NodeId object;
  std::string subject_label;
  std::string object_label;

  bool is_self_loop() const { return subject == object; }
  auto operator<=>(const Triplet&) const = default;
  bool operator==(const Triplet&) const = default;

  // "(subject label, predicate, object label)"
  std::string to_string() const { return "(" + subject_label + ", " + predicate + ", " + object_label + ")"; }
};

// Labels-only triplet as written by a model.
struct CandidateTriplet {
  std::string subject_label;
  std::string predicate;
  std::string object_label;
};

enum class KgFormat { tsv, jsonl };

inline KgFormat parse_kg_format(std::string_view s) {
  if (s == "tsv") return KgFormat::tsv;
  if (s == "jsonl") return KgFormat::jsonl;
  throw std::invalid_argument("unknown KG format '" + std::string(s) + "' (expected tsv or jsonl)");
}

class KgError : public std::runtime_error {
 public:
  enum class Kind { missing_file, malformed_row, dangling_reference };

  KgError(Kind kind, std::string message, std::size_t line = 0)
      : std::runtime_error(std::move(message)), kind_(kind), line_(line) {}

  Kind kind() const { return kind_; }
  // First offending line (1-based), 0 when not tied to a row.
  std::size_t line() const { return line_; }

 private:
  Kind kind_;
  std::size_t line_;
};

struct RejectedRow {
  std::string file;
  std::size_t line = 0;
  std::string reason;
};

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t duplicates = 0;
  std::size_t self_loops = 0;
  std::vector<RejectedRow> rejected;
  std::vector<std::string> warnings;
};

class KnowledgeGraph {
 public:
  struct Adjacent {
    std::size_t neighbor;  // node index
    std::size_t edge;      // edge index
  };

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  // Sorted by id; a node's index is its position here.
  const std::vector<KgNode>& nodes() const { return nodes_; }
  // Sorted by (subject, predicate, object).
  const std::vector<Triplet>& edges() const { return edges_; }
  const KgNode& node(std::size_t index) const { return nodes_.at(index); }

  std::optional<std::size_t> index_of(const NodeId& id) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                               [](const KgNode& n, const NodeId& key) { return n.id < key; });
    if (it == nodes_.end() || it->id != id) return std::nullopt;
    return static_cast<std::size_t>(it - nodes_.begin());
  }

  const KgNode* find_node(const NodeId& id) const {
    auto idx = index_of(id);
    return idx ? &nodes_[*idx] : nullptr;
  }

  bool contains(const NodeId& id) const { return index_of(id).has_value(); }

  // Both edge directions; sorted by (neighbor id, triplet). Self-loops appear once.
  std::span<const Adjacent> adjacent(std::size_t index) const { return adjacency_.at(index); }

  // normalized label or alias -> sorted node ids
  const std::map<std::string, std::vector<NodeId>>& label_index() const { return label_index_; }

  const LoadReport& load_report() const { return report_; }

  std::vector<NodeId> lookup_by_label(std::string_view surface) const {
    auto it = label_index_.find(text::normalize(surface));
    if (it == label_index_.end()) return {};
    return it->second;
  }

  std::optional<Triplet> contains_triplet(const CandidateTriplet& t) const {
    auto it = triplet_index_.find(
        {text::normalize(t.subject_label), text::normalize(t.predicate), text::normalize(t.object_label)});
    if (it == triplet_index_.end()) return std::nullopt;
    return edges_[it->second];
  }

 private:
  friend class KgBuilder;

  std::vector<KgNode> nodes_;
  std::vector<Triplet> edges_;
  std::vector<std::vector<Adjacent>> adjacency_;
  std::map<std::string, std::vector<NodeId>> label_index_;
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> triplet_index_;
  LoadReport report_;
};

inline std::vector<NodeId> lookup_by_label(const KnowledgeGraph& kg, std::string_view surface) {
  return kg.lookup_by_label(surface);
}

inline std::optional<Triplet> contains_triplet(const KnowledgeGraph& kg, const CandidateTriplet& t) {
  return kg.contains_triplet(t);
}

// Accumulates node and triplet rows from any source, then resolves and
// indexes them. Row labels may be empty when the node is defined elsewhere.
class KgBuilder {
 public:
  explicit KgBuilder(bool lenient = false) : lenient_(lenient) {}

  void set_source(std::string file) { file_ = std::move(file); }

  void add_node(KgNode node, std::size_t line = 0) {
    if (node.id.empty() || text::trim(node.label).empty()) {
      reject(line, "node row needs a non-empty id and label");
      return;
    }
    auto [it, inserted] = nodes_.try_emplace(node.id, node);
    if (!inserted) {
      merge_node(it->second, node, line);
    }
  }

  // Adds description/aliases to a node that must be defined by a label elsewhere.
  void annotate_node(const NodeId& id, std::string description, std::vector<std::string> aliases,
                     std::size_t line = 0) {
    if (id.empty()) {
      reject(line, "node annotation with empty id");
      return;
    }
    annotations_.push_back({id, std::move(description), std::move(aliases), file_, line});
  }

  void add_triplet(NodeId subject, std::string subject_label, std::string predicate, NodeId object,
                   std::string object_label, std::size_t line = 0) {
    if (subject.empty() || object.empty() || text::trim(predicate).empty()) {
      reject(line, "triplet row needs subject id, predicate and object id");
      return;
    }
    ++report_.rows_read;
    if (!subject_label.empty()) add_node({subject, subject_label, {}, {}}, line);
    if (!object_label.empty()) add_node({object, object_label, {}, {}}, line);
    rows_.push_back({std::move(subject), std::string(text::trim(predicate)), std::move(object), file_, line});
  }

  // Records a row that could not be parsed at all.
  void reject(std::size_t line, std::string reason) {
    report_.rejected.push_back({file_, line, std::move(reason)});
  }

  bool has_rejections() const { return !report_.rejected.empty(); }

  KnowledgeGraph build() && {
    if (!lenient_ && !report_.rejected.empty()) {
      throw KgError(KgError::Kind::malformed_row, describe_rejections("malformed row(s)"),
                    report_.rejected.front().line);
    }

    for (auto& a : annotations_) {
      auto it = nodes_.find(a.id);
      if (it == nodes_.end()) {
        report_.warnings.push_back(location(a.file, a.line) + "annotation for unknown node '" + a.id.value +
                                   "' ignored");
        continue;
      }
      if (it->second.description.empty()) it->second.description = std::move(a.description);
      for (auto& alias : a.aliases) it->second.aliases.push_back(std::move(alias));
    }

    KnowledgeGraph kg;
    kg.nodes_.reserve(nodes_.size());
    for (auto& [id, node] : nodes_) {
      dedupe_aliases(node);
      kg.nodes_.push_back(std::move(node));
    }

    std::vector<RejectedRow> dangling;
    std::set<std::tuple<NodeId, std::string, NodeId>> seen;
    for (auto& row : rows_) {
      const auto* s = kg.find_node(row.subject);
      const auto* o = kg.find_node(row.object);
      if (s == nullptr || o == nullptr) {
        const auto& missing = s == nullptr ? row.subject : row.object;
        dangling.push_back({row.file, row.line, "dangling node reference '" + missing.value + "'"});
        continue;
      }
      if (!seen.insert({row.subject, row.predicate, row.object}).second) {
        ++report_.duplicates;
        continue;
      }
      if (row.subject == row.object) {
        ++report_.self_loops;
        report_.warnings.push_back(location(row.file, row.line) + "self-loop on '" + row.subject.value + "'");
      }
      kg.edges_.push_back({row.subject, row.predicate, row.object, s->label, o->label});
    }
    if (!dangling.empty()) {
      if (!lenient_) {
        report_.rejected = dangling;
        throw KgError(KgError::Kind::dangling_reference, describe_rejections("dangling node reference(s)"),
                      dangling.front().line);
      }
      report_.rejected.insert(report_.rejected.end(), dangling.begin(), dangling.end());
    }
    std::sort(kg.edges_.begin(), kg.edges_.end());

    kg.adjacency_.resize(kg.nodes_.size());
    for (std::size_t e = 0; e < kg.edges_.size(); ++e) {
      const auto& t = kg.edges_[e];
      const auto s = *kg.index_of(t.subject);
      const auto o = *kg.index_of(t.object);
      kg.adjacency_[s].push_back({o, e});
      if (s != o) kg.adjacency_[o].push_back({s, e});
    }
    for (auto& list : kg.adjacency_) {
      std::sort(list.begin(), list.end(), [&kg](const auto& a, const auto& b) {
        if (a.neighbor != b.neighbor) return a.neighbor < b.neighbor;
        return kg.edges_[a.edge] < kg.edges_[b.edge];
      });
    }

    for (const auto& node : kg.nodes_) {
      kg.label_index_[text::normalize(node.label)].push_back(node.id);
      for (const auto& alias : node.aliases) kg.label_index_[text::normalize(alias)].push_back(node.id);
    }
    for (auto& [key, ids] : kg.label_index_) {
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    }

    for (std::size_t e = 0; e < kg.edges_.size(); ++e) {
      const auto& t = kg.edges_[e];
      kg.triplet_index_.try_emplace(
          {text::normalize(t.subject_label), text::normalize(t.predicate), text::normalize(t.object_label)}, e);
    }

    kg.report_ = std::move(report_);
    return kg;
  }

 private:
  struct Row {
    NodeId subject;
    std::string predicate;
    NodeId object;
    std::string file;
    std::size_t line;
  };
  struct Annotation {
    NodeId id;
    std::string description;
    std::vector<std::string> aliases;
    std::string file;
    std::size_t line;
  };

  static std::string location(const std::string& file, std::size_t line) {
    if (file.empty()) return "line " + std::to_string(line) + ": ";
    return file + ":" + std::to_string(line) + ": ";
  }

  std::string describe_rejections(std::string_view what) const {
    std::ostringstream os;
    os << report_.rejected.size() << " " << what;
    std::size_t shown = 0;
    for (const auto& r : report_.rejected) {
      if (shown++ == 5) {
        os << "; ...";
        break;
      }
      os << "; " << location(r.file, r.line) << r.reason;
    }
    return os.str();
  }

  void merge_node(KgNode& existing, const KgNode& incoming, std::size_t line) {
    if (text::normalize(existing.label) != text::normalize(incoming.label)) {
      report_.warnings.push_back(location(file_, line) + "node '" + existing.id.value + "' relabeled as '" +
                                 incoming.label + "', keeping '" + existing.label + "'");
    }
    if (existing.description.empty()) existing.description = incoming.description;
    existing.aliases.insert(existing.aliases.end(), incoming.aliases.begin(), incoming.aliases.end());
  }

  static void dedupe_aliases(KgNode& node) {
    std::set<std::string> seen{text::normalize(node.label)};
    std::vector<std::string> kept;
    for (auto& alias : node.aliases) {
      auto trimmed = std::string(text::trim(alias));
      if (trimmed.empty()) continue;
      if (seen.insert(text::normalize(trimmed)).second) kept.push_back(std::move(trimmed));
    }
    node.aliases = std::move(kept);
  }

  bool lenient_;
  std::string file_;
  std::map<NodeId, KgNode> nodes_;
  std::vector<Annotation> annotations_;
  std::vector<Row> rows_;
  LoadReport report_;
};

struct LoadOptions {
  std::optional<std::filesystem::path> nodes_path;  // companion node file, same format
  bool lenient = false;
};

namespace detail {

inline std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw KgError(KgError::Kind::missing_file, "cannot open KG file '" + path.string() + "'");
  return in;
}

template <typename RowFn>
void for_each_line(std::istream& in, RowFn&& fn) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line.front() == '#') continue;
    fn(std::string_view(line), n);
  }
}

inline std::string field(std::string_view s) { return std::string(text::trim(s)); }

inline void load_tsv_nodes(std::istream& in, KgBuilder& b) {
  for_each_line(in, [&b](std::string_view line, std::size_t n) {
    const auto cols = text::split(line, '\t');
    if (cols.size() > 3) {
      b.reject(n, "expected 1-3 tab-separated columns (node_id, description, aliases), got " +
                      std::to_string(cols.size()));
      return;
    }
    std::vector<std::string> aliases;
    if (cols.size() == 3) {
      for (auto a : text::split(cols[2], '|')) {
        if (!text::trim(a).empty()) aliases.push_back(field(a));
      }
    }
    b.annotate_node(NodeId(field(cols[0])), cols.size() > 1 ? field(cols[1]) : std::string{}, std::move(aliases), n);
  });
}

inline void load_tsv_triplets(std::istream& in, KgBuilder& b) {
  for_each_line(in, [&b](std::string_view line, std::size_t n) {
    const auto cols = text::split(line, '\t');
    if (cols.size() != 5) {
      b.reject(n, "expected 5 tab-separated columns, got " + std::to_string(cols.size()));
      return;
    }
    b.add_triplet(NodeId(field(cols[0])), field(cols[1]), field(cols[2]), NodeId(field(cols[3])), field(cols[4]), n);
  });
}

inline std::string json_string(const nlohmann::json& obj, const char* key, bool required) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    if (required) throw std::invalid_argument(std::string("missing key \"") + key + "\"");
    return {};
  }
  if (!it->is_string()) throw std::invalid_argument(std::string("key \"") + key + "\" is not a string");
  return it->get<std::string>();
}

inline void load_jsonl_nodes(std::istream& in, KgBuilder& b) {
  for_each_line(in, [&b](std::string_view line, std::size_t n) {
    try {
      const auto obj = nlohmann::json::parse(line);
      if (!obj.is_object()) throw std::invalid_argument("row is not a JSON object");
      std::vector<std::string> aliases;
      if (auto it = obj.find("aliases"); it != obj.end() && !it->is_null()) {
        if (!it->is_array()) throw std::invalid_argument("\"aliases\" is not an array");
        for (const auto& a : *it) aliases.push_back(a.get<std::string>());
      }
      NodeId id(json_string(obj, "id", true));
      auto label = json_string(obj, "label", false);
      auto description = json_string(obj, "description", false);
      if (label.empty()) {
        b.annotate_node(id, std::move(description), std::move(aliases), n);
      } else {
        b.add_node({std::move(id), std::move(label), std::move(description), std::move(aliases)}, n);
      }
    } catch (const std::exception& e) {
      b.reject(n, e.what());
    }
  });
}

inline void load_jsonl_triplets(std::istream& in, KgBuilder& b) {
  for_each_line(in, [&b](std::string_view line, std::size_t n) {
    try {
      const auto obj = nlohmann::json::parse(line);
      if (!obj.is_object()) throw std::invalid_argument("row is not a JSON object");
      b.add_triplet(NodeId(json_string(obj, "s_id", true)), json_string(obj, "s_label", false),
                    json_string(obj, "p", true), NodeId(json_string(obj, "o_id", true)),
                    json_string(obj, "o_label", false), n);
    } catch (const std::exception& e) {
      b.reject(n, e.what());
    }
  });
}

}  // namespace detail

// Loads a triplet file (and optional node file) into an indexed graph.
// Strict mode throws KgError on the first class of bad rows; lenient mode
// skips them and lists them in load_report().rejected.
inline KnowledgeGraph load_kg(const std::filesystem::path& path, KgFormat format, const LoadOptions& opts = {}) {
  KgBuilder builder(opts.lenient);
  if (opts.nodes_path) {
    auto in = detail::open_or_throw(*opts.nodes_path);
    builder.set_source(opts.nodes_path->filename().string());
    if (format == KgFormat::tsv) {
      detail::load_tsv_nodes(in, builder);
    } else {
      detail::load_jsonl_nodes(in, builder);
    }
  }
  auto in = detail::open_or_throw(path);
  builder.set_source(path.filename().string());
  if (format == KgFormat::tsv) {
    detail::load_tsv_triplets(in, builder);
  } else {
    detail::load_jsonl_triplets(in, builder);
  }
  return std::move(builder).build();
}

}  // namespace claimver

template <>
struct std::hash<claimver::NodeId> {
  std::size_t operator()(const claimver::NodeId& id) const noexcept { return std::hash<std::string>{}(id.value); }
};
