#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "claimver/http_client.hpp"
#include "claimver/text.hpp"

namespace claimver {

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<double> embed(std::string_view text) = 0;
};

// Offline embedder: counts of case-folded word tokens hashed into a fixed
// number of buckets.
class HashedBagEmbedder : public Embedder {
 public:
  static constexpr std::size_t kDefaultDim = 1024;

  explicit HashedBagEmbedder(std::size_t dim = kDefaultDim) : dim_(dim) {
    if (dim_ == 0) throw std::invalid_argument("embedding dimension must be > 0");
  }

  std::size_t bucket(std::string_view folded_token) const { return text::fnv1a64(folded_token) % dim_; }

  std::vector<double> embed(std::string_view s) override {
    std::vector<double> v(dim_, 0.0);
    for (const auto& tok : text::tokenize_words(s)) v[bucket(tok.norm)] += 1.0;
    return v;
  }

 private:
  std::size_t dim_;
};

// POST {base_url}/embeddings {"model": ..., "input": [text]}; vector from data[0].embedding.
class HttpEmbedder : public Embedder {
 public:
  HttpEmbedder(HttpOptions opts, std::string model) : poster_(std::move(opts)), model_(std::move(model)) {}

  std::vector<double> embed(std::string_view s) override {
    const nlohmann::json body = {{"model", model_}, {"input", nlohmann::json::array({std::string(s)})}};
    const auto response = poster_.post("/embeddings", body);
    try {
      return response.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(BackendError::Kind::malformed, std::string("unexpected embedding shape: ") + e.what());
    }
  }

 private:
  JsonPoster poster_;
  std::string model_;
};

// 0 when either vector has zero norm.
inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("embedding dimensions differ");
  double dot = 0;
  double na = 0;
  double nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace claimver
