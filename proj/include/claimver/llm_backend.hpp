#pragma once

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "claimver/http_client.hpp"
#include "claimver/prompts.hpp"
#include "claimver/text.hpp"

namespace claimver {

inline constexpr const char* kApiKeyEnv = "CLAIMVER_API_KEY";

struct BackendConfig {
  std::string base_url;
  std::string model;
  std::string api_key;
  double timeout_seconds = 60.0;
  int max_retries = 2;
  double temperature = 0.0;
  std::chrono::milliseconds backoff_base{500};
  int max_concurrency = 4;

  void validate() const {
    if (base_url.empty()) throw BackendError(BackendError::Kind::config, "backend URL is required");
    if (!(timeout_seconds > 0)) throw BackendError(BackendError::Kind::config, "timeout must be > 0");
    if (max_retries < 0) throw BackendError(BackendError::Kind::config, "max_retries must be >= 0");
    if (!(temperature >= 0)) throw BackendError(BackendError::Kind::config, "temperature must be >= 0");
    if (max_concurrency < 1) throw BackendError(BackendError::Kind::config, "max_concurrency must be >= 1");
  }

  HttpOptions http_options() const {
    HttpOptions o;
    o.base_url = base_url;
    o.api_key = api_key;
    o.timeout = std::chrono::milliseconds(static_cast<long long>(timeout_seconds * 1000.0));
    o.max_retries = max_retries;
    o.backoff_base = backoff_base;
    o.max_concurrency = max_concurrency;
    return o;
  }
};

inline std::string api_key_from_env() {
  const char* v = std::getenv(kApiKeyEnv);
  return v ? std::string(v) : std::string{};
}

// Anything that turns a prompt into completion text. Implementations must be
// safe to call from several threads.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::string complete(const PromptBundle& prompt) = 0;
};

inline nlohmann::json chat_request_body(const BackendConfig& cfg, const PromptBundle& prompt) {
  return {
      {"model", cfg.model},
      {"temperature", cfg.temperature},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt.full()}}})},
  };
}

// Chat-completion client: POST {base_url}/chat/completions with a single user
// message, text read from choices[0].message.content.
class ChatCompletionClient : public CompletionBackend {
 public:
  explicit ChatCompletionClient(BackendConfig cfg) : cfg_((cfg.validate(), std::move(cfg))), poster_(cfg_.http_options()) {}

  const BackendConfig& config() const { return cfg_; }

  std::string complete(const PromptBundle& prompt) override {
    const auto response = poster_.post("/chat/completions", chat_request_body(cfg_, prompt));
    try {
      const auto& content = response.at("choices").at(0).at("message").at("content");
      if (!content.is_string()) throw std::invalid_argument("content is not a string");
      return content.get<std::string>();
    } catch (const std::exception& e) {
      throw BackendError(BackendError::Kind::malformed, std::string("unexpected completion shape: ") + e.what());
    }
  }

 private:
  BackendConfig cfg_;
  JsonPoster poster_;
};

// Fixture key for a prompt: 16 hex digits of FNV-1a over the full prompt text.
inline std::string prompt_hash(const PromptBundle& prompt) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(text::fnv1a64(prompt.full())));
  return buf;
}

class UnknownPromptError : public std::out_of_range {
 public:
  explicit UnknownPromptError(const std::string& hash) : std::out_of_range("no canned response for prompt " + hash) {}
};

using FixtureTable = std::map<std::string, std::string>;

inline std::string mock_complete(const FixtureTable& table, const PromptBundle& prompt) {
  const auto hash = prompt_hash(prompt);
  auto it = table.find(hash);
  if (it == table.end()) throw UnknownPromptError(hash);
  return it->second;
}

// Deterministic canned backend. A fallback response, when set, answers
// prompts missing from the table.
class MockBackend : public CompletionBackend {
 public:
  MockBackend() = default;
  explicit MockBackend(FixtureTable table) : table_(std::move(table)) {}

  void add(const PromptBundle& prompt, std::string response) { table_[prompt_hash(prompt)] = std::move(response); }
  void set_fallback(std::string response) { fallback_ = std::move(response); }
  const FixtureTable& table() const { return table_; }

  std::string complete(const PromptBundle& prompt) override {
    if (fallback_ && !table_.contains(prompt_hash(prompt))) return *fallback_;
    return mock_complete(table_, prompt);
  }

 private:
  FixtureTable table_;
  std::optional<std::string> fallback_;
};

// {"<hash>": "<response>", ...}; a "*" key becomes the fallback response.
inline MockBackend load_mock_backend(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mock fixture '" + path.string() + "'");
  const auto j = nlohmann::json::parse(in);
  FixtureTable table;
  for (const auto& [key, value] : j.items()) {
    if (key != "*") table[key] = value.get<std::string>();
  }
  MockBackend out(std::move(table));
  if (j.contains("*")) out.set_fallback(j.at("*").get<std::string>());
  return out;
}

}  // namespace claimver
