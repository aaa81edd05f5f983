#pragma once

#include <algorithm>
#include <chrono>
#include <memory>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace claimver {

class BackendError : public std::runtime_error {
 public:
  enum class Kind { config, auth, http_status, timeout, transport, malformed };

  BackendError(Kind kind, std::string message, int status = 0, int attempts = 0)
      : std::runtime_error(std::move(message)), kind_(kind), status_(status), attempts_(attempts) {}

  Kind kind() const { return kind_; }
  int status() const { return status_; }
  int attempts() const { return attempts_; }

 private:
  Kind kind_;
  int status_;
  int attempts_;
};

struct HttpOptions {
  std::string base_url;
  std::string api_key;
  std::chrono::milliseconds timeout{60'000};
  int max_retries = 2;
  std::chrono::milliseconds backoff_base{500};
  std::chrono::milliseconds backoff_cap{8'000};
  int max_concurrency = 4;
};

namespace detail {

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path_prefix;
};

inline ParsedUrl parse_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw BackendError(BackendError::Kind::config, "base URL needs a scheme: " + url);
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw BackendError(BackendError::Kind::config, "unsupported URL scheme '" + scheme + "'");
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") throw BackendError(BackendError::Kind::config, "built without TLS support: " + url);
#endif
  const auto path_begin = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.scheme_host_port = url.substr(0, path_begin);
  if (path_begin != std::string::npos) out.path_prefix = url.substr(path_begin);
  while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  if (out.scheme_host_port.size() <= scheme_end + 3) throw BackendError(BackendError::Kind::config, "base URL has no host: " + url);
  return out;
}

}  // namespace detail

// POSTs JSON to {base_url}{path}. 5xx, timeouts and connection failures are
// retried with capped exponential backoff; 4xx is final. At most
// max_concurrency requests are in flight per poster.
class JsonPoster {
 public:
  explicit JsonPoster(HttpOptions opts)
      : opts_(std::move(opts)),
        url_(detail::parse_base_url(opts_.base_url)),
        slots_(std::make_unique<std::counting_semaphore<kMaxSlots>>(std::clamp(opts_.max_concurrency, 1, kMaxSlots))) {
    if (opts_.timeout.count() <= 0) throw BackendError(BackendError::Kind::config, "timeout must be > 0");
    if (opts_.max_retries < 0) throw BackendError(BackendError::Kind::config, "max_retries must be >= 0");
  }

  const HttpOptions& options() const { return opts_; }

  nlohmann::json post(const std::string& path, const nlohmann::json& body) const {
    slots_->acquire();
    struct Release {
      std::counting_semaphore<kMaxSlots>* s;
      ~Release() { s->release(); }
    } release{slots_.get()};

    const auto payload = body.dump();
    const auto full_path = url_.path_prefix + path;
    auto delay = opts_.backoff_base;
    std::string last_error;
    BackendError::Kind last_kind = BackendError::Kind::transport;
    int last_status = 0;
    const int attempts = opts_.max_retries + 1;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
      httplib::Client client(url_.scheme_host_port);
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(opts_.timeout);
      const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(opts_.timeout - secs);
      client.set_connection_timeout(secs.count(), usecs.count());
      client.set_read_timeout(secs.count(), usecs.count());
      client.set_write_timeout(secs.count(), usecs.count());
      httplib::Headers headers;
      if (!opts_.api_key.empty()) headers.emplace("Authorization", "Bearer " + opts_.api_key);

      auto res = client.Post(full_path, headers, payload, "application/json");
      if (!res) {
        const auto err = res.error();
        last_kind = (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
                        ? BackendError::Kind::timeout
                        : BackendError::Kind::transport;
        last_error = "request failed: " + httplib::to_string(err);
        last_status = 0;
      } else if (res->status == 401 || res->status == 403) {
        throw BackendError(BackendError::Kind::auth, "authentication rejected (HTTP " + std::to_string(res->status) + ")",
                           res->status, attempt);
      } else if (res->status >= 400 && res->status < 500) {
        throw BackendError(BackendError::Kind::http_status,
                           "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200), res->status, attempt);
      } else if (res->status >= 500) {
        last_kind = BackendError::Kind::http_status;
        last_status = res->status;
        last_error = "HTTP " + std::to_string(res->status);
      } else {
        try {
          return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
          throw BackendError(BackendError::Kind::malformed, std::string("response is not JSON: ") + e.what(),
                             res->status, attempt);
        }
      }
      if (attempt < attempts) {
        std::this_thread::sleep_for(delay);
        delay = std::min(delay * 2, opts_.backoff_cap);
      }
    }
    throw BackendError(last_kind, last_error + " after " + std::to_string(attempts) + " attempt(s)", last_status,
                       attempts);
  }

 private:
  static constexpr int kMaxSlots = 256;

  HttpOptions opts_;
  detail::ParsedUrl url_;
  std::unique_ptr<std::counting_semaphore<kMaxSlots>> slots_;
};

}  // namespace claimver
