#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <deque>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "claimver/embedding.hpp"
#include "claimver/llm_backend.hpp"
#include "claimver/prompts.hpp"
#include "support.hpp"

using namespace claimver;
using nlohmann::json;

namespace {

Triplet triplet(std::string s, std::string p, std::string o) {
  return {NodeId("id:" + s), std::move(p), NodeId("id:" + o), s, o};
}

// Answers each POST with the next scripted status; 200 replies carry a
// chat-completion body echoing `content`.
class FakeServer {
 public:
  FakeServer(std::deque<int> statuses, std::string content = "ok") : statuses_(std::move(statuses)) {
    server_.Post(R"(/v1/(chat/completions|embeddings))", [this, content](const httplib::Request& req,
                                                                       httplib::Response& res) {
      std::lock_guard lock(mu_);
      ++hits_;
      last_body_ = req.body;
      last_auth_ = req.get_header_value("Authorization");
      last_path_ = req.path;
      const int status = statuses_.empty() ? 200 : statuses_.front();
      if (!statuses_.empty()) statuses_.pop_front();
      res.status = status;
      if (status == 200) {
        if (req.path.ends_with("embeddings")) {
          res.set_content(R"({"data":[{"embedding":[0.6,0.8]}]})", "application/json");
        } else {
          res.set_content(json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump(),
                          "application/json");
        }
      } else {
        res.set_content("{\"error\":\"scripted\"}", "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int hits() {
    std::lock_guard lock(mu_);
    return hits_;
  }
  std::string last_body() {
    std::lock_guard lock(mu_);
    return last_body_;
  }
  std::string last_auth() {
    std::lock_guard lock(mu_);
    return last_auth_;
  }
  std::string last_path() {
    std::lock_guard lock(mu_);
    return last_path_;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  std::deque<int> statuses_;
  int hits_ = 0;
  std::string last_body_;
  std::string last_auth_;
  std::string last_path_;
};

BackendConfig fast_config(const std::string& url) {
  BackendConfig cfg;
  cfg.base_url = url;
  cfg.model = "test-model";
  cfg.api_key = "sk-test";
  cfg.timeout_seconds = 5;
  cfg.max_retries = 2;
  cfg.backoff_base = std::chrono::milliseconds(1);
  return cfg;
}

PromptBundle sample_prompt() {
  RetrievedTriplets r;
  r.triplets = {triplet("Apollo 11", "crew member", "Neil Armstrong")};
  return build_verification_prompt("Apollo 11 was crewed by Neil Armstrong.", r);
}

}  // namespace

TEST(Prompts, VerificationTemplateFilled) {
  RetrievedTriplets r;
  r.triplets = {triplet("Apollo 11", "crew member", "Neil Armstrong"), triplet("Neil Armstrong", "sex", "male")};
  const auto p = build_verification_prompt("Some text.", r);
  EXPECT_TRUE(p.full().starts_with("Analyze text against provided triplets, classifying claims as \"Attributable\""));
  EXPECT_NE(p.instruction.find("For multiple claims, number each component (e.g., \"text_span1\", \"prediction1\",..)."),
            std::string::npos);
  EXPECT_EQ(p.rendered_input,
            "Input for analysis:\n-Text: Some text.\n-Triplets: (Apollo 11, crew member, Neil Armstrong)\n"
            "(Neil Armstrong, sex, male)\n");
  EXPECT_EQ(p.full(), p.instruction + p.rendered_input);
}

TEST(Prompts, EmptyTripletsSectionEmpty) {
  const auto p = build_verification_prompt("Text.", RetrievedTriplets{});
  EXPECT_TRUE(p.rendered_input.ends_with("-Triplets: \n"));
}

TEST(Prompts, TripletsInRetrievalOrderOnce) {
  RetrievedTriplets r;
  r.triplets = {triplet("B", "r", "C"), triplet("A", "r", "B")};
  const auto p = build_verification_prompt("x", r);
  const auto first = p.rendered_input.find("(B, r, C)");
  const auto second = p.rendered_input.find("(A, r, B)");
  ASSERT_NE(first, std::string::npos);
  ASSERT_NE(second, std::string::npos);
  EXPECT_LT(first, second);
  EXPECT_EQ(p.rendered_input.find("(B, r, C)", first + 1), std::string::npos);
}

TEST(Prompts, BracesPassThrough) {
  const std::string text = "Use {Input Text} and {} and {Retrieved Triplets} literally.";
  const auto p = build_verification_prompt(text, RetrievedTriplets{});
  EXPECT_NE(p.rendered_input.find("-Text: " + text + "\n"), std::string::npos);
}

TEST(Prompts, DatagenEinsteinExample) {
  const std::string full =
      "Albert Einstein is widely recognized as the father of modern physics. He was awarded the Nobel Prize in "
      "Physics for his services to Theoretical Physics.";
  const std::string span = "He was awarded the Nobel Prize in Physics";
  const std::vector<Triplet> ts{triplet("Albert Einstein", "award received", "Nobel Prize in Physics")};
  const auto p = build_datagen_prompt(full, span, ts);
  EXPECT_NE(p.rendered_input.find(R"(**Triplets:** [("Albert Einstein", "award received", "Nobel Prize in Physics")])"),
            std::string::npos);
  EXPECT_NE(p.rendered_input.find("**Text span:** \"" + span + "\""), std::string::npos);
  EXPECT_TRUE(p.instruction.starts_with("**Text Span Attribution Verification**"));
  EXPECT_NE(p.instruction.find("- \"rationale\": \"Your comments here\""), std::string::npos);
}

TEST(Prompts, DatagenSpanRules) {
  EXPECT_NO_THROW(build_datagen_prompt("Whole text.", "Whole text.", {}));
  EXPECT_THROW(build_datagen_prompt("Whole text.", "Other text.", {}), PromptError);
}

TEST(MockBackend, HitReturnsVerbatim) {
  const auto prompt = sample_prompt();
  MockBackend mock;
  mock.add(prompt, "\"text_span1\": \"x\"");
  EXPECT_EQ(mock.complete(prompt), "\"text_span1\": \"x\"");
  EXPECT_EQ(mock_complete(mock.table(), prompt), "\"text_span1\": \"x\"");
}

TEST(MockBackend, MissThrows) {
  MockBackend mock;
  mock.add(build_verification_prompt("other", {}), "r");
  EXPECT_THROW(mock.complete(sample_prompt()), UnknownPromptError);
}

TEST(MockBackend, EmptyTableThrows) {
  EXPECT_THROW(mock_complete(FixtureTable{}, sample_prompt()), UnknownPromptError);
}

TEST(MockBackend, HashIsStableHex) {
  const auto h = prompt_hash(sample_prompt());
  EXPECT_EQ(h.size(), 16u);
  EXPECT_EQ(h, prompt_hash(sample_prompt()));
  EXPECT_NE(h, prompt_hash(build_verification_prompt("different", {})));
}

TEST(ChatClient, RequestShapeAndAuth) {
  FakeServer server({200}, "canned reply");
  ChatCompletionClient client(fast_config(server.url()));
  EXPECT_EQ(client.complete(sample_prompt()), "canned reply");
  EXPECT_EQ(server.last_path(), "/v1/chat/completions");
  EXPECT_EQ(server.last_auth(), "Bearer sk-test");
  const auto body = json::parse(server.last_body());
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["temperature"], 0.0);
  ASSERT_EQ(body["messages"].size(), 1u);
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_EQ(body["messages"][0]["content"], sample_prompt().full());
}

TEST(ChatClient, RetriesServerErrorsThenSucceeds) {
  FakeServer server({500, 500, 200}, "third time");
  ChatCompletionClient client(fast_config(server.url()));
  EXPECT_EQ(client.complete(sample_prompt()), "third time");
  EXPECT_EQ(server.hits(), 3);
}

TEST(ChatClient, GivesUpAfterMaxRetries) {
  FakeServer server({500, 502, 503, 200});
  ChatCompletionClient client(fast_config(server.url()));
  try {
    client.complete(sample_prompt());
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::http_status);
    EXPECT_EQ(e.status(), 503);
    EXPECT_EQ(e.attempts(), 3);
  }
  EXPECT_EQ(server.hits(), 3);
}

TEST(ChatClient, UnauthorizedIsImmediate) {
  FakeServer server({401, 200});
  ChatCompletionClient client(fast_config(server.url()));
  try {
    client.complete(sample_prompt());
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::auth);
    EXPECT_EQ(e.attempts(), 1);
  }
  EXPECT_EQ(server.hits(), 1);
}

TEST(ChatClient, OtherClientErrorsNotRetried) {
  FakeServer server({429, 200});
  ChatCompletionClient client(fast_config(server.url()));
  EXPECT_THROW(client.complete(sample_prompt()), BackendError);
  EXPECT_EQ(server.hits(), 1);
}

TEST(ChatClient, ConnectionRefusedIsTransport) {
  auto cfg = fast_config("http://127.0.0.1:9");
  cfg.max_retries = 1;
  ChatCompletionClient client(cfg);
  try {
    client.complete(sample_prompt());
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_TRUE(e.kind() == BackendError::Kind::transport || e.kind() == BackendError::Kind::timeout);
    EXPECT_EQ(e.attempts(), 2);
  }
}

TEST(ChatClient, ConfigValidation) {
  BackendConfig cfg;
  EXPECT_THROW(ChatCompletionClient{cfg}, BackendError);
  cfg.base_url = "ftp://example";
  EXPECT_THROW(ChatCompletionClient{cfg}, BackendError);
  cfg.base_url = "http://localhost:1";
  cfg.max_retries = -1;
  EXPECT_THROW(ChatCompletionClient{cfg}, BackendError);
}

TEST(HttpEmbedder, ReadsEmbeddingVector) {
  FakeServer server({200});
  HttpOptions opts;
  opts.base_url = server.url();
  HttpEmbedder embedder(opts, "embed-model");
  EXPECT_EQ(embedder.embed("hello"), (std::vector<double>{0.6, 0.8}));
  EXPECT_EQ(server.last_path(), "/v1/embeddings");
  const auto body = json::parse(server.last_body());
  EXPECT_EQ(body["model"], "embed-model");
  EXPECT_EQ(body["input"], json::array({"hello"}));
}
