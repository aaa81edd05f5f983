// claimver: claim-level verification of text against a triplet knowledge graph.
//
//   claimver verify  --kg kg.tsv --input text.txt --backend-url URL --model NAME [--format ansi]
//   claimver prompt  --kg kg.tsv --input text.txt          (prompts + fixture hashes, JSONL)
//   claimver datagen --kg kg.tsv --input items.jsonl       (span-labeling prompts, JSONL)

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "claimver/claimver.hpp"

namespace {

using namespace claimver;

constexpr int kOk = 0;
constexpr int kInputError = PipelineError::kInputError;
constexpr int kBackendError = PipelineError::kBackendError;

struct KgArgs {
  std::string path;
  std::string format = "tsv";
  std::string nodes;
  bool lenient = false;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--kg", path, "Triplet file")->required();
    cmd.add_option("--kg-format", format, "tsv or jsonl")->check(CLI::IsMember({"tsv", "jsonl"}));
    cmd.add_option("--kg-nodes", nodes, "Companion node file (descriptions, aliases)");
    cmd.add_flag("--lenient", lenient, "Skip malformed KG rows instead of failing");
  }

  KnowledgeGraph load() const {
    LoadOptions opts;
    opts.lenient = lenient;
    if (!nodes.empty()) opts.nodes_path = nodes;
    return load_kg(path, parse_kg_format(format), opts);
  }
};

struct BackendArgs {
  std::string url;
  std::string model;
  std::string mock;
  double timeout = 60.0;
  int max_retries = 2;
  double temperature = 0.0;
  int concurrency = 4;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--backend-url", url, "Chat-completion base URL (POST {url}/chat/completions)");
    cmd.add_option("--model", model, "Model name sent to the backend");
    cmd.add_option("--mock", mock, "JSON fixture {prompt-hash: response} used instead of a live backend");
    cmd.add_option("--timeout", timeout, "Request timeout in seconds")->check(CLI::PositiveNumber);
    cmd.add_option("--max-retries", max_retries, "Retries on 5xx/timeouts")->check(CLI::NonNegativeNumber);
    cmd.add_option("--temperature", temperature, "Sampling temperature")->check(CLI::NonNegativeNumber);
    cmd.add_option("--concurrency", concurrency, "Max in-flight requests")->check(CLI::PositiveNumber);
  }

  bool configured() const { return !url.empty() || !mock.empty(); }

  std::unique_ptr<CompletionBackend> make() const {
    if (!mock.empty()) return std::make_unique<MockBackend>(load_mock_backend(mock));
    BackendConfig cfg;
    cfg.base_url = url;
    cfg.model = model;
    cfg.api_key = api_key_from_env();
    cfg.timeout_seconds = timeout;
    cfg.max_retries = max_retries;
    cfg.temperature = temperature;
    cfg.max_concurrency = concurrency;
    return std::make_unique<ChatCompletionClient>(cfg);
  }
};

std::string read_input(const std::string& path) {
  if (path == "-") return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open input '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_output(const std::string& path, const std::string& data) {
  if (path.empty() || path == "-") {
    std::cout << data;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << data;
}

int fail(int code, const std::string& message) {
  std::cerr << "claimver: " << message << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Claim-level text verification against a knowledge graph"};
  app.require_subcommand(1);

  // verify
  auto* verify = app.add_subcommand("verify", "Verify a text and emit a report");
  KgArgs verify_kg;
  BackendArgs verify_backend;
  std::string verify_input;
  std::string embed_url;
  std::string embed_model;
  ScoringConfig scoring;
  RetrievalConfig retrieval;
  std::size_t chunk_chars = 0;
  std::string format = "json";
  std::string out_path;
  verify_kg.add_to(*verify);
  verify_backend.add_to(*verify);
  verify->add_option("--input", verify_input, "Input text file, or - for stdin")->required();
  verify->add_option("--embed-url", embed_url, "Embedding endpoint base URL (default: built-in hashed embedder)");
  verify->add_option("--embed-model", embed_model, "Embedding model name");
  verify->add_option("--alpha", scoring.alpha, "Semantic similarity weight")->capture_default_str();
  verify->add_option("--beta", scoring.beta, "Entity presence ratio weight")->capture_default_str();
  verify->add_option("--gamma", scoring.gamma_neg, "Penalty slope for negative sums")->capture_default_str();
  verify->add_option("--gamma-pos", scoring.gamma_pos, "Slope for non-negative sums")->capture_default_str();
  verify->add_option("--max-hops", retrieval.max_hops, "Max hops per connecting path")->capture_default_str();
  verify->add_option("--max-paths", retrieval.max_paths_per_pair, "Max paths per entity pair")->capture_default_str();
  verify->add_option("--chunk-chars", chunk_chars, "Chunk budget in bytes (0 = no chunking)")->capture_default_str();
  verify->add_option("--format", format, "json, ansi or html")->check(CLI::IsMember({"json", "ansi", "html"}));
  verify->add_option("--out", out_path, "Output file (default stdout)");

  // prompt
  auto* prompt_cmd = app.add_subcommand("prompt", "Print verification prompts and their fixture hashes as JSONL");
  KgArgs prompt_kg;
  std::string prompt_input;
  RetrievalConfig prompt_retrieval;
  std::size_t prompt_chunk_chars = 0;
  prompt_kg.add_to(*prompt_cmd);
  prompt_cmd->add_option("--input", prompt_input, "Input text file, or - for stdin")->required();
  prompt_cmd->add_option("--max-hops", prompt_retrieval.max_hops, "Max hops per connecting path");
  prompt_cmd->add_option("--max-paths", prompt_retrieval.max_paths_per_pair, "Max paths per entity pair");
  prompt_cmd->add_option("--chunk-chars", prompt_chunk_chars, "Chunk budget in bytes (0 = no chunking)");

  // datagen
  auto* datagen = app.add_subcommand("datagen", "Emit span attribution prompts (and responses) as JSONL");
  KgArgs datagen_kg;
  BackendArgs datagen_backend;
  std::string datagen_input;
  std::string datagen_out;
  RetrievalConfig datagen_retrieval;
  datagen_kg.add_to(*datagen);
  datagen_backend.add_to(*datagen);
  datagen->add_option("--input", datagen_input,
                      "JSONL with {\"full_text\": ..., \"text_span\": ...}; text_span optional")
      ->required();
  datagen->add_option("--out", datagen_out, "Output JSONL (default stdout)");
  datagen->add_option("--max-hops", datagen_retrieval.max_hops, "Max hops per connecting path");
  datagen->add_option("--max-paths", datagen_retrieval.max_paths_per_pair, "Max paths per entity pair");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  if (verify->parsed()) {
    std::optional<KnowledgeGraph> kg;
    std::string input;
    std::unique_ptr<CompletionBackend> backend;
    std::unique_ptr<Embedder> embedder;
    try {
      if (!verify_backend.configured()) return fail(kInputError, "verify needs --backend-url or --mock");
      kg = verify_kg.load();
      input = read_input(verify_input);
      backend = verify_backend.make();
      if (!embed_url.empty()) {
        HttpOptions opts;
        opts.base_url = embed_url;
        opts.api_key = api_key_from_env();
        opts.timeout = std::chrono::milliseconds(static_cast<long long>(verify_backend.timeout * 1000));
        opts.max_retries = verify_backend.max_retries;
        embedder = std::make_unique<HttpEmbedder>(opts, embed_model);
      } else {
        embedder = std::make_unique<HashedBagEmbedder>();
      }
    } catch (const std::exception& e) {
      return fail(kInputError, e.what());
    }

    PipelineOptions opts;
    opts.scoring = scoring;
    opts.retrieval = retrieval;
    opts.chunk_chars = chunk_chars;
    try {
      const auto report = run_pipeline(*kg, input, *backend, *embedder, opts);
      write_output(out_path, render(report, parse_render_format(format)));
    } catch (const PipelineError& e) {
      for (const auto& d : e.diagnostics()) std::cerr << "claimver: note: " << d << "\n";
      return fail(e.exit_code(), e.what());
    } catch (const std::exception& e) {
      return fail(kInputError, e.what());
    }
    return kOk;
  }

  if (prompt_cmd->parsed()) {
    try {
      const auto kg = prompt_kg.load();
      const auto input = read_input(prompt_input);
      prompt_retrieval.validate();
      const auto chunks = prompt_chunk_chars > 0 ? chunk_text(input, prompt_chunk_chars)
                                                 : std::vector<TextChunk>{{input, 0, false}};
      const EntityLinker linker(kg);
      std::string out;
      for (const auto& chunk : chunks) {
        std::vector<NodeId> seeds;
        for (const auto& e : linker.link(chunk.text)) {
          if (std::find(seeds.begin(), seeds.end(), e.node) == seeds.end()) seeds.push_back(e.node);
        }
        const auto prompt = build_verification_prompt(chunk.text, retrieve(kg, seeds, prompt_retrieval));
        out += nlohmann::json{{"offset", chunk.offset}, {"hash", prompt_hash(prompt)}, {"prompt", prompt.full()}}.dump() +
               "\n";
      }
      write_output("-", out);
    } catch (const std::exception& e) {
      return fail(kInputError, e.what());
    }
    return kOk;
  }

  if (datagen->parsed()) {
    std::optional<KnowledgeGraph> kg;
    std::vector<DatagenItem> items;
    std::unique_ptr<CompletionBackend> backend;
    try {
      kg = datagen_kg.load();
      datagen_retrieval.validate();
      std::istringstream lines(read_input(datagen_input));
      std::string line;
      std::size_t n = 0;
      while (std::getline(lines, line)) {
        ++n;
        if (text::trim(line).empty()) continue;
        try {
          const auto j = nlohmann::json::parse(line);
          DatagenItem item{j.at("full_text").get<std::string>(), std::nullopt};
          if (j.contains("text_span") && !j.at("text_span").is_null()) item.text_span = j.at("text_span").get<std::string>();
          items.push_back(std::move(item));
        } catch (const std::exception& e) {
          throw std::runtime_error("input line " + std::to_string(n) + ": " + e.what());
        }
      }
      if (datagen_backend.configured()) backend = datagen_backend.make();
    } catch (const std::exception& e) {
      return fail(kInputError, e.what());
    }

    std::string out;
    for (const auto& item : items) {
      std::vector<DatagenRecord> records;
      try {
        records = build_datagen_records(*kg, item, datagen_retrieval);
      } catch (const std::exception& e) {
        return fail(kInputError, e.what());
      }
      for (auto& r : records) {
        if (backend) {
          try {
            r.response = backend->complete(r.prompt);
          } catch (const std::exception& e) {
            return fail(kBackendError, e.what());
          }
        }
        nlohmann::json triplets = nlohmann::json::array();
        for (const auto& t : r.triplets) triplets.push_back({t.subject_label, t.predicate, t.object_label});
        nlohmann::json j = {{"full_text", r.full_text},
                            {"text_span", r.text_span},
                            {"triplets", std::move(triplets)},
                            {"prompt", r.prompt.full()}};
        if (r.response) j["response"] = *r.response;
        out += j.dump() + "\n";
      }
    }
    try {
      write_output(datagen_out, out);
    } catch (const std::exception& e) {
      return fail(kInputError, e.what());
    }
    return kOk;
  }
  return kInputError;
}
