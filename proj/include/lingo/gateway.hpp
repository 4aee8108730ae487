#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "lingo/errors.hpp"
#include "lingo/graph.hpp"

namespace lingo {

struct ChatRequest {
    std::string system_text;
    std::string user_text;
    double temperature = 0.0;
    int max_output_tokens = 2048;

    // logging metadata
    std::string example_id;
    int round = -1;
    std::string purpose = "predict";  // predict | teacher | bootstrap
    std::string split_tag;            // train | val | test
};

enum class ParseStatus { ok, repaired, failed };
std::string parse_status_name(ParseStatus s);

struct Prediction {
    std::string example_id;
    std::optional<IntentLabel> label;
    std::optional<ReasoningPath> path;
    std::string raw;
    ParseStatus status = ParseStatus::failed;
    std::string fail_reason;  // not-an-object | bad-schema | answer-out-of-domain |
                              // path-invalid | label-path-mismatch
};

struct RetryPolicy {
    int max_attempts = 3;
    int backoff_ms = 200;
};

struct ProviderConfig {
    std::string name;            // adapter id, e.g. "mock", "openai"
    std::string endpoint;        // e.g. https://api.openai.com/v1/chat/completions
    std::string model;
    std::string credential_env;  // env var holding the API key
    double rate_cap_per_sec = 5.0;
    RetryPolicy retry;
};

// A transport failure worth retrying (timeouts, 429, 5xx).
struct TransientTransportError : Error {
    using Error::Error;
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual std::string id() const = 0;
    // One attempt; retries live in the Gateway.
    virtual std::string complete_once(const ChatRequest& request) = 0;
};

// ---- run log -----------------------------------------------------------

struct CallRecord {
    std::string timestamp;
    std::string example_id;
    int round = -1;
    std::string purpose;
    std::string split_tag;
    std::string request_hash;
    std::string raw_response;
    std::string parse_status;

    std::string to_jsonl() const;
    static CallRecord from_jsonl(const std::string& line);
};

class RunLog {
public:
    RunLog() = default;
    RunLog(RunLog&& other) noexcept : records_(std::move(other.records_)) {}
    RunLog& operator=(RunLog&& other) noexcept {
        records_ = std::move(other.records_);
        return *this;
    }

    void append(CallRecord record);
    // Attaches the parse outcome to the most recent unannotated record for
    // this request hash.
    void annotate_parse(const std::string& request_hash, ParseStatus status);
    std::vector<CallRecord> records() const;
    std::size_t size() const;

    void save(const std::string& path) const;
    static RunLog load(const std::string& path);

private:
    mutable std::mutex mutex_;
    std::vector<CallRecord> records_;
};

// ---- gateway -----------------------------------------------------------

// Wraps a provider with retry, per-run call budget, and logging.
class Gateway {
public:
    Gateway(std::shared_ptr<ChatProvider> provider, RetryPolicy retry, long call_budget,
            RunLog* log);

    // Returns the provider text; the second element is the request hash used
    // in the run log (annotate the parse outcome with it).
    std::pair<std::string, std::string> complete(const ChatRequest& request);

    long calls_issued() const;
    RunLog* log() const { return log_; }
    std::shared_ptr<ChatProvider> provider() const { return provider_; }

private:
    std::shared_ptr<ChatProvider> provider_;
    RetryPolicy retry_;
    long budget_;  // <= 0 means unlimited
    RunLog* log_;
    mutable std::mutex mutex_;
    long issued_ = 0;
};

// ---- parsing -----------------------------------------------------------

// Strict parse of {"LABEL": int, "REASONING": {...}} against the graph.
// Never throws; failures land in status/fail_reason.
Prediction parse_prediction(const std::string& raw, const GraphSpec& graph);

// Label-only parse for zero-shot / CoT / direct-optimization outputs.
Prediction parse_label_prediction(const std::string& raw);

// ---- mock backends -----------------------------------------------------

struct MockScript {
    // (example id, node id) -> scripted answer
    std::map<std::pair<std::string, std::string>, std::string> answers;
    // example id -> verbatim raw output, overriding the scripted walk
    std::map<std::string, std::string> raw_overrides;
    // example id -> scripted bare label for label-only requests
    std::map<std::string, int> labels;
};

// Deterministic provider that walks the graph with scripted answers and emits
// the JSON the parser expects.
class MockProvider : public ChatProvider {
public:
    MockProvider(MockScript script, GraphSpec graph);
    std::string id() const override { return "mock"; }
    std::string complete_once(const ChatRequest& request) override;

private:
    MockScript script_;
    GraphSpec graph_;
};

// Scripted teacher: returns a critique plus a rewrite for the node named in
// the request metadata (example_id carries the node id for teacher calls).
class MockTeacherProvider : public ChatProvider {
public:
    explicit MockTeacherProvider(std::map<std::string, std::string> rewrites_by_node);
    std::string id() const override { return "mock-teacher"; }
    std::string complete_once(const ChatRequest& request) override;

private:
    std::map<std::string, std::string> rewrites_;
};

// OpenAI-compatible chat-completions adapter; credentials from the
// environment variable named in the config.
std::shared_ptr<ChatProvider> make_http_provider(const ProviderConfig& config);

// ---- embeddings --------------------------------------------------------

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::string id() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<double> embed_one(const std::string& text) = 0;
};

std::vector<std::vector<double>> embed(Embedder& embedder, const std::vector<std::string>& texts);

// Deterministic unit vectors derived from the text hash.
class MockEmbedder : public Embedder {
public:
    explicit MockEmbedder(std::size_t dim = 16) : dim_(dim) {}
    std::string id() const override { return "mock-embed"; }
    std::size_t dimension() const override { return dim_; }
    std::vector<double> embed_one(const std::string& text) override;

private:
    std::size_t dim_;
};

// Content-hash-keyed disk cache in front of another embedder.
class CachingEmbedder : public Embedder {
public:
    CachingEmbedder(std::shared_ptr<Embedder> inner, std::string cache_dir);
    std::string id() const override { return inner_->id(); }
    std::size_t dimension() const override { return inner_->dimension(); }
    std::vector<double> embed_one(const std::string& text) override;
    std::size_t cache_hits() const { return hits_; }

private:
    std::shared_ptr<Embedder> inner_;
    std::string cache_dir_;
    std::mutex mutex_;
    std::size_t hits_ = 0;
};

// Runs fn(i) for i in [0, n) with at most `cap` worker threads.
void parallel_for_indexed(std::size_t n, std::size_t cap,
                          const std::function<void(std::size_t)>& fn);

}  // namespace lingo
