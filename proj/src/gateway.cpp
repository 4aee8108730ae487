#include "lingo/gateway.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "lingo/hash.hpp"

namespace lingo {

using nlohmann::json;
namespace fs = std::filesystem;

std::string parse_status_name(ParseStatus s) {
    switch (s) {
        case ParseStatus::ok: return "ok";
        case ParseStatus::repaired: return "repaired";
        case ParseStatus::failed: return "failed";
    }
    return "?";
}

// ---- run log -----------------------------------------------------------

std::string CallRecord::to_jsonl() const {
    json j = {{"timestamp", timestamp},
              {"example_id", example_id},
              {"round", round},
              {"purpose", purpose},
              {"split_tag", split_tag},
              {"request_hash", request_hash},
              {"raw_response", raw_response},
              {"parse_status", parse_status}};
    return j.dump();
}

CallRecord CallRecord::from_jsonl(const std::string& line) {
    json j = json::parse(line);
    CallRecord r;
    r.timestamp = j.value("timestamp", "");
    r.example_id = j.value("example_id", "");
    r.round = j.value("round", -1);
    r.purpose = j.value("purpose", "");
    r.split_tag = j.value("split_tag", "");
    r.request_hash = j.value("request_hash", "");
    r.raw_response = j.value("raw_response", "");
    r.parse_status = j.value("parse_status", "");
    return r;
}

void RunLog::append(CallRecord record) {
    std::lock_guard lock(mutex_);
    records_.push_back(std::move(record));
}

void RunLog::annotate_parse(const std::string& request_hash, ParseStatus status) {
    std::lock_guard lock(mutex_);
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
        if (it->request_hash == request_hash && it->parse_status.empty()) {
            it->parse_status = parse_status_name(status);
            return;
        }
    }
}

std::vector<CallRecord> RunLog::records() const {
    std::lock_guard lock(mutex_);
    return records_;
}

std::size_t RunLog::size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

void RunLog::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write run log: " + path);
    std::lock_guard lock(mutex_);
    for (const auto& r : records_) out << r.to_jsonl() << "\n";
}

RunLog RunLog::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("cannot open run log: " + path);
    RunLog log;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) log.records_.push_back(CallRecord::from_jsonl(line));
    return log;
}

// ---- gateway -----------------------------------------------------------

static std::string now_iso8601() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Gateway::Gateway(std::shared_ptr<ChatProvider> provider, RetryPolicy retry, long call_budget,
                 RunLog* log)
    : provider_(std::move(provider)), retry_(retry), budget_(call_budget), log_(log) {}

std::pair<std::string, std::string> Gateway::complete(const ChatRequest& request) {
    {
        std::lock_guard lock(mutex_);
        if (budget_ > 0 && issued_ >= budget_)
            throw BudgetExceeded("call budget of " + std::to_string(budget_) + " exhausted");
        ++issued_;
    }
    std::string hash = content_hash(request.system_text + "\x1f" + request.user_text);

    std::string raw;
    int attempts = std::max(1, retry_.max_attempts);
    for (int attempt = 1;; ++attempt) {
        try {
            raw = provider_->complete_once(request);
            break;
        } catch (const TransientTransportError& e) {
            if (attempt >= attempts)
                throw TransportError("retries exhausted after " + std::to_string(attempt) +
                                     " attempts: " + e.what());
            std::this_thread::sleep_for(std::chrono::milliseconds(retry_.backoff_ms * attempt));
        }
    }

    if (log_) {
        CallRecord rec;
        rec.timestamp = now_iso8601();
        rec.example_id = request.example_id;
        rec.round = request.round;
        rec.purpose = request.purpose;
        rec.split_tag = request.split_tag;
        rec.request_hash = hash;
        rec.raw_response = raw;
        log_->append(std::move(rec));
    }
    return {raw, hash};
}

long Gateway::calls_issued() const {
    std::lock_guard lock(mutex_);
    return issued_;
}

// ---- parsing -----------------------------------------------------------

namespace {

// Balanced {...} starting exactly at `open`, tracking strings and escapes.
std::optional<std::string> balanced_object(const std::string& raw, std::size_t open) {
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = open; i < raw.size(); ++i) {
        char c = raw[i];
        if (in_string) {
            if (escaped)
                escaped = false;
            else if (c == '\\')
                escaped = true;
            else if (c == '"')
                in_string = false;
            continue;
        }
        if (c == '"')
            in_string = true;
        else if (c == '{')
            ++depth;
        else if (c == '}') {
            --depth;
            if (depth == 0) return raw.substr(open, i - open + 1);
        }
    }
    return std::nullopt;
}

// Pulls a {...} object out of narrative or fenced text. Braces quoted in the
// surrounding prose can masquerade as an opener, so every candidate position
// is tried until one yields a parseable object.
std::optional<json> extract_object(const std::string& raw) {
    for (auto open = raw.find('{'); open != std::string::npos; open = raw.find('{', open + 1)) {
        auto candidate = balanced_object(raw, open);
        if (!candidate) continue;
        try {
            json j = json::parse(*candidate);
            if (j.is_object()) return j;
        } catch (const json::exception&) {
        }
    }
    return std::nullopt;
}

struct Extracted {
    json object;
    bool repaired = false;
};

std::optional<Extracted> parse_object(const std::string& raw) {
    try {
        json j = json::parse(raw);
        if (j.is_object()) return Extracted{std::move(j), false};
    } catch (const json::exception&) {
    }
    if (auto inner = extract_object(raw)) return Extracted{std::move(*inner), true};
    return std::nullopt;
}

Prediction failed(const std::string& raw, std::string reason) {
    Prediction p;
    p.raw = raw;
    p.status = ParseStatus::failed;
    p.fail_reason = std::move(reason);
    return p;
}

}  // namespace

Prediction parse_prediction(const std::string& raw, const GraphSpec& graph) {
    auto extracted = parse_object(raw);
    if (!extracted) return failed(raw, "not-an-object");
    const json& j = extracted->object;

    if (!j.contains("LABEL") || !j["LABEL"].is_number_integer())
        return failed(raw, "bad-schema");
    auto label = label_from_int(j["LABEL"].get<int>());
    if (!label) return failed(raw, "bad-schema");
    if (!j.contains("REASONING") || !j["REASONING"].is_object())
        return failed(raw, "bad-schema");

    std::map<std::string, std::string> answers;
    for (const auto& [node, answer] : j["REASONING"].items()) {
        if (!answer.is_string()) return failed(raw, "bad-schema");
        answers[node] = answer.get<std::string>();
    }

    // Walk the graph along the given answers.
    ReasoningPath path;
    const NodeSpec* node = graph.find(graph.root);
    while (true) {
        if (node == nullptr) return failed(raw, "path-invalid");
        auto it = answers.find(node->id);
        if (it == answers.end()) return failed(raw, "path-invalid");
        auto matched = match_answer(*node, it->second);
        if (!matched) return failed(raw, "answer-out-of-domain");
        path.steps.push_back({node->id, *matched});
        const Transition& t = node->transitions.at(*matched);
        if (const auto* terminal = std::get_if<IntentLabel>(&t)) {
            path.terminal = *terminal;
            break;
        }
        node = graph.find(std::get<std::string>(t));
    }
    if (path.steps.size() != answers.size()) return failed(raw, "path-invalid");
    if (path.terminal != *label) return failed(raw, "label-path-mismatch");

    Prediction p;
    p.raw = raw;
    p.label = *label;
    p.path = std::move(path);
    p.status = extracted->repaired ? ParseStatus::repaired : ParseStatus::ok;
    return p;
}

Prediction parse_label_prediction(const std::string& raw) {
    auto extracted = parse_object(raw);
    if (!extracted) return failed(raw, "not-an-object");
    const json& j = extracted->object;
    if (!j.contains("LABEL") || !j["LABEL"].is_number_integer())
        return failed(raw, "bad-schema");
    auto label = label_from_int(j["LABEL"].get<int>());
    if (!label) return failed(raw, "bad-schema");
    Prediction p;
    p.raw = raw;
    p.label = *label;
    p.status = extracted->repaired ? ParseStatus::repaired : ParseStatus::ok;
    return p;
}

// ---- mock backends -----------------------------------------------------

MockProvider::MockProvider(MockScript script, GraphSpec graph)
    : script_(std::move(script)), graph_(std::move(graph)) {}

std::string MockProvider::complete_once(const ChatRequest& request) {
    if (auto it = script_.raw_overrides.find(request.example_id);
        it != script_.raw_overrides.end())
        return it->second;

    // A label-only prompt never mentions REASONING; answer it with the bare
    // scripted label. Otherwise walk the graph with the scripted answers.
    bool wants_reasoning = request.user_text.find("\"REASONING\"") != std::string::npos;
    bool has_walk = script_.answers.count({request.example_id, graph_.root}) > 0;
    if (!wants_reasoning || !has_walk) {
        if (auto it = script_.labels.find(request.example_id); it != script_.labels.end())
            return json{{"LABEL", it->second}}.dump();
    }

    ReasoningPath path = traverse(graph_, [&](const NodeSpec& node) -> std::string {
        auto it = script_.answers.find({request.example_id, node.id});
        if (it == script_.answers.end())
            throw Error("mock script has no answer for (" + request.example_id + ", " + node.id +
                        ")");
        return it->second;
    });
    json reasoning = json::object();
    for (const auto& step : path.steps) reasoning[step.node] = step.answer;
    return json{{"LABEL", static_cast<int>(path.terminal)}, {"REASONING", reasoning}}.dump();
}

MockTeacherProvider::MockTeacherProvider(std::map<std::string, std::string> rewrites_by_node)
    : rewrites_(std::move(rewrites_by_node)) {}

std::string MockTeacherProvider::complete_once(const ChatRequest& request) {
    auto it = rewrites_.find(request.example_id);
    if (it == rewrites_.end()) return "no rewrite available";
    return "CRITIQUE: scripted critique for " + request.example_id +
           ".\n<<<REWRITE>>>\n" + it->second + "\n<<</REWRITE>>>";
}

// ---- embeddings --------------------------------------------------------

std::vector<std::vector<double>> embed(Embedder& embedder, const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        auto v = embedder.embed_one(t);
        if (v.size() != embedder.dimension())
            throw DimensionMismatch("embedder returned wrong dimension");
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<double> MockEmbedder::embed_one(const std::string& text) {
    std::uint64_t state = fnv1a64(text);
    std::vector<double> v(dim_);
    double norm2 = 0.0;
    for (auto& x : v) {
        std::uint64_t r = splitmix64(state);
        x = static_cast<double>(r >> 11) / static_cast<double>(1ull << 53) * 2.0 - 1.0;
        norm2 += x * x;
    }
    double norm = std::sqrt(norm2);
    if (norm > 0)
        for (auto& x : v) x /= norm;
    return v;
}

CachingEmbedder::CachingEmbedder(std::shared_ptr<Embedder> inner, std::string cache_dir)
    : inner_(std::move(inner)), cache_dir_(std::move(cache_dir)) {
    fs::create_directories(cache_dir_);
}

std::vector<double> CachingEmbedder::embed_one(const std::string& text) {
    std::string key = inner_->id() + "_" + content_hash(text) + ".json";
    fs::path path = fs::path(cache_dir_) / key;
    {
        std::lock_guard lock(mutex_);
        std::ifstream in(path, std::ios::binary);
        if (in) {
            json j = json::parse(in);
            auto vec = j.at("vec").get<std::vector<double>>();
            if (vec.size() != inner_->dimension())
                throw DimensionMismatch("cached vector dimension differs from embedder");
            ++hits_;
            return vec;
        }
    }
    auto vec = inner_->embed_one(text);
    if (vec.size() != inner_->dimension())
        throw DimensionMismatch("embedder returned wrong dimension");
    {
        std::lock_guard lock(mutex_);
        fs::path tmp = path;
        tmp += ".tmp";
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << json{{"dim", vec.size()}, {"vec", vec}}.dump() << "\n";
        out.close();
        fs::rename(tmp, path);
    }
    return vec;
}

// ---- http provider -----------------------------------------------------

namespace {

class HttpChatProvider : public ChatProvider {
public:
    explicit HttpChatProvider(ProviderConfig config) : config_(std::move(config)) {}
    std::string id() const override { return config_.name + "/" + config_.model; }
    std::string complete_once(const ChatRequest& request) override;

private:
    ProviderConfig config_;
    std::mutex rate_mutex_;
    std::chrono::steady_clock::time_point last_call_{};
};

}  // namespace

std::shared_ptr<ChatProvider> make_http_provider(const ProviderConfig& config) {
    if (config.rate_cap_per_sec <= 0) throw ConfigError("rate cap must be positive");
    return std::make_shared<HttpChatProvider>(config);
}

}  // namespace lingo

// httplib is heavy; keep it out of the header and confine it here.
#ifdef LINGO_WITH_TLS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

namespace lingo {

std::string HttpChatProvider::complete_once(const ChatRequest& request) {
    const char* key = nullptr;
    if (!config_.credential_env.empty()) {
        key = std::getenv(config_.credential_env.c_str());
        if (key == nullptr || *key == '\0')
            throw AuthError("credential env var " + config_.credential_env + " is not set");
    }

    // Honor the request-rate cap with a minimum inter-call gap.
    {
        std::lock_guard lock(rate_mutex_);
        auto gap = std::chrono::duration<double>(1.0 / config_.rate_cap_per_sec);
        auto now = std::chrono::steady_clock::now();
        if (last_call_.time_since_epoch().count() != 0 && now - last_call_ < gap)
            std::this_thread::sleep_for(gap - (now - last_call_));
        last_call_ = std::chrono::steady_clock::now();
    }

    // Split endpoint into origin + path.
    std::string endpoint = config_.endpoint;
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint missing scheme: " + endpoint);
    auto path_start = endpoint.find('/', scheme_end + 3);
    std::string origin = path_start == std::string::npos ? endpoint : endpoint.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : endpoint.substr(path_start);

    json body = {{"model", config_.model},
                 {"temperature", request.temperature},
                 {"max_tokens", request.max_output_tokens},
                 {"messages",
                  json::array({{{"role", "system"}, {"content", request.system_text}},
                               {{"role", "user"}, {"content", request.user_text}}})}};

    httplib::Headers headers;
    if (key) headers.emplace("Authorization", std::string("Bearer ") + key);

#ifndef LINGO_WITH_TLS
    if (origin.rfind("https", 0) == 0)
        throw ConfigError("built without TLS support; https endpoints unavailable");
#endif
    httplib::Client client(origin);
    client.set_read_timeout(120, 0);
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) throw TransientTransportError("transport failure: " + httplib::to_string(res.error()));
    if (res->status == 401 || res->status == 403)
        throw AuthError("provider rejected credentials (HTTP " + std::to_string(res->status) + ")");
    if (res->status == 429 || res->status >= 500)
        throw TransientTransportError("HTTP " + std::to_string(res->status));
    if (res->status != 200)
        throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body);

    try {
        json j = json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed provider response: ") + e.what());
    }
}

// ---- parallel map ------------------------------------------------------

void parallel_for_indexed(std::size_t n, std::size_t cap,
                          const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (cap <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < std::min(cap, n); ++w) workers.emplace_back(worker);
    for (auto& t : workers) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace lingo
