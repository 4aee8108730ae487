#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <set>

#include "lingo/errors.hpp"
#include "lingo/gateway.hpp"

using namespace lingo;

namespace {

class CountingProvider : public ChatProvider {
public:
    explicit CountingProvider(std::string reply, int fail_first = 0)
        : reply_(std::move(reply)), failures_left_(fail_first) {}
    std::string id() const override { return "counting"; }
    std::string complete_once(const ChatRequest&) override {
        ++calls_;
        if (failures_left_-- > 0) throw TransientTransportError("simulated timeout");
        return reply_;
    }
    int calls() const { return calls_; }

private:
    std::string reply_;
    std::atomic<int> failures_left_;
    std::atomic<int> calls_{0};
};

}  // namespace

TEST_CASE("the four documented output objects parse to labels 1, 5, 0, 0") {
    GraphSpec g = default_lingo_graph();
    struct Case {
        const char* raw;
        int label;
    };
    const Case cases[] = {
        {R"({"LABEL": 1, "REASONING": {"STEP 1": "NO", "STEP 4": "YES", "STEP 5": "Explicit"}})", 1},
        {R"({"LABEL": 5, "REASONING": {"STEP 1": "YES", "STEP 2": "YES", "STEP 3": "Counter"}})", 5},
        {R"({"LABEL": 0, "REASONING": {"STEP 1": "YES", "STEP 2": "NO", "STEP 4": "NO"}})", 0},
        {R"({"LABEL": 0, "REASONING": {"STEP 1": "NO", "STEP 4": "NO"}})", 0},
    };
    for (const auto& c : cases) {
        CAPTURE(c.raw);
        auto p = parse_prediction(c.raw, g);
        CHECK(p.status == ParseStatus::ok);
        REQUIRE(p.label.has_value());
        CHECK(static_cast<int>(*p.label) == c.label);
        REQUIRE(p.path.has_value());
        CHECK(static_cast<int>(p.path->terminal) == c.label);
    }
}

TEST_CASE("malformed outputs fail with a specific reason and never throw") {
    GraphSpec g = default_lingo_graph();
    struct Case {
        const char* raw;
        const char* reason;
    };
    const Case cases[] = {
        {"", "not-an-object"},
        {"I think the label is 1.", "not-an-object"},
        {"[1, 2, 3]", "not-an-object"},
        {"\"LABEL\"", "not-an-object"},
        {"{\"LABEL\": 1", "not-an-object"},  // unterminated
        {"null", "not-an-object"},
        {"{}", "bad-schema"},
        {R"({"label": 1, "reasoning": {}})", "bad-schema"},  // wrong key case
        {R"({"LABEL": "1", "REASONING": {"STEP 1": "NO", "STEP 4": "NO"}})", "bad-schema"},
        {R"({"LABEL": 1.5, "REASONING": {"STEP 1": "NO", "STEP 4": "NO"}})", "bad-schema"},
        {R"({"LABEL": 7, "REASONING": {"STEP 1": "NO", "STEP 4": "NO"}})", "bad-schema"},
        {R"({"LABEL": -1, "REASONING": {"STEP 1": "NO", "STEP 4": "NO"}})", "bad-schema"},
        {R"({"LABEL": 0})", "bad-schema"},  // missing REASONING
        {R"({"LABEL": 0, "REASONING": "STEP 1: NO"})", "bad-schema"},
        {R"({"LABEL": 0, "REASONING": {"STEP 1": 0}})", "bad-schema"},
        {R"({"LABEL": 0, "REASONING": {}})", "path-invalid"},  // no root answer
        {R"({"LABEL": 0, "REASONING": {"STEP 4": "NO"}})", "path-invalid"},
        {R"({"LABEL": 0, "REASONING": {"STEP 1": "NO"}})", "path-invalid"},  // stops early
        {R"({"LABEL": 0, "REASONING": {"STEP 1": "NO", "STEP 4": "NO", "STEP 2": "YES"}})",
         "path-invalid"},  // extra off-path answer
        {R"({"LABEL": 0, "REASONING": {"STEP 1": "NO", "STEP 4": "NO", "STEP 9": "YES"}})",
         "path-invalid"},  // unknown node
        {R"({"LABEL": 0, "REASONING": {"STEP 1": "MAYBE"}})", "answer-out-of-domain"},
        {R"({"LABEL": 0, "REASONING": {"STEP 1": "NO", "STEP 4": "Explicit"}})",
         "answer-out-of-domain"},
        {R"({"LABEL": 2, "REASONING": {"STEP 1": "NO", "STEP 4": "NO"}})", "label-path-mismatch"},
        {R"({"LABEL": 0, "REASONING": {"STEP 1": "NO", "STEP 4": "YES", "STEP 5": "Explicit"}})",
         "label-path-mismatch"},
    };
    for (const auto& c : cases) {
        CAPTURE(c.raw);
        Prediction p;
        CHECK_NOTHROW(p = parse_prediction(c.raw, g));
        CHECK(p.status == ParseStatus::failed);
        CHECK(p.fail_reason == c.reason);
        CHECK_FALSE(p.label.has_value());
        CHECK(p.raw == c.raw);
    }
}

TEST_CASE("objects wrapped in narrative or code fences are repaired") {
    GraphSpec g = default_lingo_graph();
    std::string wrapped =
        "Sure! Here is my answer:\n```json\n"
        R"({"LABEL": 1, "REASONING": {"STEP 1": "NO", "STEP 4": "YES", "STEP 5": "Explicit"}})"
        "\n```\nLet me know if you need anything else.";
    auto p = parse_prediction(wrapped, g);
    CHECK(p.status == ParseStatus::repaired);
    REQUIRE(p.label.has_value());
    CHECK(static_cast<int>(*p.label) == 1);

    // braces inside strings must not confuse the extractor
    std::string tricky =
        R"(note "{" before: {"LABEL": 0, "REASONING": {"STEP 1": "NO", "STEP 4": "NO"}} end)";
    CHECK(parse_prediction(tricky, g).status == ParseStatus::repaired);

    // answers are matched case-insensitively
    auto lax = parse_prediction(
        R"({"LABEL": 2, "REASONING": {"STEP 1": "no", "STEP 4": "yes", "STEP 5": "implicit"}})", g);
    CHECK(lax.status == ParseStatus::ok);
    CHECK(static_cast<int>(*lax.label) == 2);
}

TEST_CASE("label-only parsing") {
    auto ok = parse_label_prediction(R"({"LABEL": 3})");
    CHECK(ok.status == ParseStatus::ok);
    CHECK(static_cast<int>(*ok.label) == 3);
    CHECK_FALSE(ok.path.has_value());

    auto repaired = parse_label_prediction("The answer: {\"LABEL\": 6} done");
    CHECK(repaired.status == ParseStatus::repaired);
    CHECK(static_cast<int>(*repaired.label) == 6);

    CHECK(parse_label_prediction("six").fail_reason == "not-an-object");
    CHECK(parse_label_prediction(R"({"LABEL": 9})").fail_reason == "bad-schema");
    CHECK(parse_label_prediction(R"({"LABEL": "3"})").fail_reason == "bad-schema");
}

TEST_CASE("gateway retries transient failures and logs the call") {
    auto provider = std::make_shared<CountingProvider>("hello", 2);
    RunLog log;
    Gateway gw(provider, RetryPolicy{3, 1}, 0, &log);
    ChatRequest req;
    req.example_id = "ex-1";
    req.round = 2;
    req.purpose = "predict";
    req.split_tag = "val";
    req.user_text = "prompt text";
    auto [raw, hash] = gw.complete(req);
    CHECK(raw == "hello");
    CHECK(provider->calls() == 3);  // two failures, one success
    CHECK(gw.calls_issued() == 1);  // retries count as one budgeted call

    REQUIRE(log.size() == 1);
    auto rec = log.records()[0];
    CHECK(rec.example_id == "ex-1");
    CHECK(rec.round == 2);
    CHECK(rec.purpose == "predict");
    CHECK(rec.split_tag == "val");
    CHECK(rec.raw_response == "hello");
    CHECK(rec.request_hash == hash);
    CHECK(rec.parse_status.empty());

    log.annotate_parse(hash, ParseStatus::ok);
    CHECK(log.records()[0].parse_status == "ok");
}

TEST_CASE("gateway surfaces exhausted retries as a transport error") {
    auto provider = std::make_shared<CountingProvider>("x", 100);
    Gateway gw(provider, RetryPolicy{2, 1}, 0, nullptr);
    CHECK_THROWS_AS(gw.complete(ChatRequest{}), TransportError);
    CHECK(provider->calls() == 2);
}

TEST_CASE("gateway enforces the call budget") {
    auto provider = std::make_shared<CountingProvider>("x");
    Gateway gw(provider, RetryPolicy{1, 1}, 2, nullptr);
    CHECK_NOTHROW(gw.complete(ChatRequest{}));
    CHECK_NOTHROW(gw.complete(ChatRequest{}));
    CHECK_THROWS_AS(gw.complete(ChatRequest{}), BudgetExceeded);
    CHECK(gw.calls_issued() == 2);  // the rejected call is not issued
}

TEST_CASE("run log round trips through disk") {
    namespace fs = std::filesystem;
    fs::path path = fs::temp_directory_path() /
                    ("lingo_gateway_log_" + std::to_string(::getpid()) + ".jsonl");
    RunLog log;
    CallRecord r;
    r.timestamp = "2026-01-01T00:00:00Z";
    r.example_id = "e";
    r.round = 1;
    r.purpose = "teacher";
    r.split_tag = "train";
    r.request_hash = "abc";
    r.raw_response = "line with \"quotes\" and \n newline";
    r.parse_status = "ok";
    log.append(r);
    log.save(path.string());
    auto loaded = RunLog::load(path.string());
    REQUIRE(loaded.size() == 1);
    CHECK(loaded.records()[0].to_jsonl() == r.to_jsonl());
    fs::remove(path);
    CHECK_THROWS_AS(RunLog::load(path.string()), StorageError);
}

TEST_CASE("mock provider: scripted walk vs bare label vs raw override") {
    GraphSpec g = default_lingo_graph();
    MockScript script;
    script.answers[{"a", "STEP 1"}] = "NO";
    script.answers[{"a", "STEP 4"}] = "YES";
    script.answers[{"a", "STEP 5"}] = "Implicit";
    script.labels["a"] = 2;
    script.labels["b"] = 4;
    script.raw_overrides["c"] = "verbatim gibberish";
    MockProvider provider(script, g);

    ChatRequest graph_req;
    graph_req.example_id = "a";
    graph_req.user_text = "... \"REASONING\" schema ...";
    auto walk = parse_prediction(provider.complete_once(graph_req), g);
    CHECK(walk.status == ParseStatus::ok);
    CHECK(static_cast<int>(*walk.label) == 2);
    REQUIRE(walk.path.has_value());
    CHECK(walk.path->steps.back().answer == "Implicit");

    ChatRequest label_req = graph_req;
    label_req.user_text = "label only";  // no REASONING literal in the prompt
    auto bare = parse_label_prediction(provider.complete_once(label_req));
    CHECK(static_cast<int>(*bare.label) == 2);

    // no walk scripted for b: graph prompts fall back to the bare label
    ChatRequest b_req = graph_req;
    b_req.example_id = "b";
    CHECK(parse_label_prediction(provider.complete_once(b_req)).label == IntentLabel::Intensify);

    ChatRequest c_req = graph_req;
    c_req.example_id = "c";
    CHECK(provider.complete_once(c_req) == "verbatim gibberish");

    // unscripted example on a reasoning prompt: the strict mock throws
    ChatRequest missing = graph_req;
    missing.example_id = "z";
    CHECK_THROWS_AS(provider.complete_once(missing), Error);
}

TEST_CASE("mock teacher emits the rewrite markers") {
    MockTeacherProvider teacher(
        std::map<std::string, std::string>{{"STEP 2", "rewritten STEP 2 text"}});
    ChatRequest req;
    req.example_id = "STEP 2";
    std::string raw = teacher.complete_once(req);
    CHECK(raw.find("CRITIQUE:") != std::string::npos);
    CHECK(raw.find("<<<REWRITE>>>") != std::string::npos);
    CHECK(raw.find("rewritten STEP 2 text") != std::string::npos);
    CHECK(raw.find("<<</REWRITE>>>") != std::string::npos);

    req.example_id = "STEP 9";
    CHECK(teacher.complete_once(req).find("<<<REWRITE>>>") == std::string::npos);
}

TEST_CASE("mock embedder is deterministic and unit-norm") {
    MockEmbedder e(16);
    auto a = e.embed_one("some text");
    auto b = e.embed_one("some text");
    auto c = e.embed_one("other text");
    CHECK(a == b);
    CHECK(a != c);
    REQUIRE(a.size() == 16);
    double norm2 = 0;
    for (double x : a) norm2 += x * x;
    CHECK(norm2 == doctest::Approx(1.0).epsilon(1e-12));

    auto batch = embed(e, {"some text", "other text"});
    CHECK(batch[0] == a);
    CHECK(batch[1] == c);
}

TEST_CASE("caching embedder hits on repeats and checks dimensions") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() /
                   ("lingo_embed_cache_" + std::to_string(::getpid()));
    fs::remove_all(dir);

    auto inner = std::make_shared<MockEmbedder>(8);
    {
        CachingEmbedder cache(inner, dir.string());
        auto a = cache.embed_one("text");
        CHECK(cache.cache_hits() == 0);
        CHECK(cache.embed_one("text") == a);
        CHECK(cache.cache_hits() == 1);
        CHECK(a == inner->embed_one("text"));
    }
    {
        // a fresh instance reads back the persisted vectors
        CachingEmbedder cache(inner, dir.string());
        CHECK(cache.embed_one("text") == inner->embed_one("text"));
        CHECK(cache.cache_hits() == 1);
    }
    {
        // same cache dir, different dimension: the stale entry is rejected
        CachingEmbedder cache(std::make_shared<MockEmbedder>(4), dir.string());
        CHECK_THROWS_AS(cache.embed_one("text"), DimensionMismatch);
    }
    fs::remove_all(dir);
}

TEST_CASE("parallel_for_indexed covers every index once and rethrows") {
    std::vector<std::atomic<int>> counts(100);
    parallel_for_indexed(100, 8, [&](std::size_t i) { ++counts[i]; });
    for (const auto& c : counts) CHECK(c.load() == 1);

    // cap of 1 runs inline, in order
    std::vector<std::size_t> order;
    parallel_for_indexed(5, 1, [&](std::size_t i) { order.push_back(i); });
    CHECK(order == std::vector<std::size_t>{0, 1, 2, 3, 4});

    CHECK_THROWS_AS(parallel_for_indexed(
                        10, 4,
                        [&](std::size_t i) {
                            if (i == 7) throw StorageError("boom");
                        }),
                    StorageError);
    CHECK_NOTHROW(parallel_for_indexed(0, 4, [](std::size_t) {}));
}
