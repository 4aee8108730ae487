#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "lingo/errors.hpp"
#include "lingo/retrieval.hpp"

using namespace lingo;

namespace {

// Independent oracle: score every candidate, sort by (score desc, id asc),
// take k. No shared code with VectorIndex::top_k.
std::vector<std::string> oracle_top_k(const std::vector<std::string>& ids,
                                      const std::vector<std::vector<double>>& vecs,
                                      const std::vector<double>& query, std::size_t k,
                                      const std::string& exclude = "") {
    std::vector<std::pair<double, std::string>> scored;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] == exclude) continue;
        double dot = 0, nq = 0, nv = 0;
        for (std::size_t d = 0; d < query.size(); ++d) {
            dot += query[d] * vecs[i][d];
            nq += query[d] * query[d];
            nv += vecs[i][d] * vecs[i][d];
        }
        double score = (nq == 0 || nv == 0) ? 0.0 : dot / std::sqrt(nq * nv);
        scored.emplace_back(score, ids[i]);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) out.push_back(scored[i].second);
    return out;
}

LabeledExample pool_example(const std::string& id, IntentLabel label,
                            std::map<std::string, std::string> answers) {
    LabeledExample ex;
    ex.post.id = id;
    ex.post.text = "text of " + id;
    ex.post.category = Category::IMP;
    ex.label = label;
    ex.node_answers = std::move(answers);
    return ex;
}

}  // namespace

TEST_CASE("cosine similarity basics") {
    CHECK(cosine_similarity({1, 0}, {1, 0}) == doctest::Approx(1.0));
    CHECK(cosine_similarity({1, 0}, {0, 1}) == doctest::Approx(0.0));
    CHECK(cosine_similarity({1, 0}, {-1, 0}) == doctest::Approx(-1.0));
    CHECK(cosine_similarity({2, 0}, {7, 0}) == doctest::Approx(1.0));  // scale invariant
    CHECK(cosine_similarity({0, 0}, {1, 0}) == 0.0);                    // zero vector convention
    CHECK_THROWS_AS(cosine_similarity({1, 0}, {1, 0, 0}), DimensionMismatch);
}

TEST_CASE("top_k matches a brute-force scan over 1000 random vectors") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const std::size_t n = 1000, dim = 8;
    VectorIndex index;
    std::vector<std::string> ids;
    std::vector<std::vector<double>> vecs;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> v(dim);
        for (auto& x : v) x = unit(rng);
        std::string id = "v" + std::to_string(1000 + i);
        index.add(id, v);
        ids.push_back(id);
        vecs.push_back(v);
    }
    CHECK(index.size() == n);
    CHECK(index.dimension() == dim);

    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> query(dim);
        for (auto& x : query) x = unit(rng);
        for (std::size_t k : {std::size_t{1}, std::size_t{4}, std::size_t{10}}) {
            auto hits = index.top_k(query, k);
            auto want = oracle_top_k(ids, vecs, query, k);
            REQUIRE(hits.size() == want.size());
            for (std::size_t i = 0; i < hits.size(); ++i) CHECK(hits[i].id == want[i]);
            // scores are sorted and within cosine bounds
            for (std::size_t i = 1; i < hits.size(); ++i) CHECK(hits[i - 1].score >= hits[i].score);
            for (const auto& h : hits) {
                CHECK(h.score <= 1.0 + 1e-12);
                CHECK(h.score >= -1.0 - 1e-12);
            }
        }
    }
}

TEST_CASE("exact ties break by id ascending") {
    VectorIndex index;
    // all parallel to the query: identical scores
    index.add("b", {2, 0});
    index.add("a", {1, 0});
    index.add("c", {5, 0});
    auto hits = index.top_k({1, 0}, 2);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].id == "a");
    CHECK(hits[1].id == "b");
}

TEST_CASE("exclude_id removes the query's own entry") {
    VectorIndex index;
    index.add("self", {1, 0});
    index.add("other", {0.9, 0.1});
    auto hits = index.top_k({1, 0}, 5, "self");
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].id == "other");
}

TEST_CASE("k larger than the pool returns the whole pool") {
    VectorIndex index;
    index.add("a", {1, 0});
    index.add("b", {0, 1});
    CHECK(index.top_k({1, 1}, 100).size() == 2);
}

TEST_CASE("mixed dimensions are rejected") {
    VectorIndex index;
    index.add("a", {1, 0, 0});
    CHECK_THROWS_AS(index.add("b", {1, 0}), DimensionMismatch);
    CHECK_THROWS_AS(index.top_k({1, 0}, 1), DimensionMismatch);
}

TEST_CASE("retrieval policy returns the k nearest pool demos, excluding self") {
    GraphSpec g = default_lingo_graph();
    std::vector<LabeledExample> pool;
    for (int i = 0; i < 30; ++i)
        pool.push_back(pool_example("p" + std::to_string(100 + i), IntentLabel::Other,
                                    {{"STEP 1", "NO"}, {"STEP 4", "NO"}}));
    MockEmbedder embedder(16);
    auto policy = build_retrieval_policy(pool, embedder, 4, {}, g);
    CHECK(policy.index->size() == 30);

    Post query;
    query.id = "q";
    query.text = "a fresh query";
    auto demos = policy.retrieve(query, embedder);
    REQUIRE(demos.size() == 4);

    // oracle over the same embeddings
    std::vector<std::string> ids;
    std::vector<std::vector<double>> vecs;
    for (const auto& ex : pool) {
        ids.push_back(ex.post.id);
        vecs.push_back(embedder.embed_one(ex.post.text));
    }
    auto want = oracle_top_k(ids, vecs, embedder.embed_one(query.text), 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(demos[i].example.post.id == want[i]);

    // retrieval is deterministic
    auto again = policy.retrieve(query, embedder);
    for (std::size_t i = 0; i < 4; ++i) CHECK(again[i].example == demos[i].example);

    // a query sharing an id with a pool item never retrieves itself
    Post self = pool[3].post;
    for (const auto& d : policy.retrieve(self, embedder))
        CHECK(d.example.post.id != self.id);
}

TEST_CASE("node filter keeps only examples whose gold path visits a targeted node") {
    GraphSpec g = default_lingo_graph();
    std::vector<LabeledExample> pool = {
        pool_example("stance", IntentLabel::Counter,
                     {{"STEP 1", "YES"}, {"STEP 2", "YES"}, {"STEP 3", "Counter"}}),
        pool_example("direct", IntentLabel::Explicit,
                     {{"STEP 1", "NO"}, {"STEP 4", "YES"}, {"STEP 5", "Explicit"}}),
        pool_example("none", IntentLabel::Other, {{"STEP 1", "NO"}, {"STEP 4", "NO"}}),
    };
    MockEmbedder embedder(16);

    auto step3 = build_retrieval_policy(pool, embedder, 4, {"STEP 3"}, g);
    CHECK(step3.index->size() == 1);
    CHECK(step3.demos_by_id.count("stance") == 1);

    auto step5 = build_retrieval_policy(pool, embedder, 4, {"STEP 5"}, g);
    CHECK(step5.index->size() == 1);
    CHECK(step5.demos_by_id.count("direct") == 1);

    // any-of semantics across several targets
    auto both = build_retrieval_policy(pool, embedder, 4, {"STEP 3", "STEP 5"}, g);
    CHECK(both.index->size() == 2);

    // every gold path visits the root
    CHECK(build_retrieval_policy(pool, embedder, 4, {"STEP 1"}, g).index->size() == 3);

    CHECK_THROWS_AS(build_retrieval_policy(pool, embedder, 4, {"STEP 9"}, g),
                    EmptyFilteredPool);
    CHECK_THROWS_AS(build_retrieval_policy({}, embedder, 4, {}, g), Error);
    CHECK_THROWS_AS(build_retrieval_policy(pool, embedder, 0, {}, g), Error);
}
