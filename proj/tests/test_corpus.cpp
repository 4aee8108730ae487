#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "lingo/corpus.hpp"
#include "lingo/datagen.hpp"
#include "lingo/errors.hpp"

using namespace lingo;

namespace {

LabeledExample make_example(const std::string& id, Category cat, IntentLabel label,
                            std::map<std::string, std::string> answers) {
    LabeledExample ex;
    ex.post.id = id;
    ex.post.text = "post " + id;
    ex.post.category = cat;
    ex.label = label;
    ex.node_answers = std::move(answers);
    return ex;
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("lingo_corpus_test_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const char* name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("chain parsing accepts the documented format") {
    GraphSpec g = default_lingo_graph();
    auto parsed = parse_chain("STEP 1: NO -> STEP 4: YES -> STEP 5: Explicit -> LABEL: 1", g);
    CHECK(parsed.label == IntentLabel::Explicit);
    CHECK(parsed.node_answers.at("STEP 1") == "NO");
    CHECK(parsed.node_answers.at("STEP 4") == "YES");
    CHECK(parsed.node_answers.at("STEP 5") == "Explicit");
    CHECK(parsed.node_order == std::vector<std::string>{"STEP 1", "STEP 4", "STEP 5"});
}

TEST_CASE("chain render/parse round trip with canonicalization") {
    GraphSpec g = default_lingo_graph();
    // lower-case answers canonicalize to the graph's declared casing
    auto parsed = parse_chain("STEP 1: yes -> STEP 2: YES -> STEP 3: counter -> LABEL: 5", g);
    LabeledExample ex = make_example("x", Category::IMP, parsed.label, parsed.node_answers);
    std::string rendered = render_chain(ex, g);
    CHECK(rendered == "STEP 1: YES -> STEP 2: YES -> STEP 3: Counter -> LABEL: 5");
    auto reparsed = parse_chain(rendered, g);
    CHECK(reparsed.node_answers == parsed.node_answers);
    CHECK(reparsed.label == parsed.label);
}

TEST_CASE("chain syntax errors") {
    GraphSpec g = default_lingo_graph();
    CHECK_THROWS_AS(parse_chain("", g), ChainSyntaxError);
    CHECK_THROWS_AS(parse_chain("LABEL: 1", g), ChainSyntaxError);
    CHECK_THROWS_AS(parse_chain("STEP 1: NO -> STEP 4: NO", g), ChainSyntaxError);  // no LABEL
    CHECK_THROWS_AS(parse_chain("STEP 1 NO -> LABEL: 0", g), ChainSyntaxError);     // no colon
    CHECK_THROWS_AS(parse_chain("STEP 9: NO -> LABEL: 0", g), ChainSyntaxError);    // bad node
    CHECK_THROWS_AS(parse_chain("STEP 1: NO -> STEP 1: NO -> LABEL: 0", g),
                    ChainSyntaxError);  // duplicate node
    CHECK_THROWS_AS(parse_chain("STEP 1: NO -> STEP 4: NO -> LABEL: seven", g),
                    ChainSyntaxError);
    CHECK_THROWS_AS(parse_chain("STEP 1: NO -> STEP 4: NO -> LABEL: 9", g), ChainSyntaxError);
    CHECK_THROWS_AS(parse_chain("LABEL: 0 -> STEP 1: NO -> STEP 4: NO", g), ChainSyntaxError);
}

TEST_CASE("chain path errors") {
    GraphSpec g = default_lingo_graph();
    // out-of-domain answer
    CHECK_THROWS_AS(parse_chain("STEP 1: MAYBE -> STEP 4: NO -> LABEL: 0", g), ChainPathError);
    // label contradicts routing
    CHECK_THROWS_AS(parse_chain("STEP 1: NO -> STEP 4: NO -> LABEL: 1", g), ChainPathError);
    // answers for nodes the route never visits
    CHECK_THROWS_AS(
        parse_chain("STEP 1: NO -> STEP 2: YES -> STEP 4: NO -> LABEL: 0", g), ChainPathError);
    // segments out of routed order
    CHECK_THROWS_AS(parse_chain("STEP 4: NO -> STEP 1: NO -> LABEL: 0", g), ChainPathError);
}

TEST_CASE("path consistency check") {
    GraphSpec g = default_lingo_graph();
    auto good = make_example("a", Category::IMP, IntentLabel::Explicit,
                             {{"STEP 1", "NO"}, {"STEP 4", "YES"}, {"STEP 5", "Explicit"}});
    CHECK(check_path_consistency(good, g).terminal == IntentLabel::Explicit);

    auto wrong_label = good;
    wrong_label.label = IntentLabel::Implicit;
    CHECK_THROWS_AS(check_path_consistency(wrong_label, g), ChainPathError);

    auto off_path = good;
    off_path.node_answers["STEP 2"] = "YES";
    CHECK_THROWS_AS(check_path_consistency(off_path, g), ChainPathError);
}

TEST_CASE("example JSONL round trip") {
    auto ex = make_example("p-1", Category::THREAT, IntentLabel::Counter,
                           {{"STEP 1", "YES"}, {"STEP 2", "YES"}, {"STEP 3", "Counter"}});
    ex.coder = "alice";
    CHECK(example_from_jsonl(example_to_jsonl(ex)) == ex);

    auto no_coder = make_example("p-2", Category::IMP, IntentLabel::Other,
                                 {{"STEP 1", "NO"}, {"STEP 4", "NO"}});
    CHECK(example_from_jsonl(example_to_jsonl(no_coder)) == no_coder);

    CHECK_THROWS_AS(example_from_jsonl("not json"), ChainSyntaxError);
    CHECK_THROWS_AS(example_from_jsonl("{\"id\": \"x\"}"), ChainSyntaxError);
}

TEST_CASE("load quarantines inconsistent records") {
    GraphSpec g = default_lingo_graph();
    TempDir dir;
    {
        std::ofstream out(dir.file("corpus.jsonl"));
        out << example_to_jsonl(make_example("ok-1", Category::IMP, IntentLabel::Other,
                                             {{"STEP 1", "NO"}, {"STEP 4", "NO"}}))
            << "\n";
        // label contradicts the path
        out << R"({"id":"bad-1","text":"t","category":"IMP","answers":{"STEP 1":"NO","STEP 4":"NO"},"label":1})"
            << "\n";
        out << "garbage line\n";
    }
    auto result = load_examples(dir.file("corpus.jsonl"), g);
    CHECK(result.examples.size() == 1);
    CHECK(result.examples[0].post.id == "ok-1");
    REQUIRE(result.quarantined.size() == 2);
    CHECK_FALSE(result.quarantined[0].second.empty());
}

TEST_CASE("split produces the documented sizes on the 2000-example corpus") {
    auto corpus = synthetic_corpus().all();
    REQUIRE(corpus.size() == 2000);
    auto s = split(corpus, 0.2, 0.2, 42);
    CHECK(s.test.size() == 400);
    CHECK(s.validation.size() == 320);
    CHECK(s.train.size() == 1280);

    // partitions are disjoint and cover the corpus
    std::set<std::string> ids;
    for (const auto* part : {&s.train, &s.validation, &s.test})
        for (const auto& ex : *part) CHECK(ids.insert(ex.post.id).second);
    CHECK(ids.size() == 2000);
}

TEST_CASE("split is deterministic and the test partition is seed-invariant") {
    auto corpus = synthetic_corpus().all();
    auto a = split(corpus, 0.2, 0.2, 1);
    auto b = split(corpus, 0.2, 0.2, 1);
    auto c = split(corpus, 0.2, 0.2, 2);

    auto ids = [](const std::vector<LabeledExample>& v) {
        std::vector<std::string> out;
        for (const auto& ex : v) out.push_back(ex.post.id);
        return out;
    };
    CHECK(ids(a.train) == ids(b.train));
    CHECK(ids(a.validation) == ids(b.validation));
    CHECK(ids(a.test) == ids(b.test));

    CHECK(ids(a.test) == ids(c.test));            // fixed across seeds
    CHECK(ids(a.validation) != ids(c.validation));  // varies with the seed
}

TEST_CASE("split stratifies by category and label") {
    auto corpus = synthetic_corpus().all();
    auto s = split(corpus, 0.2, 0.2, 7);
    auto full = label_distribution(corpus);
    auto test = label_distribution(s.test);
    for (int c = 0; c < kNumCategories; ++c)
        for (int l = 0; l < kNumLabels; ++l) {
            double expected = full[c][l] * 0.2;
            CHECK(std::abs(test[c][l] - expected) <= 1.0);  // largest-remainder rounding
        }
}

TEST_CASE("synthetic corpus matches the published distribution") {
    auto corpus = synthetic_corpus();
    CHECK(label_distribution(corpus.dev) == reference_dev_distribution());
    CHECK(label_distribution(corpus.test) == reference_test_distribution());
    GraphSpec g = default_lingo_graph();
    for (const auto& ex : corpus.all()) CHECK_NOTHROW(check_path_consistency(ex, g));
}

TEST_CASE("chi-square: identical proportions give statistic 0, p 1") {
    auto r = chi_square_2xk({50, 50}, {50, 50});
    CHECK(r.statistic == doctest::Approx(0.0));
    CHECK(r.p_value == doctest::Approx(1.0));

    auto scaled = chi_square_2xk({30, 60, 10}, {60, 120, 20});
    CHECK(scaled.statistic == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("chi-square matches the hand-computed 2x2 oracle") {
    // rows (90,10) and (10,90): expected 50 everywhere, every cell deviates
    // by 40, so the statistic is 4 * 40^2 / 50 = 128 with 1 dof.
    auto r = chi_square_2xk({90, 10}, {10, 90});
    CHECK(r.statistic == doctest::Approx(128.0).epsilon(1e-12));
    CHECK(r.dof == 1);
    CHECK(r.p_value < 1e-20);
}

TEST_CASE("chi-square pools empty columns and rejects degenerate tables") {
    auto r = chi_square_2xk({40, 0, 60}, {50, 0, 50});
    CHECK(r.dof == 1);  // middle column pooled away
    CHECK_THROWS_AS(chi_square_2xk({10, 0}, {20, 0}), DegenerateTable);
    CHECK_THROWS_AS(chi_square_2xk({0, 0}, {0, 0}), DegenerateTable);
}

TEST_CASE("gamma_q agrees with closed forms") {
    // Q(1, x) = exp(-x)
    for (double x : {0.1, 1.0, 3.5, 10.0})
        CHECK(gamma_q(1.0, x) == doctest::Approx(std::exp(-x)).epsilon(1e-12));
    // Q(2, x) = (1 + x) exp(-x)
    for (double x : {0.5, 2.0, 7.0})
        CHECK(gamma_q(2.0, x) == doctest::Approx((1 + x) * std::exp(-x)).epsilon(1e-12));
    CHECK(gamma_q(0.5, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("distribution homogeneity of the synthetic partitions is insignificant") {
    auto corpus = synthetic_corpus();
    auto r = distribution_homogeneity(corpus.dev, corpus.test);
    CHECK(r.p_value > 0.05);
}

TEST_CASE("category tag detection") {
    CHECK(category_from_tag("[Impoliteness] some text") == Category::IMP);
    CHECK(category_from_tag("[THREAT] some text") == Category::THREAT);
    CHECK_FALSE(category_from_tag("no tag here").has_value());
    CHECK_FALSE(category_from_code("XYZ").has_value());
    for (Category c : {Category::IMP, Category::HSST, Category::PHAVPR, Category::THREAT})
        CHECK(category_from_code(category_code(c)) == c);
}
