#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "lingo/errors.hpp"
#include "lingo/prompt.hpp"

using namespace lingo;

namespace {

Post make_post(const std::string& text, Category cat = Category::IMP) {
    Post p;
    p.id = "p-1";
    p.text = text;
    p.category = cat;
    return p;
}

Demonstration make_demo(const std::string& id, IntentLabel label,
                        std::map<std::string, std::string> answers,
                        const std::string& rationale = "") {
    Demonstration d;
    d.example.post.id = id;
    d.example.post.text = "demo " + id;
    d.example.post.category = Category::IMP;
    d.example.label = label;
    d.example.node_answers = std::move(answers);
    d.rationale = rationale;
    return d;
}

// Region of `text` between the open/close delimiters of one node section.
std::string node_region(const std::string& text, const std::string& node_id) {
    auto open = text.find(node_section_open(node_id));
    auto close = text.find(node_section_close(node_id));
    REQUIRE(open != std::string::npos);
    REQUIRE(close != std::string::npos);
    REQUIRE(open < close);
    return text.substr(open, close - open);
}

}  // namespace

TEST_CASE("default bundle carries the five step instructions verbatim") {
    PromptBundle b = default_bundle();
    REQUIRE(b.node_instructions.size() == 5);
    CHECK(b.node_instructions.at("STEP 1").rfind("STEP 1: Check Reference.", 0) == 0);
    CHECK(b.node_instructions.at("STEP 2").rfind("STEP 2: Check Referenced Content.", 0) == 0);
    CHECK(b.node_instructions.at("STEP 3").rfind("STEP 3: Stance Toward Referenced Content.", 0) ==
          0);
    CHECK(b.node_instructions.at("STEP 4").rfind("STEP 4: Check Original Content.", 0) == 0);
    CHECK(b.node_instructions.at("STEP 5").rfind("STEP 5: Type Classification.", 0) == 0);
    CHECK(b.main_task.find("0 = Does not fit any of the above patterns.") != std::string::npos);
    CHECK(b.output_format.find("\"REASONING\"") != std::string::npos);
}

TEST_CASE("render emits sections in order and substitutes the category") {
    Post post = make_post("some uncivil text", Category::HSST);
    std::string text = render(default_bundle(), post, RenderMode::lingo);

    auto defs = text.find("## CATEGORY DEFINITIONS");
    auto task = text.find("## TASK");
    auto steps = text.find("## REASONING STEPS");
    auto fmt = text.find("## OUTPUT FORMAT");
    auto input = text.find("## INPUT");
    REQUIRE(defs != std::string::npos);
    CHECK(defs < task);
    CHECK(task < steps);
    CHECK(steps < fmt);
    CHECK(fmt < input);

    CHECK(text.find("{{CATEGORY}}") == std::string::npos);
    CHECK(text.find("Explicit Hate Speech and Stereotyping") != std::string::npos);
    // untagged posts get the category tag prepended in the input section
    CHECK(text.find("[Hate Speech and Stereotyping] some uncivil text") != std::string::npos);
}

TEST_CASE("already-tagged posts are not double-tagged") {
    Post post = make_post("[Impoliteness] already tagged", Category::IMP);
    std::string text = render(default_bundle(), post, RenderMode::zero_shot);
    CHECK(text.find("[Impoliteness] [Impoliteness]") == std::string::npos);
    CHECK(text.find("[Impoliteness] already tagged") != std::string::npos);
}

TEST_CASE("zero-shot and CoT renders omit the step instructions") {
    Post post = make_post("text");
    std::string zs = render(default_bundle(), post, RenderMode::zero_shot);
    CHECK(zs.find("## REASONING STEPS") == std::string::npos);
    CHECK(zs.find("\"REASONING\"") == std::string::npos);  // label-only schema
    std::string cot = render(default_bundle(), post, RenderMode::cot);
    CHECK(cot.find("## REASONING STEPS") == std::string::npos);
    CHECK(cot.find("step by step") != std::string::npos);
    CHECK(zs.find("step by step") == std::string::npos);
}

TEST_CASE("unresolved placeholders are rejected") {
    PromptBundle b = default_bundle();
    b.main_task += "\nleftover {{MYSTERY}} slot";
    CHECK_THROWS_AS(render(b, make_post("t"), RenderMode::lingo), UnresolvedPlaceholder);
}

TEST_CASE("patch_node changes only the region between that node's delimiters") {
    PromptBundle before = default_bundle();
    PromptBundle after = patch_node(before, "STEP 2", "STEP 2: Rewritten. If NO -> go to STEP 4. "
                                                      "If YES -> go to STEP 3.");
    CHECK(before.node_instructions.at("STEP 2") != after.node_instructions.at("STEP 2"));

    Post post = make_post("t");
    std::string a = render(before, post, RenderMode::lingo);
    std::string b = render(after, post, RenderMode::lingo);
    for (const char* node : {"STEP 1", "STEP 3", "STEP 4", "STEP 5"})
        CHECK(node_region(a, node) == node_region(b, node));
    CHECK(node_region(a, "STEP 2") != node_region(b, "STEP 2"));

    // everything outside the patched region is untouched
    auto strip = [](std::string text, const std::string& node) {
        auto open = text.find(node_section_open(node));
        auto close = text.find(node_section_close(node));
        text.erase(open, close - open);
        return text;
    };
    CHECK(strip(a, "STEP 2") == strip(b, "STEP 2"));

    CHECK_THROWS_AS(patch_node(before, "STEP 9", "x"), UnknownNode);
}

TEST_CASE("attach_demos validates against the graph") {
    GraphSpec g = default_lingo_graph();
    auto good = make_demo("d-1", IntentLabel::Explicit,
                          {{"STEP 1", "NO"}, {"STEP 4", "YES"}, {"STEP 5", "Explicit"}});
    auto bundle = attach_demos(default_bundle(), {good}, g);
    REQUIRE(bundle.demos.size() == 1);
    CHECK(bundle.demos[0] == good);

    auto bad = make_demo("d-2", IntentLabel::Implicit,
                         {{"STEP 1", "NO"}, {"STEP 4", "YES"}, {"STEP 5", "Explicit"}});
    CHECK_THROWS_AS(attach_demos(default_bundle(), {bad}, g), InconsistentDemo);
}

TEST_CASE("demo rendering and placement") {
    GraphSpec g = default_lingo_graph();
    auto demo = make_demo("d-1", IntentLabel::Counter,
                          {{"STEP 1", "YES"}, {"STEP 2", "YES"}, {"STEP 3", "Counter"}},
                          "quotes and pushes back");
    PromptBundle bundle = attach_demos(default_bundle(), {demo}, g);
    Post post = make_post("t");

    std::string text = render(bundle, post, RenderMode::lingo);
    auto demos_at = text.find("## DEMONSTRATIONS");
    auto fmt_at = text.find("## OUTPUT FORMAT");
    REQUIRE(demos_at != std::string::npos);
    CHECK(demos_at < fmt_at);  // default placement: before the format block
    CHECK(text.find("\"LABEL\":5") != std::string::npos);
    CHECK(text.find("Rationale: quotes and pushes back") != std::string::npos);
    CHECK(text.find("\"STEP 3\":\"Counter\"") != std::string::npos);

    bundle.demos_before_output_format = false;
    std::string flipped = render(bundle, post, RenderMode::lingo);
    CHECK(flipped.find("## DEMONSTRATIONS") > flipped.find("## OUTPUT FORMAT"));

    // label-only modes render demos without the reasoning object
    std::string zs = render(bundle, post, RenderMode::zero_shot);
    CHECK(zs.find("\"STEP 3\"") == std::string::npos);
    CHECK(zs.find("\"LABEL\":5") != std::string::npos);
}

TEST_CASE("query-scoped demos are appended after the bundle's own") {
    GraphSpec g = default_lingo_graph();
    auto own = make_demo("own", IntentLabel::Other, {{"STEP 1", "NO"}, {"STEP 4", "NO"}});
    auto extra = make_demo("extra", IntentLabel::Report,
                           {{"STEP 1", "YES"}, {"STEP 2", "YES"}, {"STEP 3", "Report"}});
    PromptBundle bundle = attach_demos(default_bundle(), {own}, g);
    std::string text =
        render_with_query_demos(bundle, make_post("t"), RenderMode::lingo, {extra});
    auto own_at = text.find("demo own");
    auto extra_at = text.find("demo extra");
    REQUIRE(own_at != std::string::npos);
    REQUIRE(extra_at != std::string::npos);
    CHECK(own_at < extra_at);
}

TEST_CASE("bundle JSON round trip") {
    GraphSpec g = default_lingo_graph();
    auto demo = make_demo("d-1", IntentLabel::Other, {{"STEP 1", "NO"}, {"STEP 4", "NO"}},
                          "nothing uncivil of its own");
    PromptBundle bundle = attach_demos(default_bundle(), {demo}, g);
    bundle.demos_before_output_format = false;
    CHECK(bundle_from_json(bundle_to_json(bundle)) == bundle);
    CHECK_THROWS_AS(bundle_from_json("nope"), ConfigError);
    CHECK_THROWS_AS(bundle_from_json("{}"), ConfigError);
}

TEST_CASE("template directory round trip") {
    std::filesystem::path dir = std::filesystem::temp_directory_path() /
                                ("lingo_prompt_test_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    PromptBundle b = default_bundle();
    save_bundle_templates(dir.string(), b);
    PromptBundle loaded = load_bundle_templates(dir.string());
    CHECK(loaded.category_definitions == b.category_definitions);
    CHECK(loaded.main_task == b.main_task);
    CHECK(loaded.output_format == b.output_format);
    CHECK(loaded.node_instructions == b.node_instructions);
    std::filesystem::remove_all(dir);

    CHECK_THROWS_AS(load_bundle_templates((dir / "missing").string()), StorageError);
}

TEST_CASE("direct bundle is label-only") {
    PromptBundle b = direct_bundle();
    CHECK(b.node_instructions.empty());
    CHECK(b.output_format.find("\"REASONING\"") == std::string::npos);
    std::string text = render(b, make_post("t"), RenderMode::zero_shot);
    CHECK(text.find("## REASONING STEPS") == std::string::npos);
}
