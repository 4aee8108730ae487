#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lingo {

// The seven intent classes. Numeric values are part of the wire format.
enum class IntentLabel : int {
    Other = 0,
    Explicit = 1,
    Implicit = 2,
    Report = 3,
    Intensify = 4,
    Counter = 5,
    Escalate = 6,
};

inline constexpr int kNumLabels = 7;

std::string label_name(IntentLabel label);
std::optional<IntentLabel> label_from_int(int value);

// A transition either routes to another node or terminates with a label.
using Transition = std::variant<std::string, IntentLabel>;

struct NodeSpec {
    std::string id;
    std::string question_key;             // key into PromptBundle::node_instructions
    std::vector<std::string> answers;     // finite answer set, canonical casing
    std::map<std::string, Transition> transitions;  // total over answers
};

struct GraphSpec {
    std::vector<NodeSpec> nodes;
    std::string root;

    const NodeSpec* find(const std::string& id) const;
};

struct ReasoningStep {
    std::string node;
    std::string answer;

    bool operator==(const ReasoningStep&) const = default;
};

struct ReasoningPath {
    std::vector<ReasoningStep> steps;
    IntentLabel terminal = IntentLabel::Other;

    bool operator==(const ReasoningPath&) const = default;
};

struct GraphDefect {
    std::string node;    // offending node id ("" for graph-level defects)
    std::string answer;  // offending answer, when applicable
    std::string rule;    // violated rule, e.g. "totality", "acyclicity"
    std::string detail;
};

struct ValidationReport {
    std::vector<GraphDefect> defects;

    bool ok() const { return defects.empty(); }
    std::string to_string() const;
};

// Strips surrounding whitespace and upper-cases for comparison; model output
// casing varies, the stored canonical form is the node's declared answer.
std::string canonical_answer(const std::string& raw);

// Resolves a raw answer against a node's answer set (case-insensitive).
std::optional<std::string> match_answer(const NodeSpec& node, const std::string& raw);

ValidationReport validate_graph(const GraphSpec& spec);

// Walks the graph from the root; `answerer` decides each node.
// Throws AnswerOutOfDomain if a returned answer is not in the node's set.
ReasoningPath traverse(const GraphSpec& spec,
                       const std::function<std::string(const NodeSpec&)>& answerer);

// Replays a fixed node->answer assignment through the graph.
ReasoningPath replay(const GraphSpec& spec, const std::map<std::string, std::string>& answers);

// Every distinct root-to-terminal answer sequence, depth first, answers in
// declaration order.
std::vector<ReasoningPath> enumerate_paths(const GraphSpec& spec);

// The five-step graph: reference -> referenced incivility -> stance,
// falling through to own-content incivility -> explicit/implicit.
GraphSpec default_lingo_graph();

// Graph-spec file (JSON): {"root": ..., "nodes": [...]}.
GraphSpec parse_graph_json(const std::string& text);
std::string graph_to_json(const GraphSpec& spec);
GraphSpec load_graph_file(const std::string& path);

}  // namespace lingo
