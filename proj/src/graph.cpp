#include "lingo/graph.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lingo/errors.hpp"

namespace lingo {

using nlohmann::json;

std::string label_name(IntentLabel label) {
    switch (label) {
        case IntentLabel::Other: return "Other";
        case IntentLabel::Explicit: return "Explicit";
        case IntentLabel::Implicit: return "Implicit";
        case IntentLabel::Report: return "Report";
        case IntentLabel::Intensify: return "Intensify";
        case IntentLabel::Counter: return "Counter";
        case IntentLabel::Escalate: return "Escalate";
    }
    return "?";
}

std::optional<IntentLabel> label_from_int(int value) {
    if (value < 0 || value >= kNumLabels) return std::nullopt;
    return static_cast<IntentLabel>(value);
}

const NodeSpec* GraphSpec::find(const std::string& id) const {
    for (const auto& n : nodes)
        if (n.id == id) return &n;
    return nullptr;
}

std::string canonical_answer(const std::string& raw) {
    auto b = raw.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = raw.find_last_not_of(" \t\r\n");
    std::string out = raw.substr(b, e - b + 1);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

std::optional<std::string> match_answer(const NodeSpec& node, const std::string& raw) {
    const std::string canon = canonical_answer(raw);
    for (const auto& a : node.answers)
        if (canonical_answer(a) == canon) return a;
    return std::nullopt;
}

std::string ValidationReport::to_string() const {
    if (defects.empty()) return "graph ok: no defects\n";
    std::ostringstream os;
    for (const auto& d : defects) {
        os << "defect [" << d.rule << "]";
        if (!d.node.empty()) os << " node=" << d.node;
        if (!d.answer.empty()) os << " answer=" << d.answer;
        os << ": " << d.detail << "\n";
    }
    return os.str();
}

ValidationReport validate_graph(const GraphSpec& spec) {
    ValidationReport report;
    auto add = [&](std::string node, std::string answer, std::string rule, std::string detail) {
        report.defects.push_back({std::move(node), std::move(answer), std::move(rule), std::move(detail)});
    };

    std::set<std::string> ids;
    for (const auto& n : spec.nodes) {
        if (!ids.insert(n.id).second)
            add(n.id, "", "unique-id", "duplicate node id");
    }
    if (spec.find(spec.root) == nullptr)
        add(spec.root, "", "root", "root node not present");

    for (const auto& n : spec.nodes) {
        std::set<std::string> canon;
        for (const auto& a : n.answers) {
            if (!canon.insert(canonical_answer(a)).second)
                add(n.id, a, "unique-answer", "answer duplicated within node");
            if (!n.transitions.count(a))
                add(n.id, a, "totality", "no transition defined for answer");
        }
        for (const auto& [a, t] : n.transitions) {
            if (std::find(n.answers.begin(), n.answers.end(), a) == n.answers.end())
                add(n.id, a, "transition-domain", "transition for answer not in answer set");
            if (const auto* next = std::get_if<std::string>(&t)) {
                if (ids.count(*next) == 0)
                    add(n.id, a, "dangling-edge", "transition targets unknown node " + *next);
            }
        }
    }
    if (!report.ok()) return report;  // structural defects make the walks below unreliable

    // Reachability from root.
    std::set<std::string> reached;
    std::vector<std::string> stack{spec.root};
    while (!stack.empty()) {
        std::string id = stack.back();
        stack.pop_back();
        if (!reached.insert(id).second) continue;
        for (const auto& [a, t] : spec.find(id)->transitions)
            if (const auto* next = std::get_if<std::string>(&t)) stack.push_back(*next);
    }
    for (const auto& n : spec.nodes)
        if (!reached.count(n.id))
            add(n.id, "", "reachability", "node unreachable from root");

    // Acyclicity: DFS with colors over reachable nodes.
    std::map<std::string, int> color;  // 0 white, 1 gray, 2 black
    std::function<void(const std::string&)> dfs = [&](const std::string& id) {
        color[id] = 1;
        for (const auto& [a, t] : spec.find(id)->transitions) {
            if (const auto* next = std::get_if<std::string>(&t)) {
                int c = color[*next];
                if (c == 1)
                    add(id, a, "acyclicity", "edge to " + *next + " closes a cycle");
                else if (c == 0)
                    dfs(*next);
            }
        }
        color[id] = 2;
    };
    dfs(spec.root);
    return report;
}

ReasoningPath traverse(const GraphSpec& spec,
                       const std::function<std::string(const NodeSpec&)>& answerer) {
    ReasoningPath path;
    const NodeSpec* node = spec.find(spec.root);
    while (true) {
        if (node == nullptr) throw Error("traverse: missing node");
        std::string raw = answerer(*node);
        auto matched = match_answer(*node, raw);
        if (!matched)
            throw AnswerOutOfDomain("answer '" + raw + "' not in answer set of " + node->id);
        path.steps.push_back({node->id, *matched});
        const Transition& t = node->transitions.at(*matched);
        if (const auto* label = std::get_if<IntentLabel>(&t)) {
            path.terminal = *label;
            return path;
        }
        node = spec.find(std::get<std::string>(t));
    }
}

ReasoningPath replay(const GraphSpec& spec, const std::map<std::string, std::string>& answers) {
    return traverse(spec, [&](const NodeSpec& node) -> std::string {
        auto it = answers.find(node.id);
        if (it == answers.end())
            throw ChainPathError("no answer provided for node " + node.id);
        return it->second;
    });
}

static void enumerate_from(const GraphSpec& spec, const NodeSpec& node, ReasoningPath& prefix,
                           std::vector<ReasoningPath>& out) {
    for (const auto& a : node.answers) {
        prefix.steps.push_back({node.id, a});
        const Transition& t = node.transitions.at(a);
        if (const auto* label = std::get_if<IntentLabel>(&t)) {
            ReasoningPath done = prefix;
            done.terminal = *label;
            out.push_back(std::move(done));
        } else {
            enumerate_from(spec, *spec.find(std::get<std::string>(t)), prefix, out);
        }
        prefix.steps.pop_back();
    }
}

std::vector<ReasoningPath> enumerate_paths(const GraphSpec& spec) {
    std::vector<ReasoningPath> out;
    ReasoningPath prefix;
    enumerate_from(spec, *spec.find(spec.root), prefix, out);
    return out;
}

GraphSpec default_lingo_graph() {
    GraphSpec g;
    g.root = "STEP 1";
    g.nodes = {
        {"STEP 1", "STEP 1", {"YES", "NO"},
         {{"YES", Transition{"STEP 2"}}, {"NO", Transition{"STEP 4"}}}},
        {"STEP 2", "STEP 2", {"YES", "NO"},
         {{"YES", Transition{"STEP 3"}}, {"NO", Transition{"STEP 4"}}}},
        {"STEP 3", "STEP 3", {"Report", "Intensify", "Counter", "Escalate"},
         {{"Report", Transition{IntentLabel::Report}},
          {"Intensify", Transition{IntentLabel::Intensify}},
          {"Counter", Transition{IntentLabel::Counter}},
          {"Escalate", Transition{IntentLabel::Escalate}}}},
        {"STEP 4", "STEP 4", {"YES", "NO"},
         {{"YES", Transition{"STEP 5"}}, {"NO", Transition{IntentLabel::Other}}}},
        {"STEP 5", "STEP 5", {"Explicit", "Implicit"},
         {{"Explicit", Transition{IntentLabel::Explicit}},
          {"Implicit", Transition{IntentLabel::Implicit}}}},
    };
    return g;
}

static json transition_to_json(const Transition& t) {
    if (const auto* label = std::get_if<IntentLabel>(&t))
        return json{{"label", static_cast<int>(*label)}};
    return json{{"next", std::get<std::string>(t)}};
}

static Transition transition_from_json(const json& j) {
    if (j.contains("label")) {
        auto label = label_from_int(j.at("label").get<int>());
        if (!label) throw ConfigError("graph spec: label out of range");
        return Transition{*label};
    }
    return Transition{j.at("next").get<std::string>()};
}

std::string graph_to_json(const GraphSpec& spec) {
    json nodes = json::array();
    for (const auto& n : spec.nodes) {
        json trans = json::object();
        for (const auto& [a, t] : n.transitions) trans[a] = transition_to_json(t);
        nodes.push_back({{"id", n.id},
                         {"question_key", n.question_key},
                         {"answers", n.answers},
                         {"transitions", trans}});
    }
    json root = {{"root", spec.root}, {"nodes", nodes}};
    return root.dump(2) + "\n";
}

GraphSpec parse_graph_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("graph spec: invalid JSON: ") + e.what());
    }
    GraphSpec spec;
    try {
        spec.root = j.at("root").get<std::string>();
        for (const auto& jn : j.at("nodes")) {
            NodeSpec n;
            n.id = jn.at("id").get<std::string>();
            n.question_key = jn.value("question_key", n.id);
            n.answers = jn.at("answers").get<std::vector<std::string>>();
            for (const auto& [a, jt] : jn.at("transitions").items())
                n.transitions.emplace(a, transition_from_json(jt));
            spec.nodes.push_back(std::move(n));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("graph spec: bad structure: ") + e.what());
    }
    return spec;
}

GraphSpec load_graph_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("cannot open graph spec file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_graph_json(buf.str());
}

}  // namespace lingo
