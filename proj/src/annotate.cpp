#include "lingo/annotate.hpp"

#include <cctype>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "lingo/errors.hpp"

namespace lingo {

using nlohmann::json;

namespace {

// Fixed keys for the known answer vocabulary; anything else falls back to a
// unique-prefix match against the node's answers.
const std::map<std::string, std::string> kShortcuts = {
    {"y", "YES"},     {"n", "NO"},       {"r", "Report"},   {"i", "Intensify"},
    {"c", "Counter"}, {"e", "Escalate"}, {"x", "Explicit"}, {"m", "Implicit"},
};

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::optional<std::string> shortcut_answer(const NodeSpec& node, const std::string& input) {
    std::string key = trim(input);
    if (key.empty()) return std::nullopt;
    std::string lower = key;
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (auto it = kShortcuts.find(lower); it != kShortcuts.end())
        if (auto matched = match_answer(node, it->second)) return matched;
    return match_answer(node, key);
}

AnnotateResult annotate_session(std::istream& in, std::ostream& out, const GraphSpec& graph,
                                const PromptBundle& bundle, const std::vector<Post>& posts,
                                const std::set<std::string>& done, const std::string& coder,
                                const std::string& output_path) {
    AnnotateResult result;
    std::ofstream sink(output_path, std::ios::binary | std::ios::app);
    if (!sink) throw StorageError("cannot open annotation output: " + output_path);

    for (const auto& post : posts) {
        if (done.count(post.id)) continue;
        if (result.quit) break;

        out << "\n=== " << post.id << " [" << category_full_name(post.category) << "]\n"
            << post.text << "\n";

        LabeledExample ex;
        ex.post = post;
        ex.coder = coder;
        bool skipped = false;

        const NodeSpec* node = graph.find(graph.root);
        while (node != nullptr) {
            auto instruction = bundle.node_instructions.find(node->id);
            if (instruction != bundle.node_instructions.end()) {
                std::string text = instruction->second;
                const std::string slot = "{{CATEGORY}}";
                std::size_t pos = 0;
                while ((pos = text.find(slot, pos)) != std::string::npos)
                    text.replace(pos, slot.size(), category_full_name(post.category));
                out << "\n" << text << "\n";
            }
            out << node->id << " answers:";
            for (const auto& a : node->answers) out << " " << a;
            out << "  (s=skip post, q=quit)\n> " << std::flush;

            std::string line;
            if (!std::getline(in, line)) {  // EOF: stop cleanly, keep progress
                result.quit = true;
                break;
            }
            std::string key = trim(line);
            if (key == "q" || key == "Q") {
                result.quit = true;
                break;
            }
            if (key == "s" || key == "S") {
                skipped = true;
                break;
            }
            auto answer = shortcut_answer(*node, key);
            if (!answer) {
                out << "unrecognized answer '" << key << "', try again\n";
                continue;
            }
            ex.node_answers[node->id] = *answer;
            const Transition& t = node->transitions.at(*answer);
            if (const auto* terminal = std::get_if<IntentLabel>(&t)) {
                ex.label = *terminal;
                node = nullptr;
            } else {
                node = graph.find(std::get<std::string>(t));
            }
        }

        if (result.quit) break;  // an unfinished post is neither saved nor skipped
        if (skipped) {
            ++result.skipped;
            continue;
        }
        out << "-> " << render_chain(ex, graph) << "\n";
        sink << example_to_jsonl(ex) << "\n" << std::flush;
        if (!sink) throw StorageError("write failed for annotation output: " + output_path);
        ++result.annotated;
    }
    return result;
}

std::vector<Post> load_posts(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("cannot open posts file: " + path);
    std::vector<Post> posts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ConfigError("posts file line " + std::to_string(line_no) + ": " + e.what());
        }
        Post p;
        std::string code;
        try {
            p.id = j.at("id").get<std::string>();
            p.text = j.at("text").get<std::string>();
            code = j.at("category").get<std::string>();
        } catch (const json::exception& e) {
            throw ConfigError("posts file line " + std::to_string(line_no) + ": " + e.what());
        }
        auto category = category_from_code(code);
        if (!category)
            throw ConfigError("posts file line " + std::to_string(line_no) +
                              ": unknown category " + code);
        p.category = *category;
        posts.push_back(std::move(p));
    }
    return posts;
}

std::set<std::string> annotated_ids(const std::string& path, const GraphSpec& graph) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) return {};
    probe.close();
    std::set<std::string> ids;
    for (const auto& ex : load_examples(path, graph).examples) ids.insert(ex.post.id);
    return ids;
}

}  // namespace lingo
