#include "lingo/prompt.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lingo/errors.hpp"

namespace lingo {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* kCategoryDefinitions =
    "Always taken from the first square-bracket tag (e.g., [Impoliteness], [Hate Speech and "
    "Stereotyping], [Physical Harm and Violent Political Rhetoric], [Threats to Democratic "
    "Institutions and Values]).\n"
    "\n"
    "Impoliteness: messages including rudeness/disrespect (name-calling, aspersions, calling "
    "someone a liar, hyperbole, non-cooperation, pejoratives, vulgarity, belittling, shouting "
    "via ALL-CAPS or excessive \"!\" when context supports it).\n"
    "Hate Speech and Stereotyping: discriminatory content targeting protected groups (gender "
    "identity, sexual orientation, religion, race, nationality, ideology, disability); "
    "over-generalizations, out-group demeaning; (do NOT include purely individual appearance "
    "insults unless tied to group identity).\n"
    "Physical Harm and Violent Political Rhetoric: threats/advocacy/praise of physical harm or "
    "violence; direct or metaphorical calls for harm; justification of violence for political "
    "ends.\n"
    "Threats to Democratic Institutions and Values: advocacy or approval of actions undermining "
    "elections/institutions/rule of law/press freedom/civil rights; promotion of autocracy; "
    "unfounded claims that delegitimize institutions.\n";

const char* kMainTask =
    "You are an annotator interpreting the intent of uncivil Portuguese social media discourse "
    "about Brazilian politics on X (formerly Twitter). Analyze the intent behind the given post "
    "and assign the most appropriate intent label from the list below (apply ONLY to the target "
    "category from the tag):\n"
    "1 = Explicit {{CATEGORY}}: direct, overt {{CATEGORY}}.\n"
    "2 = Implicit {{CATEGORY}}: indirect, veiled {{CATEGORY}}.\n"
    "3 = Report {{CATEGORY}}: quotes/refers to {{CATEGORY}} content without opinion.\n"
    "4 = Intensify {{CATEGORY}}: quotes/refers to {{CATEGORY}} content and agrees/amplifies.\n"
    "5 = Counter {{CATEGORY}}: quotes/refers to {{CATEGORY}} content and criticizes/disagrees.\n"
    "6 = Escalate {{CATEGORY}}: responds to {{CATEGORY}} content with {{CATEGORY}}.\n"
    "0 = Does not fit any of the above patterns.\n";

const char* kStep1 =
    "STEP 1: Check Reference. Question: Does the text refer to another person's statement or "
    "behavior? If NO -> go to STEP 4. If YES -> go to STEP 2.";
const char* kStep2 =
    "STEP 2: Check Referenced Content. Question: Does the referenced statement or behavior "
    "contain explicit or implicit {{CATEGORY}}? If NO -> go to STEP 4. If YES -> go to STEP 3.";
const char* kStep3 =
    "STEP 3: Stance Toward Referenced Content. Question: How does the author respond to the "
    "referenced {{CATEGORY}}? Report (3): mentions without opinion. Intensify (4): agrees or "
    "amplifies. Counter (5): criticizes or disagrees. Escalate (6): responds to {{CATEGORY}} "
    "content with {{CATEGORY}}.";
const char* kStep4 =
    "STEP 4: Check Original Content. Question: Does the author's own text contain explicit or "
    "implicit {{CATEGORY}}? If NO -> Label 0. If YES -> go to STEP 5.";
const char* kStep5 =
    "STEP 5: Type Classification. Question: Is the {{CATEGORY}} expressed directly or "
    "indirectly? Explicit (1): direct, overt {{CATEGORY}}. Implicit (2): indirect, veiled "
    "{{CATEGORY}}.";

const char* kOutputFormat =
    "Return ONLY valid JSON: {\"LABEL\": <int>, \"REASONING\": {\"STEP 1\": \"YES\"/\"NO\", "
    "...}}\n"
    "\n"
    "Examples:\n"
    "(1) STEP 1=NO -> STEP 4=YES -> STEP 5: {\"LABEL\": 1, \"REASONING\": {\"STEP 1\": \"NO\", "
    "\"STEP 4\": \"YES\", \"STEP 5\": \"Explicit\"}}\n"
    "(2) STEP 1=YES -> STEP 2=YES -> STEP 3: {\"LABEL\": 5, \"REASONING\": {\"STEP 1\": "
    "\"YES\", \"STEP 2\": \"YES\", \"STEP 3\": \"Counter\"}}\n"
    "(3) STEP 1=YES -> STEP 2=NO -> STEP 4=NO: {\"LABEL\": 0, \"REASONING\": {\"STEP 1\": "
    "\"YES\", \"STEP 2\": \"NO\", \"STEP 4\": \"NO\"}}\n"
    "(4) STEP 1=NO -> STEP 4=NO: {\"LABEL\": 0, \"REASONING\": {\"STEP 1\": \"NO\", \"STEP "
    "4\": \"NO\"}}\n";

const char* kLabelOnlyFormat = "Return ONLY valid JSON: {\"LABEL\": <int>}\n";

const char* kCotInstruction =
    "Reason step by step about the post's intent before deciding, then give your final "
    "answer.\n";

std::string substitute_category(const std::string& tmpl, const Post& post) {
    const std::string slot = "{{CATEGORY}}";
    const std::string value = category_full_name(post.category);
    std::string out = tmpl;
    std::size_t pos = 0;
    while ((pos = out.find(slot, pos)) != std::string::npos) {
        out.replace(pos, slot.size(), value);
        pos += value.size();
    }
    if (auto open = out.find("{{"); open != std::string::npos)
        throw UnresolvedPlaceholder("unresolved slot near: " + out.substr(open, 24));
    return out;
}

std::string tagged_input(const Post& post) {
    if (category_from_tag(post.text)) return post.text;
    return "[" + category_full_name(post.category) + "] " + post.text;
}

}  // namespace

PromptBundle default_bundle() {
    PromptBundle b;
    b.category_definitions = kCategoryDefinitions;
    b.main_task = kMainTask;
    b.node_instructions = {
        {"STEP 1", kStep1}, {"STEP 2", kStep2}, {"STEP 3", kStep3},
        {"STEP 4", kStep4}, {"STEP 5", kStep5},
    };
    b.output_format = kOutputFormat;
    return b;
}

PromptBundle direct_bundle() {
    PromptBundle b;
    b.category_definitions = kCategoryDefinitions;
    b.main_task = kMainTask;
    b.output_format = kLabelOnlyFormat;
    return b;
}

std::string node_section_open(const std::string& node_id) {
    return "[[NODE: " + node_id + "]]";
}

std::string node_section_close(const std::string& node_id) {
    return "[[/NODE: " + node_id + "]]";
}

std::string render_demo(const Demonstration& demo, RenderMode mode) {
    std::ostringstream os;
    os << "Input: " << tagged_input(demo.example.post) << "\n";
    if (!demo.rationale.empty()) os << "Rationale: " << demo.rationale << "\n";
    json out;
    out["LABEL"] = static_cast<int>(demo.example.label);
    if (mode == RenderMode::lingo && !demo.example.node_answers.empty()) {
        json reasoning = json::object();
        for (const auto& [node, answer] : demo.example.node_answers) reasoning[node] = answer;
        out["REASONING"] = reasoning;
    }
    os << "Output: " << out.dump() << "\n";
    return os.str();
}

std::string render_with_query_demos(const PromptBundle& bundle, const Post& post,
                                    RenderMode mode, const std::vector<Demonstration>& extra) {
    std::ostringstream os;
    os << "## CATEGORY DEFINITIONS\n" << bundle.category_definitions << "\n";
    os << "## TASK\n" << substitute_category(bundle.main_task, post) << "\n";

    if (mode == RenderMode::cot) os << kCotInstruction << "\n";

    if (mode == RenderMode::lingo && !bundle.node_instructions.empty()) {
        os << "## REASONING STEPS\n";
        for (const auto& [node, text] : bundle.node_instructions) {
            os << node_section_open(node) << "\n"
               << substitute_category(text, post) << "\n"
               << node_section_close(node) << "\n";
        }
        os << "\n";
    }

    auto emit_demos = [&] {
        if (bundle.demos.empty() && extra.empty()) return;
        os << "## DEMONSTRATIONS\n";
        int i = 0;
        for (const auto& d : bundle.demos) os << "Example " << ++i << ":\n" << render_demo(d, mode);
        for (const auto& d : extra) os << "Example " << ++i << ":\n" << render_demo(d, mode);
        os << "\n";
    };

    if (bundle.demos_before_output_format) emit_demos();
    os << "## OUTPUT FORMAT\n";
    if (mode == RenderMode::lingo)
        os << bundle.output_format << "\n";
    else
        os << kLabelOnlyFormat << "\n";
    if (!bundle.demos_before_output_format) emit_demos();

    os << "## INPUT\n" << tagged_input(post) << "\n";
    return os.str();
}

std::string render(const PromptBundle& bundle, const Post& post, RenderMode mode) {
    return render_with_query_demos(bundle, post, mode, {});
}

PromptBundle patch_node(const PromptBundle& bundle, const std::string& node_id,
                        const std::string& new_instruction) {
    if (!bundle.node_instructions.count(node_id))
        throw UnknownNode("no instruction for node " + node_id);
    PromptBundle out = bundle;
    out.node_instructions[node_id] = new_instruction;
    return out;
}

PromptBundle attach_demos(const PromptBundle& bundle, const std::vector<Demonstration>& demos,
                          const GraphSpec& graph) {
    PromptBundle out = bundle;
    for (const auto& d : demos) {
        try {
            check_path_consistency(d.example, graph);
        } catch (const Error& e) {
            throw InconsistentDemo("demo " + d.example.post.id + ": " + e.what());
        }
        out.demos.push_back(d);
    }
    return out;
}

// ---- serialization -----------------------------------------------------

static json demo_to_json(const Demonstration& d) {
    json j = json::parse(example_to_jsonl(d.example));
    if (!d.rationale.empty()) j["rationale"] = d.rationale;
    return j;
}

static Demonstration demo_from_json(const json& j) {
    Demonstration d;
    d.example = example_from_jsonl(j.dump());
    d.rationale = j.value("rationale", "");
    return d;
}

std::string bundle_to_json(const PromptBundle& bundle) {
    json nodes = json::object();
    for (const auto& [id, text] : bundle.node_instructions) nodes[id] = text;
    json demos = json::array();
    for (const auto& d : bundle.demos) demos.push_back(demo_to_json(d));
    json j = {{"category_definitions", bundle.category_definitions},
              {"main_task", bundle.main_task},
              {"node_instructions", nodes},
              {"output_format", bundle.output_format},
              {"demos", demos},
              {"demos_before_output_format", bundle.demos_before_output_format}};
    return j.dump(2) + "\n";
}

PromptBundle bundle_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bundle: invalid JSON: ") + e.what());
    }
    PromptBundle b;
    try {
        b.category_definitions = j.at("category_definitions").get<std::string>();
        b.main_task = j.at("main_task").get<std::string>();
        for (const auto& [id, t] : j.at("node_instructions").items())
            b.node_instructions[id] = t.get<std::string>();
        b.output_format = j.at("output_format").get<std::string>();
        for (const auto& jd : j.at("demos")) b.demos.push_back(demo_from_json(jd));
        b.demos_before_output_format = j.value("demos_before_output_format", true);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bundle: bad structure: ") + e.what());
    }
    return b;
}

// ---- template files ----------------------------------------------------

static std::string node_file_name(const std::string& node_id) {
    std::string name = node_id;
    for (auto& c : name)
        if (c == ' ') c = '_';
    return "node_" + name + ".txt";
}

static std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("cannot open template file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

static void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write template file: " + path.string());
    out << text;
}

PromptBundle load_bundle_templates(const std::string& dir) {
    fs::path base(dir);
    PromptBundle b;
    b.category_definitions = read_file(base / "category_definitions.txt");
    b.main_task = read_file(base / "main_task.txt");
    b.output_format = read_file(base / "output_format.txt");
    for (const auto& entry : fs::directory_iterator(base)) {
        std::string name = entry.path().filename().string();
        if (name.rfind("node_", 0) != 0 || entry.path().extension() != ".txt") continue;
        std::string id = name.substr(5, name.size() - 9);
        for (auto& c : id)
            if (c == '_') c = ' ';
        b.node_instructions[id] = read_file(entry.path());
    }
    return b;
}

void save_bundle_templates(const std::string& dir, const PromptBundle& bundle) {
    fs::create_directories(dir);
    fs::path base(dir);
    write_file(base / "category_definitions.txt", bundle.category_definitions);
    write_file(base / "main_task.txt", bundle.main_task);
    write_file(base / "output_format.txt", bundle.output_format);
    for (const auto& [id, text] : bundle.node_instructions)
        write_file(base / node_file_name(id), text);
}

}  // namespace lingo
