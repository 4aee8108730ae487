#include "lingo/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lingo/errors.hpp"

namespace lingo {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json provider_to_json(const ProviderConfig& p) {
    return {{"name", p.name},
            {"endpoint", p.endpoint},
            {"model", p.model},
            {"credential_env", p.credential_env},
            {"rate_cap_per_sec", p.rate_cap_per_sec},
            {"retry", {{"max_attempts", p.retry.max_attempts}, {"backoff_ms", p.retry.backoff_ms}}}};
}

ProviderConfig provider_from_json(const json& j, const ProviderConfig& defaults) {
    ProviderConfig p = defaults;
    p.name = j.value("name", p.name);
    p.endpoint = j.value("endpoint", p.endpoint);
    p.model = j.value("model", p.model);
    p.credential_env = j.value("credential_env", p.credential_env);
    p.rate_cap_per_sec = j.value("rate_cap_per_sec", p.rate_cap_per_sec);
    if (j.contains("retry")) {
        p.retry.max_attempts = j["retry"].value("max_attempts", p.retry.max_attempts);
        p.retry.backoff_ms = j["retry"].value("backoff_ms", p.retry.backoff_ms);
    }
    return p;
}

}  // namespace

std::vector<std::string> AppConfig::validate() const {
    std::vector<std::string> defects = run.validate();
    if (corpus_path.empty()) defects.push_back("corpus_path is required");
    if (runs_dir.empty()) defects.push_back("runs_dir must not be empty");
    if (test_ratio <= 0.0 || test_ratio >= 1.0) defects.push_back("test_ratio must be in (0, 1)");
    if (val_ratio <= 0.0 || val_ratio >= 1.0) defects.push_back("val_ratio must be in (0, 1)");
    if (test_ratio + val_ratio >= 1.0)
        defects.push_back("test_ratio + val_ratio must leave room for training data");
    if (embedder != "mock") defects.push_back("unknown embedder: " + embedder);
    if (embed_dim < 2) defects.push_back("embed_dim must be >= 2");
    for (const auto* p : {&instruction_provider, &teacher_provider}) {
        if (p->name != "mock" && p->name != "openai")
            defects.push_back("unknown provider: " + p->name);
        if (p->name == "openai" && p->credential_env.empty())
            defects.push_back("openai provider needs credential_env");
        if (p->name == "openai" && p->endpoint.empty())
            defects.push_back("openai provider needs endpoint");
        if (p->retry.max_attempts < 1)
            defects.push_back("retry.max_attempts must be >= 1");
    }
    return defects;
}

std::string app_config_to_json(const AppConfig& c) {
    json j = {{"run", json::parse(run_config_to_json(c.run))},
              {"instruction_provider", provider_to_json(c.instruction_provider)},
              {"teacher_provider", provider_to_json(c.teacher_provider)},
              {"embedder", c.embedder},
              {"embed_dim", c.embed_dim},
              {"embed_cache_dir", c.embed_cache_dir},
              {"graph_path", c.graph_path},
              {"corpus_path", c.corpus_path},
              {"runs_dir", c.runs_dir},
              {"test_ratio", c.test_ratio},
              {"val_ratio", c.val_ratio},
              {"mock_script_path", c.mock_script_path},
              {"mock_gold_default", c.mock_gold_default},
              {"teacher_script_path", c.teacher_script_path}};
    return j.dump(2) + "\n";
}

AppConfig app_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    AppConfig c;
    try {
        if (j.contains("run")) c.run = run_config_from_json(j["run"].dump());
        if (j.contains("instruction_provider"))
            c.instruction_provider = provider_from_json(j["instruction_provider"],
                                                        c.instruction_provider);
        if (j.contains("teacher_provider"))
            c.teacher_provider = provider_from_json(j["teacher_provider"], c.teacher_provider);
        c.embedder = j.value("embedder", c.embedder);
        c.embed_dim = j.value("embed_dim", c.embed_dim);
        c.embed_cache_dir = j.value("embed_cache_dir", c.embed_cache_dir);
        c.graph_path = j.value("graph_path", c.graph_path);
        c.corpus_path = j.value("corpus_path", c.corpus_path);
        c.runs_dir = j.value("runs_dir", c.runs_dir);
        c.test_ratio = j.value("test_ratio", c.test_ratio);
        c.val_ratio = j.value("val_ratio", c.val_ratio);
        c.mock_script_path = j.value("mock_script_path", c.mock_script_path);
        c.mock_gold_default = j.value("mock_gold_default", c.mock_gold_default);
        c.teacher_script_path = j.value("teacher_script_path", c.teacher_script_path);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: bad structure: ") + e.what());
    }
    return c;
}

AppConfig load_app_config(const std::string& path) {
    return app_config_from_json(read_file(path));
}

MockScript load_mock_script(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("mock script: invalid JSON: ") + e.what());
    }
    MockScript script;
    try {
        // keep the sub-objects alive across iteration (items() holds a reference)
        const json answers = j.value("answers", json::array());
        const json labels = j.value("labels", json::object());
        const json overrides = j.value("raw_overrides", json::object());
        for (const auto& entry : answers) {
            if (!entry.is_array() || entry.size() != 3)
                throw ConfigError("mock script: answers entries must be [id, node, answer]");
            script.answers[{entry[0].get<std::string>(), entry[1].get<std::string>()}] =
                entry[2].get<std::string>();
        }
        for (const auto& [id, label] : labels.items()) script.labels[id] = label.get<int>();
        for (const auto& [id, raw] : overrides.items())
            script.raw_overrides[id] = raw.get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("mock script: bad structure: ") + e.what());
    }
    return script;
}

MockScript gold_script(const std::vector<LabeledExample>& examples) {
    MockScript script;
    for (const auto& ex : examples) {
        for (const auto& [node, answer] : ex.node_answers)
            script.answers[{ex.post.id, node}] = answer;
        script.labels[ex.post.id] = static_cast<int>(ex.label);
    }
    return script;
}

void merge_script(MockScript& base, const MockScript& overrides) {
    for (const auto& [key, answer] : overrides.answers) base.answers[key] = answer;
    for (const auto& [id, label] : overrides.labels) base.labels[id] = label;
    for (const auto& [id, raw] : overrides.raw_overrides) base.raw_overrides[id] = raw;
}

std::map<std::string, std::string> load_teacher_script(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("teacher script: invalid JSON: ") + e.what());
    }
    std::map<std::string, std::string> out;
    for (const auto& [node, rewrite] : j.items()) out[node] = rewrite.get<std::string>();
    return out;
}

}  // namespace lingo
