#pragma once

#include <string>
#include <vector>

#include "lingo/gateway.hpp"
#include "lingo/loop.hpp"

namespace lingo {

// Top-level configuration file for the `run` command (JSON).
struct AppConfig {
    RunConfig run;

    ProviderConfig instruction_provider{.name = "mock"};
    ProviderConfig teacher_provider{.name = "mock"};
    std::string embedder = "mock";  // mock is the only offline embedder
    std::size_t embed_dim = 16;
    std::string embed_cache_dir;  // empty: no disk cache

    std::string graph_path;   // empty: built-in default graph
    std::string corpus_path;  // JSONL corpus, required
    std::string runs_dir = "runs";
    double test_ratio = 0.2;
    double val_ratio = 0.2;

    // Mock-provider scripting. When gold-defaulting is on, the mock answers
    // every node with the example's gold answer unless the script overrides it.
    std::string mock_script_path;
    bool mock_gold_default = true;
    std::string teacher_script_path;  // node id -> rewrite text (JSON object)

    // Collects every defect instead of stopping at the first.
    std::vector<std::string> validate() const;
};

std::string app_config_to_json(const AppConfig& config);
AppConfig app_config_from_json(const std::string& text);
AppConfig load_app_config(const std::string& path);

// Script file: {"answers": [[id, node, answer], ...], "labels": {id: int},
// "raw_overrides": {id: text}}.
MockScript load_mock_script(const std::string& path);

// Gold-default script for a corpus: every example answers its own gold path
// and its label; script-file entries can then override individual cells.
MockScript gold_script(const std::vector<LabeledExample>& examples);
void merge_script(MockScript& base, const MockScript& overrides);

std::map<std::string, std::string> load_teacher_script(const std::string& path);

}  // namespace lingo
