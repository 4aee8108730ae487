// Regenerates the bundled data directory: default graph spec, prompt
// templates, and the synthetic corpus. Everything written here is
// deterministic, so repeated runs are byte-identical.
#include <filesystem>
#include <fstream>
#include <iostream>

#include "lingo/corpus.hpp"
#include "lingo/datagen.hpp"
#include "lingo/graph.hpp"
#include "lingo/prompt.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
    fs::path root = argc > 1 ? argv[1] : "data";
    fs::create_directories(root / "graph");
    fs::create_directories(root / "corpus");

    {
        std::ofstream out(root / "graph" / "default_graph.json",
                          std::ios::binary | std::ios::trunc);
        out << lingo::graph_to_json(lingo::default_lingo_graph());
    }
    lingo::save_bundle_templates((root / "templates").string(), lingo::default_bundle());

    lingo::SyntheticCorpus corpus = lingo::synthetic_corpus();
    lingo::save_examples((root / "corpus" / "dev.jsonl").string(), corpus.dev);
    lingo::save_examples((root / "corpus" / "test.jsonl").string(), corpus.test);
    lingo::save_examples((root / "corpus" / "full.jsonl").string(), corpus.all());

    std::cout << "wrote " << root.string() << ": graph, templates, corpus ("
              << corpus.dev.size() << " dev + " << corpus.test.size() << " test)\n";
    return 0;
}
