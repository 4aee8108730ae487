#pragma once

#include <map>
#include <string>
#include <vector>

#include "lingo/corpus.hpp"
#include "lingo/graph.hpp"

namespace lingo {

// A gold example usable as a few-shot demonstration, optionally with the
// model's own trace text attached.
struct Demonstration {
    LabeledExample example;
    std::string rationale;

    bool operator==(const Demonstration&) const = default;
};

enum class RenderMode { lingo, zero_shot, cot };

struct PromptBundle {
    std::string category_definitions;
    std::string main_task;                               // may contain {{CATEGORY}} slots
    std::map<std::string, std::string> node_instructions;  // node id -> step text
    std::string output_format;
    std::vector<Demonstration> demos;
    bool demos_before_output_format = true;  // placement of the demo block

    bool operator==(const PromptBundle&) const = default;
};

// The paper-box prompt parts with the five step instructions.
PromptBundle default_bundle();

// Direct-optimization variant: no step instructions, label-only output.
PromptBundle direct_bundle();

// Full prompt text for one post. Pure; throws UnresolvedPlaceholder when a
// {{...}} slot survives substitution.
std::string render(const PromptBundle& bundle, const Post& post, RenderMode mode);

// Extra demos rendered for this query only (retrieval policies); appended
// after the bundle's own demos.
std::string render_with_query_demos(const PromptBundle& bundle, const Post& post,
                                    RenderMode mode, const std::vector<Demonstration>& extra);

// Value-semantic instruction patch; only that node's text changes.
PromptBundle patch_node(const PromptBundle& bundle, const std::string& node_id,
                        const std::string& new_instruction);

// Appends demos in order after checking each against the graph.
PromptBundle attach_demos(const PromptBundle& bundle, const std::vector<Demonstration>& demos,
                          const GraphSpec& graph);

// Rendered demo text in the output-format schema the model must emit.
std::string render_demo(const Demonstration& demo, RenderMode mode);

// Delimiters wrapping node sections in the rendered prompt; patches are
// verifiably local to the region between them.
std::string node_section_open(const std::string& node_id);
std::string node_section_close(const std::string& node_id);

// Snapshot serialization (JSON), used for round artifacts.
std::string bundle_to_json(const PromptBundle& bundle);
PromptBundle bundle_from_json(const std::string& text);

// Plain-text template directory: category_definitions.txt, main_task.txt,
// output_format.txt, node_<id>.txt per node.
PromptBundle load_bundle_templates(const std::string& dir);
void save_bundle_templates(const std::string& dir, const PromptBundle& bundle);

}  // namespace lingo
