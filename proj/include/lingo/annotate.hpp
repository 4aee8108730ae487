#pragma once

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "lingo/corpus.hpp"
#include "lingo/prompt.hpp"

namespace lingo {

// Single-key shortcut for an answer at some node, e.g. 'y' -> YES.
// Returns the canonical answer, or nullopt when the key matches nothing.
std::optional<std::string> shortcut_answer(const NodeSpec& node, const std::string& input);

struct AnnotateResult {
    std::size_t annotated = 0;
    std::size_t skipped = 0;
    bool quit = false;  // coder asked to stop (q); EOF also ends the session
};

// Interactive annotation loop over `posts`, excluding ids in `done`.
// Walks the graph one question at a time, re-prompting on invalid input;
// every finished item is appended to `output_path` before the next prompt.
// 's' skips the current post, 'q' ends the session.
AnnotateResult annotate_session(std::istream& in, std::ostream& out, const GraphSpec& graph,
                                const PromptBundle& bundle, const std::vector<Post>& posts,
                                const std::set<std::string>& done, const std::string& coder,
                                const std::string& output_path);

// Posts file: one JSON object per line with id, text, category; extra fields
// (answers, label) are ignored so a labeled file works too.
std::vector<Post> load_posts(const std::string& path);

// Ids already present in a labeled output file (for resume); empty when the
// file does not exist yet.
std::set<std::string> annotated_ids(const std::string& path, const GraphSpec& graph);

}  // namespace lingo
