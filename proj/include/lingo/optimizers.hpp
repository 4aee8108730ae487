#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lingo/diagnostics.hpp"
#include "lingo/predict.hpp"
#include "lingo/prompt.hpp"
#include "lingo/retrieval.hpp"

namespace lingo {

enum class OptimizerKind { textgrad, adalflow, dspy, rag };
std::string optimizer_kind_name(OptimizerKind k);
std::optional<OptimizerKind> optimizer_kind_from_name(const std::string& name);

struct InstructionDelta {
    std::string node;
    std::string critique;  // teacher's critique, kept for audit
    std::string rewrite;
};

struct OptimizerOutcome {
    std::map<std::string, std::string> instruction_deltas;  // node -> replacement text
    std::map<std::string, std::string> critiques;           // node -> teacher critique
    std::vector<Demonstration> demo_deltas;
    std::optional<RetrievalPolicy> retrieval_policy;
    std::vector<std::string> notes;  // rejections, empty bootstraps, skipped halves
};

struct ErrorSample {
    std::vector<ErrorCase> errors;
    std::vector<LabeledExample> positives;  // gold train examples visiting the node
};

// Deterministic seeded sample: at most `cap` error cases plus up to `cap`
// contrastive gold examples from the training pool that visit the node.
ErrorSample sample_errors(const std::vector<ErrorCase>& cases,
                          const std::vector<LabeledExample>& train_pool, const GraphSpec& graph,
                          const std::string& node, std::size_t cap, std::uint64_t seed);

struct OptimizeContext {
    const GraphSpec* graph = nullptr;
    const PromptBundle* bundle = nullptr;
    const std::vector<LabeledExample>* train_pool = nullptr;
    const std::vector<LabeledExample>* val_subsample = nullptr;  // bootstrap scoring
    Gateway* instruction = nullptr;
    Gateway* teacher = nullptr;
    Embedder* embedder = nullptr;
    RenderMode mode = RenderMode::lingo;
    std::size_t few_shot_k = 4;
    std::size_t error_cap = 8;
    std::size_t bootstrap_pool_cap = 20;
    std::size_t rewrite_max_len = 1600;
    std::uint64_t seed = 0;
    int round = -1;
    std::size_t in_flight = 1;
};

// Teacher critique-and-rewrite of one node's instruction. The rewrite must
// keep every routing answer token and respect the length cap; otherwise
// TeacherParseError.
InstructionDelta textual_gradient_step(const OptimizeContext& ctx, const std::string& node,
                                       const ErrorSample& sample);

// Runs the instruction model over a seeded pool sample, keeps trace-correct
// examples, and greedily selects up to k by validation-subsample weighted F1.
// Returns empty (with a log note appended to `notes`) when nothing is
// trace-correct.
std::vector<Demonstration> bootstrap_demos(const OptimizeContext& ctx, const std::string& node,
                                           std::vector<std::string>* notes);

// textual_gradient_step + bootstrap_demos; either half may fail without
// taking down the other.
OptimizerOutcome composite_step(const OptimizeContext& ctx, const std::string& node,
                                const ErrorSample& sample);

// Per-node dispatch for textgrad / adalflow / dspy. RAG is round-level; use
// build_retrieval_policy with the full target set instead.
OptimizerOutcome run_node_optimizer(OptimizerKind kind, const OptimizeContext& ctx,
                                    const std::string& node, const ErrorSample& sample);

}  // namespace lingo
