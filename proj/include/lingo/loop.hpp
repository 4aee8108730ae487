#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lingo/corpus.hpp"
#include "lingo/gateway.hpp"
#include "lingo/graph.hpp"
#include "lingo/metrics.hpp"
#include "lingo/optimizers.hpp"
#include "lingo/runstore.hpp"

namespace lingo {

enum class RunMode { lingo, direct_optimization, zero_shot, cot };
std::string run_mode_name(RunMode m);
std::optional<RunMode> run_mode_from_name(const std::string& name);

struct RunConfig {
    RunMode mode = RunMode::lingo;
    OptimizerKind optimizer = OptimizerKind::rag;
    double tau = 0.1;
    int max_rounds = 5;         // optimization rounds R
    std::size_t few_shot_k = 4;
    std::uint64_t seed = 0;
    bool errors_only = true;    // restrict mismatch counting to final-label errors
    long call_budget = 0;       // <= 0: unlimited
    std::size_t in_flight = 1;
    std::string validation_metric = "weighted_f1";
    std::size_t error_cap = 8;
    std::size_t bootstrap_pool_cap = 20;
    std::size_t val_subsample = 32;  // bootstrap scoring subsample size

    std::vector<std::string> validate() const;  // all defects, one pass
};

// Backends and storage for one run.
struct RunContext {
    Gateway* instruction = nullptr;
    Gateway* teacher = nullptr;
    Embedder* embedder = nullptr;
    RunStore* store = nullptr;
    std::string run_id;
    RunLog* log = nullptr;
};

struct RunResult {
    std::string run_id;
    std::string status;  // complete | halted
    int best_round = -1;
    std::optional<RoundCheckpoint> best;
    std::optional<MetricsReport> test_report;
};

// The round loop: predict validation, diagnose, select targets (early break
// on empty), optimize targeted nodes, re-validate, keep the argmax
// checkpoint, and evaluate the test set exactly once at the end. Resumes
// from persisted rounds when the run directory already holds some.
RunResult run_lingo(const RunConfig& config, const DatasetSplit& split, const GraphSpec& graph,
                    RunContext& ctx);

// Same loop over a single monolithic prompt; the only error signal is the
// final label.
RunResult run_direct_optimization(const RunConfig& config, const DatasetSplit& split,
                                  RunContext& ctx);

// Zero-shot / CoT: one pass over the test set, no optimization.
RunResult run_baseline(const RunConfig& config, const DatasetSplit& split, RunContext& ctx);

// One-node graph used by direct optimization and baselines: the pseudo node
// answers with the label digit.
GraphSpec task_pseudo_graph();
inline constexpr const char* kTaskNode = "TASK";

// Serialization of RunConfig (part of AppConfig and the run snapshot).
std::string run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const std::string& text);

}  // namespace lingo
