#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lingo/diagnostics.hpp"
#include "lingo/gateway.hpp"
#include "lingo/metrics.hpp"
#include "lingo/predict.hpp"
#include "lingo/prompt.hpp"

namespace lingo {

// Enough to rebuild a retrieval policy from the training pool and embedder.
struct RetrievalPolicyInfo {
    bool installed = false;
    std::size_t k = 4;
    std::set<std::string> node_filter;
    std::vector<std::string> pool_ids;
};

struct RoundCheckpoint {
    int round = -1;
    PromptBundle bundle;
    RetrievalPolicyInfo policy;
    double validation_score = 0.0;
    StepStats stats;
    std::vector<Prediction> predictions;  // validation predictions of this round
    std::set<std::string> targets;        // selected nodes going into the next round
    std::vector<std::string> notes;       // optimizer audit trail
};

struct RunRecord {
    std::string run_id;
    std::string config_hash;
    std::string status = "running";  // running | halted | complete
    int best_round = -1;
};

// Plain-directory run storage:
//   <base>/<run id>/config.json
//   <base>/<run id>/record.json
//   <base>/<run id>/rounds/round_NNN/{bundle.json, round.json, predictions.jsonl}
//   <base>/<run id>/rounds/index.json      (updated last; unindexed rounds are invisible)
//   <base>/<run id>/run_log.jsonl
//   <base>/<run id>/test_report.json, test_predictions.jsonl
class RunStore {
public:
    explicit RunStore(std::string base_dir);

    std::string create_run(const std::string& config_json,
                           const std::optional<std::string>& run_id = std::nullopt);
    bool exists(const std::string& run_id) const;
    std::string run_dir(const std::string& run_id) const;

    void persist_round(const std::string& run_id, const RoundCheckpoint& checkpoint);
    RoundCheckpoint load_checkpoint(const std::string& run_id, int round) const;
    std::vector<int> rounds(const std::string& run_id) const;

    void set_status(const std::string& run_id, const std::string& status);
    void set_best_round(const std::string& run_id, int round);
    RunRecord load_record(const std::string& run_id) const;
    std::string load_config(const std::string& run_id) const;

    void save_log(const std::string& run_id, const RunLog& log);
    void save_test_report(const std::string& run_id, const MetricsReport& report,
                          const std::vector<Prediction>& predictions);
    MetricsReport load_test_report(const std::string& run_id) const;
    std::vector<Prediction> load_test_predictions(const std::string& run_id) const;
    bool has_test_report(const std::string& run_id) const;

private:
    std::string base_dir_;
};

}  // namespace lingo
