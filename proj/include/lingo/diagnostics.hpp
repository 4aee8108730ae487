#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lingo/corpus.hpp"
#include "lingo/gateway.hpp"
#include "lingo/graph.hpp"

namespace lingo {

struct NodeStats {
    std::size_t visited_count = 0;     // predicted path visits the node
    std::size_t comparable_count = 0;  // visited by both predicted and gold paths
    std::size_t mismatch_count = 0;
    double mismatch_rate = 0.0;  // mismatch_count / comparable_count, 0 when empty
};

struct StepStats {
    std::map<std::string, NodeStats> nodes;
    bool errors_only = true;

    std::string to_table(const std::set<std::string>& selected = {}) const;
};

struct TargetSet {
    std::set<std::string> nodes;
    double threshold = 0.1;
};

struct ErrorCase {
    LabeledExample example;
    std::string gold_answer;
    std::optional<std::string> predicted_answer;  // absent for parse failures
    std::optional<ReasoningPath> predicted_path;
};

// Predictions and golds aligned by example id (order-independent).
// With errors_only, mismatches accumulate only on examples whose final label
// is wrong; parse failures count as one mismatch at the root.
StepStats diagnose(const std::vector<Prediction>& predictions,
                   const std::vector<LabeledExample>& golds, const GraphSpec& graph,
                   bool errors_only);

// {n : rate > tau}; strict inequality.
TargetSet select_targets(const StepStats& stats, double tau);

// Exactly the examples counted as mismatches at `node` by diagnose under the
// same errors_only flag.
std::vector<ErrorCase> collect_errors(const std::vector<Prediction>& predictions,
                                      const std::vector<LabeledExample>& golds,
                                      const GraphSpec& graph, const std::string& node,
                                      bool errors_only);

}  // namespace lingo
