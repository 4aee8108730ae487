#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lingo/gateway.hpp"
#include "lingo/prompt.hpp"
#include "lingo/retrieval.hpp"

namespace lingo {

struct PredictOptions {
    RenderMode mode = RenderMode::lingo;
    int round = -1;
    std::string split_tag;
    const RetrievalPolicy* policy = nullptr;  // per-query demos, when installed
    Embedder* embedder = nullptr;             // required with a policy
    std::size_t in_flight = 1;
    bool reask_on_failure = true;  // one format-reminder re-ask, then failed
};

// Renders, calls, and parses one example.
Prediction predict_one(Gateway& gateway, const PromptBundle& bundle, const LabeledExample& ex,
                       const GraphSpec& graph, const PredictOptions& options);

// Batch prediction; results are ordered like the input regardless of the
// in-flight cap.
std::vector<Prediction> predict_examples(Gateway& gateway, const PromptBundle& bundle,
                                         const std::vector<LabeledExample>& examples,
                                         const GraphSpec& graph, const PredictOptions& options);

// Prediction serialization for round artifacts.
std::string prediction_to_jsonl(const Prediction& p);
Prediction prediction_from_jsonl(const std::string& line);

}  // namespace lingo
