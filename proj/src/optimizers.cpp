#include "lingo/optimizers.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <sstream>

#include "lingo/errors.hpp"
#include "lingo/hash.hpp"
#include "lingo/metrics.hpp"

namespace lingo {

std::string optimizer_kind_name(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::textgrad: return "textgrad";
        case OptimizerKind::adalflow: return "adalflow";
        case OptimizerKind::dspy: return "dspy";
        case OptimizerKind::rag: return "rag";
    }
    return "?";
}

std::optional<OptimizerKind> optimizer_kind_from_name(const std::string& name) {
    for (OptimizerKind k : {OptimizerKind::textgrad, OptimizerKind::adalflow,
                            OptimizerKind::dspy, OptimizerKind::rag})
        if (optimizer_kind_name(k) == name) return k;
    return std::nullopt;
}

namespace {

// Direct-optimization runs target the monolithic task text under this node id.
bool is_task_node(const GraphSpec& graph, const std::string& node) {
    return graph.find(node) == nullptr;
}

std::string current_instruction(const PromptBundle& bundle, const std::string& node) {
    auto it = bundle.node_instructions.find(node);
    if (it != bundle.node_instructions.end()) return it->second;
    return bundle.main_task;
}

std::vector<std::string> routing_tokens(const GraphSpec& graph, const std::string& node) {
    const NodeSpec* spec = graph.find(node);
    if (spec == nullptr) return {};
    return spec->answers;
}

bool gold_path_visits(const LabeledExample& ex, const GraphSpec& graph, const std::string& node) {
    if (is_task_node(graph, node)) return true;
    return ex.node_answers.count(node) > 0;
}

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

template <typename T>
std::vector<T> seeded_sample(std::vector<T> items, std::size_t cap, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::shuffle(items.begin(), items.end(), rng);
    if (items.size() > cap) items.resize(cap);
    return items;
}

}  // namespace

ErrorSample sample_errors(const std::vector<ErrorCase>& cases,
                          const std::vector<LabeledExample>& train_pool, const GraphSpec& graph,
                          const std::string& node, std::size_t cap, std::uint64_t seed) {
    if (cap < 1) throw Error("error sample cap must be >= 1");
    ErrorSample sample;
    sample.errors = seeded_sample(cases, cap, derive_seed(seed, "errors/" + node));

    std::vector<LabeledExample> pool;
    for (const auto& ex : train_pool)
        if (gold_path_visits(ex, graph, node)) pool.push_back(ex);
    sample.positives = seeded_sample(std::move(pool), cap, derive_seed(seed, "positives/" + node));
    return sample;
}

InstructionDelta textual_gradient_step(const OptimizeContext& ctx, const std::string& node,
                                       const ErrorSample& sample) {
    if (sample.errors.empty()) throw Error("textual gradient needs at least one error case");
    if (ctx.teacher == nullptr) throw Error("teacher gateway not configured");

    const std::string instruction = current_instruction(*ctx.bundle, node);

    std::ostringstream os;
    os << "You improve one instruction inside a multi-step classification prompt.\n"
       << "Current instruction for " << node << ":\n---\n" << instruction << "\n---\n\n"
       << "The instruction produced wrong answers on these cases:\n";
    for (const auto& e : sample.errors) {
        os << "- Input: " << e.example.post.text << "\n  Expected answer: " << e.gold_answer
           << "\n  Model answer: " << (e.predicted_answer ? *e.predicted_answer : "(unparseable)")
           << "\n";
    }
    if (!sample.positives.empty()) {
        os << "\nCorrectly handled reference cases:\n";
        for (const auto& ex : sample.positives) {
            auto it = ex.node_answers.find(node);
            os << "- Input: " << ex.post.text;
            if (it != ex.node_answers.end()) os << "\n  Answer: " << it->second;
            os << "\n";
        }
    }
    os << "\nFirst write a short critique of the instruction. Then write a full replacement "
          "instruction between <<<REWRITE>>> and <<</REWRITE>>> markers. Keep every answer "
          "option the step can route on.";

    ChatRequest request;
    request.system_text = "You are a prompt engineer refining classification instructions.";
    request.user_text = os.str();
    request.example_id = node;
    request.round = ctx.round;
    request.purpose = "teacher";
    request.split_tag = "train";

    auto [raw, hash] = ctx.teacher->complete(request);

    const std::string open = "<<<REWRITE>>>", close = "<<</REWRITE>>>";
    auto b = raw.find(open);
    auto e = raw.find(close);
    if (b == std::string::npos || e == std::string::npos || e <= b) {
        if (ctx.teacher->log()) ctx.teacher->log()->annotate_parse(hash, ParseStatus::failed);
        throw TeacherParseError("no rewrite markers in teacher output for " + node);
    }
    std::string rewrite = raw.substr(b + open.size(), e - b - open.size());
    // trim surrounding newlines
    while (!rewrite.empty() && (rewrite.front() == '\n' || rewrite.front() == '\r'))
        rewrite.erase(rewrite.begin());
    while (!rewrite.empty() && (rewrite.back() == '\n' || rewrite.back() == '\r'))
        rewrite.pop_back();

    if (rewrite.empty() || rewrite.size() > ctx.rewrite_max_len) {
        if (ctx.teacher->log()) ctx.teacher->log()->annotate_parse(hash, ParseStatus::failed);
        throw TeacherParseError("rewrite for " + node + " empty or over length cap");
    }
    const std::string rewrite_upper = upper(rewrite);
    for (const auto& token : routing_tokens(*ctx.graph, node)) {
        if (rewrite_upper.find(upper(token)) == std::string::npos) {
            if (ctx.teacher->log()) ctx.teacher->log()->annotate_parse(hash, ParseStatus::failed);
            throw TeacherParseError("rewrite for " + node + " drops routing answer '" + token +
                                    "'");
        }
    }
    if (ctx.teacher->log()) ctx.teacher->log()->annotate_parse(hash, ParseStatus::ok);

    InstructionDelta delta;
    delta.node = node;
    delta.rewrite = rewrite;
    delta.critique = raw.substr(0, b);
    return delta;
}

namespace {

bool trace_correct(const Prediction& p, const LabeledExample& gold, const GraphSpec& graph,
                   RenderMode mode) {
    if (p.status == ParseStatus::failed || !p.label || *p.label != gold.label) return false;
    if (mode != RenderMode::lingo) return true;
    if (!p.path) return false;
    ReasoningPath gold_path = check_path_consistency(gold, graph);
    if (p.path->steps.size() != gold_path.steps.size()) return false;
    for (std::size_t i = 0; i < gold_path.steps.size(); ++i) {
        if (p.path->steps[i].node != gold_path.steps[i].node) return false;
        if (canonical_answer(p.path->steps[i].answer) !=
            canonical_answer(gold_path.steps[i].answer))
            return false;
    }
    return true;
}

double score_demo_set(const OptimizeContext& ctx, const std::vector<Demonstration>& demos) {
    const auto& subsample = *ctx.val_subsample;
    if (subsample.empty()) return 0.0;
    PromptBundle candidate = attach_demos(*ctx.bundle, demos, *ctx.graph);
    PredictOptions options;
    options.mode = ctx.mode;
    options.round = ctx.round;
    options.split_tag = "val";
    options.in_flight = ctx.in_flight;
    auto preds = predict_examples(*ctx.instruction, candidate, subsample, *ctx.graph, options);
    std::vector<int> gold, pred;
    for (std::size_t i = 0; i < subsample.size(); ++i) {
        gold.push_back(static_cast<int>(subsample[i].label));
        pred.push_back(preds[i].label ? static_cast<int>(*preds[i].label) : kFailedPrediction);
    }
    return weighted_f1(gold, pred);
}

}  // namespace

std::vector<Demonstration> bootstrap_demos(const OptimizeContext& ctx, const std::string& node,
                                           std::vector<std::string>* notes) {
    if (ctx.few_shot_k == 0) return {};

    std::vector<LabeledExample> pool;
    for (const auto& ex : *ctx.train_pool)
        if (gold_path_visits(ex, *ctx.graph, node)) pool.push_back(ex);
    pool = seeded_sample(std::move(pool), ctx.bootstrap_pool_cap,
                         derive_seed(ctx.seed, "bootstrap/" + node));
    if (pool.empty()) {
        if (notes) notes->push_back("bootstrap " + node + ": empty pool");
        return {};
    }

    PredictOptions options;
    options.mode = ctx.mode;
    options.round = ctx.round;
    options.split_tag = "train";
    options.in_flight = ctx.in_flight;
    auto preds = predict_examples(*ctx.instruction, *ctx.bundle, pool, *ctx.graph, options);

    std::vector<Demonstration> candidates;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (!trace_correct(preds[i], pool[i], *ctx.graph, ctx.mode)) continue;
        Demonstration d;
        d.example = pool[i];
        d.rationale = "";  // the model's trace doubles as the demo output
        candidates.push_back(std::move(d));
    }
    if (candidates.empty()) {
        if (notes)
            notes->push_back("bootstrap " + node + ": no trace-correct example in pool of " +
                             std::to_string(pool.size()));
        return {};
    }

    // Greedy forward selection by validation-subsample weighted F1.
    std::vector<Demonstration> selected;
    std::vector<bool> used(candidates.size(), false);
    double best_so_far = -1.0;
    while (selected.size() < std::min<std::size_t>(ctx.few_shot_k, candidates.size())) {
        double best_score = -1.0;
        std::size_t best_idx = candidates.size();
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (used[i]) continue;
            auto trial = selected;
            trial.push_back(candidates[i]);
            double score = score_demo_set(ctx, trial);
            if (score > best_score) {
                best_score = score;
                best_idx = i;
            }
        }
        if (best_idx == candidates.size()) break;
        // Keep adding while not strictly worse; ties keep earlier pool order.
        if (best_score < best_so_far) break;
        best_so_far = best_score;
        used[best_idx] = true;
        selected.push_back(candidates[best_idx]);
    }
    return selected;
}

OptimizerOutcome composite_step(const OptimizeContext& ctx, const std::string& node,
                                const ErrorSample& sample) {
    OptimizerOutcome outcome;
    try {
        InstructionDelta delta = textual_gradient_step(ctx, node, sample);
        outcome.instruction_deltas[node] = delta.rewrite;
        outcome.critiques[node] = delta.critique;
    } catch (const TeacherParseError& e) {
        outcome.notes.push_back(std::string("teacher rejected: ") + e.what());
    } catch (const BudgetExceeded&) {
        throw;
    }
    auto demos = bootstrap_demos(ctx, node, &outcome.notes);
    outcome.demo_deltas.insert(outcome.demo_deltas.end(), demos.begin(), demos.end());
    return outcome;
}

OptimizerOutcome run_node_optimizer(OptimizerKind kind, const OptimizeContext& ctx,
                                    const std::string& node, const ErrorSample& sample) {
    OptimizerOutcome outcome;
    switch (kind) {
        case OptimizerKind::textgrad: {
            try {
                InstructionDelta delta = textual_gradient_step(ctx, node, sample);
                outcome.instruction_deltas[node] = delta.rewrite;
                outcome.critiques[node] = delta.critique;
            } catch (const TeacherParseError& e) {
                outcome.notes.push_back(std::string("teacher rejected: ") + e.what());
            }
            return outcome;
        }
        case OptimizerKind::adalflow:
            return composite_step(ctx, node, sample);
        case OptimizerKind::dspy: {
            auto demos = bootstrap_demos(ctx, node, &outcome.notes);
            outcome.demo_deltas = std::move(demos);
            return outcome;
        }
        case OptimizerKind::rag:
            throw Error("RAG is a round-level policy; use build_retrieval_policy");
    }
    return outcome;
}

}  // namespace lingo
