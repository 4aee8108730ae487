#include "lingo/loop.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include <json.hpp>

#include "lingo/errors.hpp"
#include "lingo/hash.hpp"
#include "lingo/predict.hpp"

namespace lingo {

using nlohmann::json;

std::string run_mode_name(RunMode m) {
    switch (m) {
        case RunMode::lingo: return "lingo";
        case RunMode::direct_optimization: return "direct_optimization";
        case RunMode::zero_shot: return "zero_shot";
        case RunMode::cot: return "cot";
    }
    return "?";
}

std::optional<RunMode> run_mode_from_name(const std::string& name) {
    for (RunMode m : {RunMode::lingo, RunMode::direct_optimization, RunMode::zero_shot,
                      RunMode::cot})
        if (run_mode_name(m) == name) return m;
    return std::nullopt;
}

std::vector<std::string> RunConfig::validate() const {
    std::vector<std::string> defects;
    if (tau < 0.0 || tau > 1.0) defects.push_back("tau must be in [0, 1]");
    if (max_rounds < 1) defects.push_back("max_rounds must be >= 1");
    if (few_shot_k < 1) defects.push_back("few_shot_k must be >= 1");
    if (in_flight < 1) defects.push_back("in_flight must be >= 1");
    if (validation_metric != "weighted_f1" && validation_metric != "accuracy")
        defects.push_back("validation_metric must be weighted_f1 or accuracy");
    if (error_cap < 1) defects.push_back("error_cap must be >= 1");
    if (bootstrap_pool_cap < 1) defects.push_back("bootstrap_pool_cap must be >= 1");
    if (val_subsample < 1) defects.push_back("val_subsample must be >= 1");
    return defects;
}

GraphSpec task_pseudo_graph() {
    GraphSpec g;
    g.root = kTaskNode;
    NodeSpec node;
    node.id = kTaskNode;
    node.question_key = kTaskNode;
    for (int i = 0; i < kNumLabels; ++i) {
        std::string digit = std::to_string(i);
        node.answers.push_back(digit);
        node.transitions[digit] = *label_from_int(i);
    }
    g.nodes.push_back(std::move(node));
    return g;
}

std::string run_config_to_json(const RunConfig& c) {
    json j = {{"mode", run_mode_name(c.mode)},
              {"optimizer", optimizer_kind_name(c.optimizer)},
              {"tau", c.tau},
              {"max_rounds", c.max_rounds},
              {"few_shot_k", c.few_shot_k},
              {"seed", c.seed},
              {"errors_only", c.errors_only},
              {"call_budget", c.call_budget},
              {"in_flight", c.in_flight},
              {"validation_metric", c.validation_metric},
              {"error_cap", c.error_cap},
              {"bootstrap_pool_cap", c.bootstrap_pool_cap},
              {"val_subsample", c.val_subsample}};
    return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("run config: invalid JSON: ") + e.what());
    }
    RunConfig c;
    try {
        if (j.contains("mode")) {
            auto m = run_mode_from_name(j["mode"].get<std::string>());
            if (!m) throw ConfigError("run config: unknown mode " + j["mode"].dump());
            c.mode = *m;
        }
        if (j.contains("optimizer")) {
            auto k = optimizer_kind_from_name(j["optimizer"].get<std::string>());
            if (!k) throw ConfigError("run config: unknown optimizer " + j["optimizer"].dump());
            c.optimizer = *k;
        }
        c.tau = j.value("tau", c.tau);
        c.max_rounds = j.value("max_rounds", c.max_rounds);
        c.few_shot_k = j.value("few_shot_k", c.few_shot_k);
        c.seed = j.value("seed", c.seed);
        c.errors_only = j.value("errors_only", c.errors_only);
        c.call_budget = j.value("call_budget", c.call_budget);
        c.in_flight = j.value("in_flight", c.in_flight);
        c.validation_metric = j.value("validation_metric", c.validation_metric);
        c.error_cap = j.value("error_cap", c.error_cap);
        c.bootstrap_pool_cap = j.value("bootstrap_pool_cap", c.bootstrap_pool_cap);
        c.val_subsample = j.value("val_subsample", c.val_subsample);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("run config: bad structure: ") + e.what());
    }
    return c;
}

namespace {

// Everything the round loop needs once mode-specific setup is done.
struct LoopSetup {
    const GraphSpec* graph = nullptr;
    PromptBundle initial_bundle;
    RenderMode render_mode = RenderMode::lingo;
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> validation;
    std::vector<LabeledExample> test;
    bool synthesize_paths = false;  // direct mode: lift bare labels to pseudo paths
};

double score_of(const RunConfig& config, const std::vector<LabeledExample>& golds,
                const std::vector<Prediction>& preds) {
    std::vector<int> g, p;
    g.reserve(golds.size());
    p.reserve(preds.size());
    for (const auto& ex : golds) g.push_back(static_cast<int>(ex.label));
    for (const auto& pr : preds)
        p.push_back(pr.label ? static_cast<int>(*pr.label) : kFailedPrediction);
    if (config.validation_metric == "accuracy") return accuracy(g, p);
    return weighted_f1(g, p);
}

MetricsReport report_of(const std::vector<LabeledExample>& golds,
                        const std::vector<Prediction>& preds) {
    std::vector<int> g, p;
    std::vector<Category> cats;
    for (const auto& ex : golds) {
        g.push_back(static_cast<int>(ex.label));
        cats.push_back(ex.post.category);
    }
    for (const auto& pr : preds)
        p.push_back(pr.label ? static_cast<int>(*pr.label) : kFailedPrediction);
    return report(g, p, cats);
}

void lift_to_task_path(std::vector<Prediction>& preds) {
    for (auto& p : preds) {
        if (p.status == ParseStatus::failed || !p.label || p.path) continue;
        ReasoningPath path;
        path.steps.push_back({kTaskNode, std::to_string(static_cast<int>(*p.label))});
        path.terminal = *p.label;
        p.path = std::move(path);
    }
}

LabeledExample to_task_example(const LabeledExample& ex) {
    LabeledExample out = ex;
    out.node_answers = {{kTaskNode, std::to_string(static_cast<int>(ex.label))}};
    return out;
}

std::vector<LabeledExample> to_task_examples(const std::vector<LabeledExample>& in) {
    std::vector<LabeledExample> out;
    out.reserve(in.size());
    for (const auto& ex : in) out.push_back(to_task_example(ex));
    return out;
}

RetrievalPolicyInfo policy_info(const std::optional<RetrievalPolicy>& policy) {
    RetrievalPolicyInfo info;
    if (!policy) return info;
    info.installed = true;
    info.k = policy->k;
    info.node_filter = policy->node_filter;
    info.pool_ids = policy->index->ids();
    return info;
}

std::optional<RetrievalPolicy> rebuild_policy(const RetrievalPolicyInfo& info,
                                              const std::vector<LabeledExample>& train,
                                              Embedder& embedder) {
    if (!info.installed) return std::nullopt;
    std::set<std::string> wanted(info.pool_ids.begin(), info.pool_ids.end());
    RetrievalPolicy policy;
    policy.k = info.k;
    policy.node_filter = info.node_filter;
    policy.index = std::make_shared<VectorIndex>();
    for (const auto& ex : train) {
        if (!wanted.count(ex.post.id)) continue;
        policy.index->add(ex.post.id, embedder.embed_one(ex.post.text));
        policy.demos_by_id[ex.post.id] = Demonstration{ex, ""};
    }
    if (policy.index->size() != wanted.size())
        throw StorageError("checkpoint retrieval pool references ids missing from the train set");
    return policy;
}

// Patches either a step instruction or, for the pseudo task node, the main
// task text.
void apply_rewrite(PromptBundle& bundle, const std::string& node, const std::string& rewrite) {
    if (bundle.node_instructions.count(node))
        bundle = patch_node(bundle, node, rewrite);
    else
        bundle.main_task = rewrite;
}

std::string join_set(const std::set<std::string>& s) {
    std::string out;
    for (const auto& v : s) {
        if (!out.empty()) out += ", ";
        out += v;
    }
    return out;
}

std::vector<LabeledExample> seeded_subsample(std::vector<LabeledExample> pool, std::size_t cap,
                                             std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::shuffle(pool.begin(), pool.end(), rng);
    if (pool.size() > cap) pool.resize(cap);
    return pool;
}

RunResult run_loop(const RunConfig& config, const LoopSetup& setup, RunContext& ctx) {
    RunResult result;
    result.run_id = ctx.run_id;

    // Already finished? Reload instead of re-running.
    if (ctx.store->has_test_report(ctx.run_id)) {
        RunRecord record = ctx.store->load_record(ctx.run_id);
        result.status = record.status;
        result.best_round = record.best_round;
        if (record.best_round >= 0)
            result.best = ctx.store->load_checkpoint(ctx.run_id, record.best_round);
        result.test_report = ctx.store->load_test_report(ctx.run_id);
        return result;
    }

    const auto val_sub = seeded_subsample(setup.validation, config.val_subsample,
                                          derive_seed(config.seed, "val-subsample"));

    PromptBundle bundle = setup.initial_bundle;
    std::optional<RetrievalPolicy> policy;
    std::vector<Prediction> preds;
    std::set<std::string> targets;
    int start_round = 0;
    double best_score = -1.0;
    int best_round = -1;
    bool converged = false;

    // Resume from whatever rounds a previous process persisted.
    for (int r : ctx.store->rounds(ctx.run_id)) {
        RoundCheckpoint cp = ctx.store->load_checkpoint(ctx.run_id, r);
        if (cp.validation_score > best_score) {
            best_score = cp.validation_score;
            best_round = r;
            result.best = cp;
        }
        bundle = cp.bundle;
        policy = rebuild_policy(cp.policy, setup.train, *ctx.embedder);
        preds = cp.predictions;
        targets = cp.targets;
        start_round = r + 1;
        if (cp.targets.empty()) converged = true;
    }

    bool halted = false;
    std::string halt_reason;
    try {
        for (int t = start_round; t <= config.max_rounds && !converged; ++t) {
            std::vector<std::string> notes;
            if (t > 0) {
                // Optimize the nodes the previous round flagged.
                if (config.optimizer == OptimizerKind::rag) {
                    policy = build_retrieval_policy(setup.train, *ctx.embedder,
                                                    config.few_shot_k, targets, *setup.graph);
                    notes.push_back("retrieval policy: k=" + std::to_string(policy->k) +
                                    ", pool=" + std::to_string(policy->index->size()) +
                                    ", filter={" + join_set(targets) + "}");
                } else {
                    OptimizeContext octx;
                    octx.graph = setup.graph;
                    octx.bundle = &bundle;
                    octx.train_pool = &setup.train;
                    octx.val_subsample = &val_sub;
                    octx.instruction = ctx.instruction;
                    octx.teacher = ctx.teacher;
                    octx.embedder = ctx.embedder;
                    octx.mode = setup.render_mode;
                    octx.few_shot_k = config.few_shot_k;
                    octx.error_cap = config.error_cap;
                    octx.bootstrap_pool_cap = config.bootstrap_pool_cap;
                    octx.seed = derive_seed(config.seed, "round/" + std::to_string(t));
                    octx.round = t;
                    octx.in_flight = config.in_flight;
                    for (const auto& node : targets) {
                        auto errors = collect_errors(preds, setup.validation, *setup.graph,
                                                     node, config.errors_only);
                        auto sample = sample_errors(errors, setup.train, *setup.graph, node,
                                                    config.error_cap, octx.seed);
                        auto outcome = run_node_optimizer(config.optimizer, octx, node, sample);
                        for (const auto& [n, rewrite] : outcome.instruction_deltas) {
                            apply_rewrite(bundle, n, rewrite);
                            notes.push_back("rewrote " + n);
                        }
                        for (const auto& [n, critique] : outcome.critiques)
                            notes.push_back("critique " + n + ": " + critique);
                        if (!outcome.demo_deltas.empty()) {
                            bundle = attach_demos(bundle, outcome.demo_deltas, *setup.graph);
                            notes.push_back("attached " +
                                            std::to_string(outcome.demo_deltas.size()) +
                                            " demos for " + node);
                        }
                        notes.insert(notes.end(), outcome.notes.begin(), outcome.notes.end());
                    }
                }
            }

            PredictOptions po;
            po.mode = setup.render_mode;
            po.round = t;
            po.split_tag = "val";
            po.policy = policy ? &*policy : nullptr;
            po.embedder = ctx.embedder;
            po.in_flight = config.in_flight;
            preds = predict_examples(*ctx.instruction, bundle, setup.validation, *setup.graph,
                                     po);
            if (setup.synthesize_paths) lift_to_task_path(preds);

            double score = score_of(config, setup.validation, preds);
            StepStats stats = diagnose(preds, setup.validation, *setup.graph,
                                       config.errors_only);
            targets = select_targets(stats, config.tau).nodes;

            RoundCheckpoint cp;
            cp.round = t;
            cp.bundle = bundle;
            cp.policy = policy_info(policy);
            cp.validation_score = score;
            cp.stats = stats;
            cp.predictions = preds;
            cp.targets = targets;
            cp.notes = notes;
            ctx.store->persist_round(ctx.run_id, cp);

            if (score > best_score) {
                best_score = score;
                best_round = t;
                result.best = cp;
            }
            if (targets.empty()) converged = true;
        }
    } catch (const BudgetExceeded& e) {
        halted = true;
        halt_reason = e.what();
    }

    result.best_round = best_round;

    if (!halted && best_round >= 0) {
        // One pass over the held-out test set with the winning checkpoint.
        try {
            const RoundCheckpoint& best = *result.best;
            auto test_policy = rebuild_policy(best.policy, setup.train, *ctx.embedder);
            PredictOptions po;
            po.mode = setup.render_mode;
            po.round = best.round;
            po.split_tag = "test";
            po.policy = test_policy ? &*test_policy : nullptr;
            po.embedder = ctx.embedder;
            po.in_flight = config.in_flight;
            auto test_preds = predict_examples(*ctx.instruction, best.bundle, setup.test,
                                               *setup.graph, po);
            if (setup.synthesize_paths) lift_to_task_path(test_preds);
            MetricsReport test_report = report_of(setup.test, test_preds);
            ctx.store->save_test_report(ctx.run_id, test_report, test_preds);
            result.test_report = test_report;
        } catch (const BudgetExceeded& e) {
            halted = true;
            halt_reason = e.what();
        }
    }

    if (best_round >= 0) ctx.store->set_best_round(ctx.run_id, best_round);
    result.status = (halted || best_round < 0) ? "halted" : "complete";
    ctx.store->set_status(ctx.run_id, result.status);
    if (ctx.log) ctx.store->save_log(ctx.run_id, *ctx.log);
    (void)halt_reason;
    return result;
}

}  // namespace

RunResult run_lingo(const RunConfig& config, const DatasetSplit& split, const GraphSpec& graph,
                    RunContext& ctx) {
    LoopSetup setup;
    setup.graph = &graph;
    setup.initial_bundle = default_bundle();
    setup.render_mode = RenderMode::lingo;
    setup.train = split.train;
    setup.validation = split.validation;
    setup.test = split.test;
    return run_loop(config, setup, ctx);
}

RunResult run_direct_optimization(const RunConfig& config, const DatasetSplit& split,
                                  RunContext& ctx) {
    static const GraphSpec pseudo = task_pseudo_graph();
    LoopSetup setup;
    setup.graph = &pseudo;
    setup.initial_bundle = direct_bundle();
    setup.render_mode = RenderMode::zero_shot;
    setup.train = to_task_examples(split.train);
    setup.validation = to_task_examples(split.validation);
    setup.test = to_task_examples(split.test);
    setup.synthesize_paths = true;
    return run_loop(config, setup, ctx);
}

RunResult run_baseline(const RunConfig& config, const DatasetSplit& split, RunContext& ctx) {
    RunResult result;
    result.run_id = ctx.run_id;
    if (ctx.store->has_test_report(ctx.run_id)) {
        result.status = ctx.store->load_record(ctx.run_id).status;
        result.test_report = ctx.store->load_test_report(ctx.run_id);
        return result;
    }

    static const GraphSpec pseudo = task_pseudo_graph();
    PromptBundle bundle = direct_bundle();
    PredictOptions po;
    po.mode = config.mode == RunMode::cot ? RenderMode::cot : RenderMode::zero_shot;
    po.round = 0;
    po.split_tag = "test";
    po.in_flight = config.in_flight;
    try {
        auto preds = predict_examples(*ctx.instruction, bundle, split.test, pseudo, po);
        MetricsReport test_report = report_of(split.test, preds);
        ctx.store->save_test_report(ctx.run_id, test_report, preds);
        result.test_report = test_report;
        result.status = "complete";
    } catch (const BudgetExceeded&) {
        result.status = "halted";
    }
    ctx.store->set_status(ctx.run_id, result.status);
    if (ctx.log) ctx.store->save_log(ctx.run_id, *ctx.log);
    return result;
}

}  // namespace lingo
