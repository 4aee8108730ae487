#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "lingo/annotate.hpp"
#include "lingo/config.hpp"
#include "lingo/corpus.hpp"
#include "lingo/errors.hpp"
#include "lingo/loop.hpp"
#include "lingo/metrics.hpp"
#include "lingo/runstore.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kDomainError = 1;
constexpr int kConfigError = 2;
constexpr int kEnvironmentError = 3;

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const lingo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const lingo::AuthError& e) {
        std::cerr << "auth error: " << e.what() << "\n";
        return kEnvironmentError;
    } catch (const lingo::TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return kEnvironmentError;
    } catch (const lingo::StorageError& e) {
        std::cerr << "storage error: " << e.what() << "\n";
        return kEnvironmentError;
    } catch (const lingo::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDomainError;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return kEnvironmentError;
    }
}

lingo::GraphSpec load_graph_or_default(const std::string& path) {
    if (path.empty()) return lingo::default_lingo_graph();
    return lingo::load_graph_file(path);
}

void print_distribution(std::ostream& out, const lingo::DistributionTable& table) {
    out << std::left << std::setw(8) << "cat";
    for (int l = 0; l < lingo::kNumLabels; ++l) out << std::right << std::setw(6) << l;
    out << std::right << std::setw(8) << "total" << "\n";
    for (int c = 0; c < lingo::kNumCategories; ++c) {
        int total = 0;
        out << std::left << std::setw(8)
            << lingo::category_code(static_cast<lingo::Category>(c));
        for (int l = 0; l < lingo::kNumLabels; ++l) {
            out << std::right << std::setw(6) << table[c][l];
            total += table[c][l];
        }
        out << std::right << std::setw(8) << total << "\n";
    }
}

// ---- subcommands -------------------------------------------------------

int cmd_validate_graph(const std::string& graph_path) {
    lingo::GraphSpec graph = load_graph_or_default(graph_path);
    lingo::ValidationReport report = lingo::validate_graph(graph);
    std::cout << report.to_string();
    return report.ok() ? kOk : kDomainError;
}

int cmd_ingest(const std::string& input, const std::string& output,
               const std::string& quarantine, const std::string& graph_path) {
    lingo::GraphSpec graph = load_graph_or_default(graph_path);
    lingo::LoadResult loaded = lingo::load_examples(input, graph);
    lingo::save_examples(output, loaded.examples);
    if (!quarantine.empty()) {
        std::ofstream q(quarantine, std::ios::binary | std::ios::trunc);
        if (!q) throw lingo::StorageError("cannot write quarantine file: " + quarantine);
        for (const auto& [line, reason] : loaded.quarantined)
            q << reason << "\t" << line << "\n";
    }
    std::cout << "ingested " << loaded.examples.size() << " examples, quarantined "
              << loaded.quarantined.size() << "\n";
    for (const auto& [line, reason] : loaded.quarantined)
        std::cerr << "quarantined: " << reason << "\n";
    if (loaded.examples.empty()) {
        std::cerr << "no valid examples in " << input << "\n";
        return kDomainError;
    }
    print_distribution(std::cout, lingo::label_distribution(loaded.examples));
    return kOk;
}

int cmd_split(const std::string& corpus_path, const std::string& out_dir, double test_ratio,
              double val_ratio, std::uint64_t seed, const std::string& graph_path) {
    lingo::GraphSpec graph = load_graph_or_default(graph_path);
    auto loaded = lingo::load_examples(corpus_path, graph);
    if (loaded.examples.empty()) throw lingo::Error("corpus is empty: " + corpus_path);
    lingo::DatasetSplit s = lingo::split(loaded.examples, test_ratio, val_ratio, seed);

    std::filesystem::create_directories(out_dir);
    auto path = [&](const char* name) { return (std::filesystem::path(out_dir) / name).string(); };
    lingo::save_examples(path("train.jsonl"), s.train);
    lingo::save_examples(path("val.jsonl"), s.validation);
    lingo::save_examples(path("test.jsonl"), s.test);

    std::cout << "train " << s.train.size() << ", val " << s.validation.size() << ", test "
              << s.test.size() << "\n";
    std::vector<lingo::LabeledExample> dev = s.train;
    dev.insert(dev.end(), s.validation.begin(), s.validation.end());
    try {
        auto chi = lingo::distribution_homogeneity(dev, s.test);
        std::cout << "dev/test homogeneity: chi2=" << chi.statistic << " dof=" << chi.dof
                  << " p=" << chi.p_value << "\n";
    } catch (const lingo::DegenerateTable& e) {
        std::cout << "dev/test homogeneity: not computable (" << e.what() << ")\n";
    }
    return kOk;
}

int cmd_annotate(const std::string& input, const std::string& output, const std::string& coder,
                 const std::string& graph_path) {
    lingo::GraphSpec graph = load_graph_or_default(graph_path);
    auto posts = lingo::load_posts(input);
    auto done = lingo::annotated_ids(output, graph);
    auto result = lingo::annotate_session(std::cin, std::cout, graph, lingo::default_bundle(),
                                          posts, done, coder, output);
    std::cout << "\nannotated " << result.annotated << ", skipped " << result.skipped
              << ", previously done " << done.size() << "\n";
    return kOk;
}

int cmd_reliability(const std::string& first, const std::string& second,
                    const std::string& weights_name, const std::string& graph_path) {
    lingo::GraphSpec graph = load_graph_or_default(graph_path);
    auto a = lingo::load_examples(first, graph).examples;
    auto b = lingo::load_examples(second, graph).examples;
    std::map<std::string, const lingo::LabeledExample*> by_id;
    for (const auto& ex : b) by_id[ex.post.id] = &ex;

    std::vector<std::pair<const lingo::LabeledExample*, const lingo::LabeledExample*>> pairs;
    for (const auto& ex : a)
        if (auto it = by_id.find(ex.post.id); it != by_id.end())
            pairs.emplace_back(&ex, it->second);
    if (pairs.size() < 2)
        throw lingo::Error("need at least 2 items double-coded in both files");

    // Labels table: categories are the seven labels (ordinal weights sensible).
    lingo::RatingsTable labels;
    for (int l = 0; l < lingo::kNumLabels; ++l) labels.categories.push_back(std::to_string(l));
    for (const auto& [x, y] : pairs)
        labels.items.push_back({static_cast<int>(x->label), static_cast<int>(y->label)});

    // Chains table: each distinct reasoning chain is its own category.
    lingo::RatingsTable chains;
    std::map<std::string, int> chain_index;
    auto chain_cat = [&](const lingo::LabeledExample& ex) {
        std::string c = lingo::render_chain(ex, graph);
        auto [it, inserted] = chain_index.emplace(c, static_cast<int>(chains.categories.size()));
        if (inserted) chains.categories.push_back(c);
        return it->second;
    };
    for (const auto& [x, y] : pairs) chains.items.push_back({chain_cat(*x), chain_cat(*y)});

    auto label_weights = weights_name == "ordinal"
                             ? lingo::ordinal_weights(labels.categories.size())
                             : lingo::identity_weights(labels.categories.size());

    std::cout << "double-coded items: " << pairs.size() << "\n";
    std::cout << "labels: agreement " << lingo::percent_agreement(labels) * 100.0 << "%, AC2("
              << weights_name << ") " << lingo::gwet_ac2(labels, label_weights) << "\n";
    std::cout << "chains: agreement " << lingo::percent_agreement(chains) * 100.0 << "%, AC1 "
              << lingo::gwet_ac2(chains, lingo::identity_weights(chains.categories.size()))
              << "\n";
    return kOk;
}

int cmd_run(const std::string& config_path, const std::string& run_id_flag) {
    lingo::AppConfig config = lingo::load_app_config(config_path);
    auto defects = config.validate();
    if (!defects.empty()) {
        for (const auto& d : defects) std::cerr << "config defect: " << d << "\n";
        return kConfigError;
    }

    lingo::GraphSpec graph = load_graph_or_default(config.graph_path);
    auto loaded = lingo::load_examples(config.corpus_path, graph);
    if (loaded.examples.empty())
        throw lingo::Error("corpus is empty: " + config.corpus_path);
    lingo::DatasetSplit split =
        lingo::split(loaded.examples, config.test_ratio, config.val_ratio, config.run.seed);

    // Providers.
    std::shared_ptr<lingo::ChatProvider> instruction_provider, teacher_provider;
    if (config.instruction_provider.name == "mock") {
        lingo::MockScript script;
        if (config.mock_gold_default) script = lingo::gold_script(loaded.examples);
        if (!config.mock_script_path.empty())
            lingo::merge_script(script, lingo::load_mock_script(config.mock_script_path));
        instruction_provider = std::make_shared<lingo::MockProvider>(std::move(script), graph);
    } else {
        instruction_provider = lingo::make_http_provider(config.instruction_provider);
    }
    if (config.teacher_provider.name == "mock") {
        std::map<std::string, std::string> rewrites;
        if (!config.teacher_script_path.empty())
            rewrites = lingo::load_teacher_script(config.teacher_script_path);
        teacher_provider = std::make_shared<lingo::MockTeacherProvider>(std::move(rewrites));
    } else {
        teacher_provider = lingo::make_http_provider(config.teacher_provider);
    }

    lingo::RunLog log;
    lingo::Gateway instruction(instruction_provider, config.instruction_provider.retry,
                               config.run.call_budget, &log);
    lingo::Gateway teacher(teacher_provider, config.teacher_provider.retry,
                           config.run.call_budget, &log);
    std::shared_ptr<lingo::Embedder> embedder =
        std::make_shared<lingo::MockEmbedder>(config.embed_dim);
    if (!config.embed_cache_dir.empty())
        embedder = std::make_shared<lingo::CachingEmbedder>(embedder, config.embed_cache_dir);

    lingo::RunStore store(config.runs_dir);
    std::string run_id;
    if (!run_id_flag.empty() && store.exists(run_id_flag))
        run_id = run_id_flag;  // resume
    else
        run_id = store.create_run(lingo::app_config_to_json(config),
                                  run_id_flag.empty()
                                      ? std::nullopt
                                      : std::make_optional(run_id_flag));

    lingo::RunContext ctx;
    ctx.instruction = &instruction;
    ctx.teacher = &teacher;
    ctx.embedder = embedder.get();
    ctx.store = &store;
    ctx.run_id = run_id;
    ctx.log = &log;

    lingo::RunResult result;
    switch (config.run.mode) {
        case lingo::RunMode::lingo:
            result = lingo::run_lingo(config.run, split, graph, ctx);
            break;
        case lingo::RunMode::direct_optimization:
            result = lingo::run_direct_optimization(config.run, split, ctx);
            break;
        case lingo::RunMode::zero_shot:
        case lingo::RunMode::cot:
            result = lingo::run_baseline(config.run, split, ctx);
            break;
    }

    std::cout << "run " << result.run_id << " " << result.status;
    if (result.best_round >= 0) std::cout << ", best round " << result.best_round;
    std::cout << "\n";
    if (result.best)
        std::cout << "validation score: " << result.best->validation_score << "\n";
    if (result.test_report) std::cout << result.test_report->to_table();
    return result.status == "complete" ? kOk : kDomainError;
}

int cmd_report(const std::string& runs_dir, const std::string& run_id) {
    lingo::RunStore store(runs_dir);
    lingo::RunRecord record = store.load_record(run_id);
    std::cout << "run " << record.run_id << " status " << record.status << " best round "
              << record.best_round << "\n";
    auto rounds = store.rounds(run_id);
    if (!rounds.empty()) {
        std::cout << std::left << std::setw(7) << "round" << std::setw(12) << "score"
                  << std::setw(6) << "best" << "targets\n";
        for (int r : rounds) {
            auto cp = store.load_checkpoint(run_id, r);
            std::string targets;
            for (const auto& t : cp.targets) targets += (targets.empty() ? "" : ", ") + t;
            std::cout << std::left << std::setw(7) << r << std::setw(12)
                      << cp.validation_score << std::setw(6)
                      << (r == record.best_round ? "*" : "") << targets << "\n";
        }
    }
    if (store.has_test_report(run_id))
        std::cout << store.load_test_report(run_id).to_table();
    else
        std::cout << "(no test report)\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decision-graph guided intent classification and prompt optimization"};
    app.require_subcommand(1);

    std::string graph_path, input, output, quarantine, coder = "coder";
    std::string corpus_path, out_dir, config_path, run_id, runs_dir = "runs";
    std::string first, second, weights_name = "identity";
    double test_ratio = 0.2, val_ratio = 0.2;
    std::uint64_t seed = 0;

    auto* validate = app.add_subcommand("validate-graph", "Check a graph spec for defects");
    validate->add_option("--graph", graph_path, "Graph spec file (default: built-in)");

    auto* ingest = app.add_subcommand("ingest", "Validate and canonicalize a dataset");
    ingest->add_option("--input", input, "Raw JSONL dataset")->required();
    ingest->add_option("--output", output, "Canonical JSONL output")->required();
    ingest->add_option("--quarantine", quarantine, "File for rejected lines");
    ingest->add_option("--graph", graph_path, "Graph spec file (default: built-in)");

    auto* split_cmd = app.add_subcommand("split", "Stratified train/val/test split");
    split_cmd->add_option("--corpus", corpus_path, "Canonical JSONL corpus")->required();
    split_cmd->add_option("--out-dir", out_dir, "Directory for split files")->required();
    split_cmd->add_option("--test-ratio", test_ratio, "Test fraction (default 0.2)");
    split_cmd->add_option("--val-ratio", val_ratio, "Validation fraction of dev (default 0.2)");
    split_cmd->add_option("--seed", seed, "Validation-split seed");
    split_cmd->add_option("--graph", graph_path, "Graph spec file (default: built-in)");

    auto* annotate = app.add_subcommand("annotate", "Interactive gold annotation");
    annotate->add_option("--input", input, "Posts JSONL")->required();
    annotate->add_option("--output", output, "Labeled JSONL (append)")->required();
    annotate->add_option("--coder", coder, "Coder name stored with each item");
    annotate->add_option("--graph", graph_path, "Graph spec file (default: built-in)");

    auto* reliability = app.add_subcommand("reliability", "Inter-coder agreement and AC2");
    reliability->add_option("--first", first, "First coder's labeled JSONL")->required();
    reliability->add_option("--second", second, "Second coder's labeled JSONL")->required();
    reliability->add_option("--weights", weights_name, "identity | ordinal")
        ->check(CLI::IsMember({"identity", "ordinal"}));
    reliability->add_option("--graph", graph_path, "Graph spec file (default: built-in)");

    auto* run = app.add_subcommand("run", "Execute a configured run");
    run->add_option("--config", config_path, "App config JSON")->required();
    run->add_option("--run-id", run_id, "Fixed run id (resumes if it exists)");

    auto* report = app.add_subcommand("report", "Re-emit tables for a stored run");
    report->add_option("--runs-dir", runs_dir, "Run storage directory (default: runs)");
    report->add_option("--run", run_id, "Run id")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    }

    if (validate->parsed()) return guarded([&] { return cmd_validate_graph(graph_path); });
    if (ingest->parsed())
        return guarded([&] { return cmd_ingest(input, output, quarantine, graph_path); });
    if (split_cmd->parsed())
        return guarded(
            [&] { return cmd_split(corpus_path, out_dir, test_ratio, val_ratio, seed, graph_path); });
    if (annotate->parsed())
        return guarded([&] { return cmd_annotate(input, output, coder, graph_path); });
    if (reliability->parsed())
        return guarded([&] { return cmd_reliability(first, second, weights_name, graph_path); });
    if (run->parsed()) return guarded([&] { return cmd_run(config_path, run_id); });
    if (report->parsed()) return guarded([&] { return cmd_report(runs_dir, run_id); });
    return kConfigError;
}
