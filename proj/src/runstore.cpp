#include "lingo/runstore.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "lingo/errors.hpp"
#include "lingo/hash.hpp"

namespace lingo {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFound("missing artifact: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void atomic_write(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StorageError("cannot write " + tmp.string());
        out << content;
        if (!out) throw StorageError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw StorageError("rename failed for " + path.string() + ": " + ec.message());
}

std::string round_dir_name(int round) {
    std::ostringstream os;
    os << "round_" << std::setw(3) << std::setfill('0') << round;
    return os.str();
}

json stats_to_json(const StepStats& stats) {
    json nodes = json::object();
    for (const auto& [id, s] : stats.nodes)
        nodes[id] = {{"visited", s.visited_count},
                     {"comparable", s.comparable_count},
                     {"mismatches", s.mismatch_count},
                     {"rate", s.mismatch_rate}};
    return {{"errors_only", stats.errors_only}, {"nodes", nodes}};
}

StepStats stats_from_json(const json& j) {
    StepStats stats;
    stats.errors_only = j.at("errors_only").get<bool>();
    for (const auto& [id, js] : j.at("nodes").items()) {
        NodeStats s;
        s.visited_count = js.at("visited").get<std::size_t>();
        s.comparable_count = js.at("comparable").get<std::size_t>();
        s.mismatch_count = js.at("mismatches").get<std::size_t>();
        s.mismatch_rate = js.at("rate").get<double>();
        stats.nodes[id] = s;
    }
    return stats;
}

}  // namespace

RunStore::RunStore(std::string base_dir) : base_dir_(std::move(base_dir)) {
    fs::create_directories(base_dir_);
}

std::string RunStore::run_dir(const std::string& run_id) const {
    return (fs::path(base_dir_) / run_id).string();
}

bool RunStore::exists(const std::string& run_id) const {
    return fs::exists(fs::path(run_dir(run_id)) / "record.json");
}

std::string RunStore::create_run(const std::string& config_json,
                                 const std::optional<std::string>& run_id) {
    std::string hash = content_hash(config_json);
    std::string id = run_id.value_or("run-" + hash.substr(0, 12));
    if (!run_id) {
        int suffix = 2;
        while (exists(id)) id = "run-" + hash.substr(0, 12) + "-" + std::to_string(suffix++);
    } else if (exists(id)) {
        throw StorageError("run id already exists: " + id);
    }

    fs::path dir(run_dir(id));
    fs::create_directories(dir / "rounds");
    atomic_write(dir / "config.json", config_json);
    json record = {{"run_id", id}, {"config_hash", hash}, {"status", "running"},
                   {"best_round", -1}};
    atomic_write(dir / "record.json", record.dump(2) + "\n");
    atomic_write(dir / "rounds" / "index.json", json{{"rounds", json::array()}}.dump(2) + "\n");
    return id;
}

void RunStore::persist_round(const std::string& run_id, const RoundCheckpoint& checkpoint) {
    fs::path dir(run_dir(run_id));
    if (!fs::exists(dir / "record.json")) throw NotFound("no such run: " + run_id);

    fs::path index_path = dir / "rounds" / "index.json";
    json index = json::parse(read_file(index_path));
    for (const auto& entry : index.at("rounds"))
        if (entry.at("round").get<int>() == checkpoint.round)
            throw StorageError("round " + std::to_string(checkpoint.round) +
                               " already persisted");

    fs::path round_dir = dir / "rounds" / round_dir_name(checkpoint.round);
    fs::create_directories(round_dir);

    std::string bundle_text = bundle_to_json(checkpoint.bundle);

    json meta = {{"round", checkpoint.round},
                 {"validation_score", checkpoint.validation_score},
                 {"stats", stats_to_json(checkpoint.stats)},
                 {"targets", checkpoint.targets},
                 {"notes", checkpoint.notes},
                 {"policy",
                  {{"installed", checkpoint.policy.installed},
                   {"k", checkpoint.policy.k},
                   {"node_filter", checkpoint.policy.node_filter},
                   {"pool_ids", checkpoint.policy.pool_ids}}}};
    std::string meta_text = meta.dump(2) + "\n";

    std::ostringstream preds;
    for (const auto& p : checkpoint.predictions) preds << prediction_to_jsonl(p) << "\n";
    std::string preds_text = preds.str();

    atomic_write(round_dir / "bundle.json", bundle_text);
    atomic_write(round_dir / "round.json", meta_text);
    atomic_write(round_dir / "predictions.jsonl", preds_text);
    atomic_write(round_dir / "diagnostics.txt",
                 checkpoint.stats.to_table(checkpoint.targets));

    // Index goes last; a crash before this point leaves the round invisible.
    index["rounds"].push_back({{"round", checkpoint.round},
                               {"dir", round_dir_name(checkpoint.round)},
                               {"hashes",
                                {{"bundle.json", content_hash(bundle_text)},
                                 {"round.json", content_hash(meta_text)},
                                 {"predictions.jsonl", content_hash(preds_text)}}}});
    atomic_write(index_path, index.dump(2) + "\n");
}

std::vector<int> RunStore::rounds(const std::string& run_id) const {
    fs::path index_path = fs::path(run_dir(run_id)) / "rounds" / "index.json";
    json index = json::parse(read_file(index_path));
    std::vector<int> out;
    for (const auto& entry : index.at("rounds")) out.push_back(entry.at("round").get<int>());
    std::sort(out.begin(), out.end());
    return out;
}

RoundCheckpoint RunStore::load_checkpoint(const std::string& run_id, int round) const {
    fs::path dir(run_dir(run_id));
    json index = json::parse(read_file(dir / "rounds" / "index.json"));
    const json* entry = nullptr;
    for (const auto& e : index.at("rounds"))
        if (e.at("round").get<int>() == round) entry = &e;
    if (entry == nullptr)
        throw NotFound("round " + std::to_string(round) + " not indexed in run " + run_id);

    fs::path round_dir = dir / "rounds" / entry->at("dir").get<std::string>();
    auto verified_read = [&](const char* name) {
        std::string text = read_file(round_dir / name);
        std::string expect = entry->at("hashes").at(name).get<std::string>();
        if (content_hash(text) != expect)
            throw HashMismatch(std::string(name) + " corrupted in round " +
                               std::to_string(round));
        return text;
    };

    RoundCheckpoint cp;
    cp.bundle = bundle_from_json(verified_read("bundle.json"));
    json meta = json::parse(verified_read("round.json"));
    cp.round = meta.at("round").get<int>();
    cp.validation_score = meta.at("validation_score").get<double>();
    cp.stats = stats_from_json(meta.at("stats"));
    cp.targets = meta.at("targets").get<std::set<std::string>>();
    cp.notes = meta.at("notes").get<std::vector<std::string>>();
    cp.policy.installed = meta.at("policy").at("installed").get<bool>();
    cp.policy.k = meta.at("policy").at("k").get<std::size_t>();
    cp.policy.node_filter = meta.at("policy").at("node_filter").get<std::set<std::string>>();
    cp.policy.pool_ids = meta.at("policy").at("pool_ids").get<std::vector<std::string>>();

    std::istringstream preds(verified_read("predictions.jsonl"));
    std::string line;
    while (std::getline(preds, line))
        if (!line.empty()) cp.predictions.push_back(prediction_from_jsonl(line));
    return cp;
}

RunRecord RunStore::load_record(const std::string& run_id) const {
    json j = json::parse(read_file(fs::path(run_dir(run_id)) / "record.json"));
    RunRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.status = j.at("status").get<std::string>();
    r.best_round = j.at("best_round").get<int>();
    return r;
}

std::string RunStore::load_config(const std::string& run_id) const {
    return read_file(fs::path(run_dir(run_id)) / "config.json");
}

static void update_record(const std::string& dir, const std::function<void(json&)>& edit) {
    fs::path path = fs::path(dir) / "record.json";
    json j = json::parse(read_file(path));
    edit(j);
    atomic_write(path, j.dump(2) + "\n");
}

void RunStore::set_status(const std::string& run_id, const std::string& status) {
    update_record(run_dir(run_id), [&](json& j) { j["status"] = status; });
}

void RunStore::set_best_round(const std::string& run_id, int round) {
    update_record(run_dir(run_id), [&](json& j) { j["best_round"] = round; });
}

void RunStore::save_log(const std::string& run_id, const RunLog& log) {
    std::ostringstream os;
    for (const auto& r : log.records()) os << r.to_jsonl() << "\n";
    atomic_write(fs::path(run_dir(run_id)) / "run_log.jsonl", os.str());
}

void RunStore::save_test_report(const std::string& run_id, const MetricsReport& report,
                                const std::vector<Prediction>& predictions) {
    fs::path dir(run_dir(run_id));
    std::ostringstream preds;
    for (const auto& p : predictions) preds << prediction_to_jsonl(p) << "\n";
    atomic_write(dir / "test_predictions.jsonl", preds.str());
    atomic_write(dir / "test_report.json", report.to_json());
}

bool RunStore::has_test_report(const std::string& run_id) const {
    return fs::exists(fs::path(run_dir(run_id)) / "test_report.json");
}

MetricsReport RunStore::load_test_report(const std::string& run_id) const {
    return MetricsReport::from_json(read_file(fs::path(run_dir(run_id)) / "test_report.json"));
}

std::vector<Prediction> RunStore::load_test_predictions(const std::string& run_id) const {
    std::istringstream in(read_file(fs::path(run_dir(run_id)) / "test_predictions.jsonl"));
    std::vector<Prediction> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(prediction_from_jsonl(line));
    return out;
}

}  // namespace lingo
