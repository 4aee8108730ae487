#include "lingo/predict.hpp"

#include <json.hpp>

#include "lingo/errors.hpp"

namespace lingo {

using nlohmann::json;

namespace {

const char* kFormatReminder =
    "Your previous reply could not be parsed. Return ONLY the JSON object in the required "
    "output format, with no surrounding text.";

Prediction parse_for_mode(const std::string& raw, const GraphSpec& graph, RenderMode mode) {
    if (mode == RenderMode::lingo) return parse_prediction(raw, graph);
    return parse_label_prediction(raw);
}

}  // namespace

Prediction predict_one(Gateway& gateway, const PromptBundle& bundle, const LabeledExample& ex,
                       const GraphSpec& graph, const PredictOptions& options) {
    std::vector<Demonstration> query_demos;
    if (options.policy != nullptr) {
        if (options.embedder == nullptr) throw Error("retrieval policy requires an embedder");
        query_demos = options.policy->retrieve(ex.post, *options.embedder);
    }
    std::string prompt =
        render_with_query_demos(bundle, ex.post, options.mode, query_demos);

    ChatRequest request;
    request.system_text = "You follow the task instructions exactly.";
    request.user_text = prompt;
    request.example_id = ex.post.id;
    request.round = options.round;
    request.split_tag = options.split_tag;

    auto [raw, hash] = gateway.complete(request);
    Prediction p = parse_for_mode(raw, graph, options.mode);
    if (gateway.log()) gateway.log()->annotate_parse(hash, p.status);

    if (p.status == ParseStatus::failed && options.reask_on_failure) {
        ChatRequest reask = request;
        reask.user_text = prompt + "\n\n" + kFormatReminder + "\nPrevious reply:\n" + raw;
        auto [raw2, hash2] = gateway.complete(reask);
        Prediction p2 = parse_for_mode(raw2, graph, options.mode);
        if (gateway.log()) gateway.log()->annotate_parse(hash2, p2.status);
        if (p2.status != ParseStatus::failed) p = std::move(p2);
    }
    p.example_id = ex.post.id;
    return p;
}

std::vector<Prediction> predict_examples(Gateway& gateway, const PromptBundle& bundle,
                                         const std::vector<LabeledExample>& examples,
                                         const GraphSpec& graph, const PredictOptions& options) {
    std::vector<Prediction> out(examples.size());
    parallel_for_indexed(examples.size(), options.in_flight, [&](std::size_t i) {
        out[i] = predict_one(gateway, bundle, examples[i], graph, options);
    });
    return out;
}

std::string prediction_to_jsonl(const Prediction& p) {
    json j;
    j["example_id"] = p.example_id;
    j["raw"] = p.raw;
    j["parse_status"] = parse_status_name(p.status);
    if (p.label) j["label"] = static_cast<int>(*p.label);
    if (!p.fail_reason.empty()) j["fail_reason"] = p.fail_reason;
    if (p.path) {
        json steps = json::array();
        for (const auto& s : p.path->steps) steps.push_back({{"node", s.node}, {"answer", s.answer}});
        j["path"] = {{"steps", steps}, {"terminal", static_cast<int>(p.path->terminal)}};
    }
    return j.dump();
}

Prediction prediction_from_jsonl(const std::string& line) {
    json j = json::parse(line);
    Prediction p;
    p.example_id = j.at("example_id").get<std::string>();
    p.raw = j.value("raw", "");
    std::string status = j.at("parse_status").get<std::string>();
    p.status = status == "ok" ? ParseStatus::ok
               : status == "repaired" ? ParseStatus::repaired
                                      : ParseStatus::failed;
    if (j.contains("label")) p.label = label_from_int(j["label"].get<int>());
    p.fail_reason = j.value("fail_reason", "");
    if (j.contains("path")) {
        ReasoningPath path;
        for (const auto& js : j["path"].at("steps"))
            path.steps.push_back({js.at("node").get<std::string>(),
                                  js.at("answer").get<std::string>()});
        path.terminal = *label_from_int(j["path"].at("terminal").get<int>());
        p.path = std::move(path);
    }
    return p;
}

}  // namespace lingo
