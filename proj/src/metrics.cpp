#include "lingo/metrics.hpp"

#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "lingo/errors.hpp"

namespace lingo {

using nlohmann::json;

namespace {

void check_inputs(const std::vector<int>& gold, const std::vector<int>& pred) {
    if (gold.size() != pred.size()) throw LengthMismatch("gold/pred length mismatch");
    for (int g : gold)
        if (g < 0 || g >= kNumLabels) throw Error("gold label out of range");
    for (int p : pred)
        if (p != kFailedPrediction && (p < 0 || p >= kNumLabels))
            throw Error("predicted label out of range");
}

struct Core {
    std::array<LabelMetrics, kNumLabels> per_label{};
    double accuracy = 0.0;
    double weighted_f1 = 0.0;
    bool zero_division = false;
};

Core compute_core(const std::vector<int>& gold, const std::vector<int>& pred) {
    Core core;
    if (gold.empty()) return core;
    std::array<std::size_t, kNumLabels> tp{}, fp{}, fn{};
    std::size_t correct = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] == pred[i]) {
            ++correct;
            ++tp[gold[i]];
        } else {
            ++fn[gold[i]];
            if (pred[i] != kFailedPrediction) ++fp[pred[i]];
        }
    }
    core.accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());

    double weighted_sum = 0.0;
    for (int label = 0; label < kNumLabels; ++label) {
        auto& m = core.per_label[label];
        m.support = tp[label] + fn[label];
        std::size_t pred_count = tp[label] + fp[label];
        if (pred_count == 0) {
            m.precision = 0.0;
            if (m.support > 0) core.zero_division = true;
        } else {
            m.precision = static_cast<double>(tp[label]) / static_cast<double>(pred_count);
        }
        m.recall = m.support == 0 ? 0.0
                                  : static_cast<double>(tp[label]) /
                                        static_cast<double>(m.support);
        double denom = m.precision + m.recall;
        m.f1 = denom == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / denom;
        weighted_sum += static_cast<double>(m.support) * m.f1;
    }
    core.weighted_f1 = weighted_sum / static_cast<double>(gold.size());
    return core;
}

}  // namespace

double accuracy(const std::vector<int>& gold, const std::vector<int>& pred) {
    check_inputs(gold, pred);
    return compute_core(gold, pred).accuracy;
}

double weighted_f1(const std::vector<int>& gold, const std::vector<int>& pred) {
    check_inputs(gold, pred);
    return compute_core(gold, pred).weighted_f1;
}

MetricsReport report(const std::vector<int>& gold, const std::vector<int>& pred,
                     const std::vector<Category>& categories) {
    check_inputs(gold, pred);
    if (!categories.empty() && categories.size() != gold.size())
        throw LengthMismatch("categories length mismatch");

    MetricsReport r;
    r.n = gold.size();
    r.empty_input = gold.empty();
    Core core = compute_core(gold, pred);
    r.accuracy = core.accuracy;
    r.weighted_f1 = core.weighted_f1;
    r.per_label = core.per_label;
    r.zero_division_hit = core.zero_division;

    for (std::size_t i = 0; i < gold.size(); ++i) {
        int col = pred[i] == kFailedPrediction ? kNumLabels : pred[i];
        ++r.confusion[gold[i]][col];
        if (pred[i] == kFailedPrediction) ++r.parse_failures;
    }

    if (!categories.empty()) {
        for (int c = 0; c < kNumCategories; ++c) {
            std::vector<int> g, p;
            for (std::size_t i = 0; i < gold.size(); ++i) {
                if (static_cast<int>(categories[i]) != c) continue;
                g.push_back(gold[i]);
                p.push_back(pred[i]);
            }
            r.per_category_n[c] = g.size();
            r.per_category_weighted_f1[c] = g.empty() ? 0.0 : compute_core(g, p).weighted_f1;
        }
    }
    return r;
}

MetricsReport report(const std::vector<int>& gold, const std::vector<int>& pred) {
    return report(gold, pred, {});
}

std::string MetricsReport::to_json() const {
    json labels = json::array();
    for (int l = 0; l < kNumLabels; ++l)
        labels.push_back({{"label", l},
                          {"precision", per_label[l].precision},
                          {"recall", per_label[l].recall},
                          {"f1", per_label[l].f1},
                          {"support", per_label[l].support}});
    json cats = json::object();
    for (int c = 0; c < kNumCategories; ++c)
        cats[category_code(static_cast<Category>(c))] = {
            {"weighted_f1", per_category_weighted_f1[c]}, {"n", per_category_n[c]}};
    json conf = json::array();
    for (const auto& row : confusion) conf.push_back(row);
    json j = {{"n", n},
              {"accuracy", accuracy},
              {"weighted_f1", weighted_f1},
              {"per_label", labels},
              {"per_category", cats},
              {"confusion", conf},
              {"parse_failures", parse_failures},
              {"empty_input", empty_input},
              {"zero_division_hit", zero_division_hit}};
    return j.dump(2) + "\n";
}

MetricsReport MetricsReport::from_json(const std::string& text) {
    json j = json::parse(text);
    MetricsReport r;
    r.n = j.at("n").get<std::size_t>();
    r.accuracy = j.at("accuracy").get<double>();
    r.weighted_f1 = j.at("weighted_f1").get<double>();
    for (const auto& jl : j.at("per_label")) {
        int l = jl.at("label").get<int>();
        r.per_label[l] = {jl.at("precision").get<double>(), jl.at("recall").get<double>(),
                          jl.at("f1").get<double>(), jl.at("support").get<std::size_t>()};
    }
    for (int c = 0; c < kNumCategories; ++c) {
        const auto& jc = j.at("per_category").at(category_code(static_cast<Category>(c)));
        r.per_category_weighted_f1[c] = jc.at("weighted_f1").get<double>();
        r.per_category_n[c] = jc.at("n").get<std::size_t>();
    }
    for (int l = 0; l < kNumLabels; ++l)
        r.confusion[l] = j.at("confusion").at(l).get<std::array<std::size_t, kNumLabels + 1>>();
    r.parse_failures = j.at("parse_failures").get<std::size_t>();
    r.empty_input = j.at("empty_input").get<bool>();
    r.zero_division_hit = j.at("zero_division_hit").get<bool>();
    return r;
}

std::string MetricsReport::to_table() const {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3);
    os << "n=" << n << "  accuracy=" << accuracy << "  weighted_f1=" << weighted_f1
       << "  parse_failures=" << parse_failures << "\n\n";
    os << std::left << std::setw(8) << "label" << std::right << std::setw(11) << "precision"
       << std::setw(9) << "recall" << std::setw(9) << "f1" << std::setw(9) << "support" << "\n";
    for (int l = 0; l < kNumLabels; ++l)
        os << std::left << std::setw(8) << l << std::right << std::setw(11)
           << per_label[l].precision << std::setw(9) << per_label[l].recall << std::setw(9)
           << per_label[l].f1 << std::setw(9) << per_label[l].support << "\n";
    os << "\n" << std::left << std::setw(8) << "form" << std::right << std::setw(9) << "wF1"
       << std::setw(9) << "n" << "\n";
    for (int c = 0; c < kNumCategories; ++c)
        os << std::left << std::setw(8) << category_code(static_cast<Category>(c)) << std::right
           << std::setw(9) << per_category_weighted_f1[c] << std::setw(9) << per_category_n[c]
           << "\n";
    return os.str();
}

}  // namespace lingo
