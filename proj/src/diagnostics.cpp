#include "lingo/diagnostics.hpp"

#include <iomanip>
#include <sstream>

#include "lingo/errors.hpp"

namespace lingo {

namespace {

struct Aligned {
    const Prediction* pred;
    const LabeledExample* gold;
};

std::vector<Aligned> align(const std::vector<Prediction>& predictions,
                           const std::vector<LabeledExample>& golds) {
    std::map<std::string, const LabeledExample*> by_id;
    for (const auto& g : golds)
        if (!by_id.emplace(g.post.id, &g).second)
            throw AlignmentError("duplicate gold id " + g.post.id);
    if (predictions.size() != golds.size())
        throw AlignmentError("prediction/gold count mismatch");
    std::vector<Aligned> out;
    out.reserve(predictions.size());
    std::set<std::string> used;
    for (const auto& p : predictions) {
        auto it = by_id.find(p.example_id);
        if (it == by_id.end()) throw AlignmentError("no gold for prediction " + p.example_id);
        if (!used.insert(p.example_id).second)
            throw AlignmentError("duplicate prediction id " + p.example_id);
        out.push_back({&p, it->second});
    }
    return out;
}

bool final_label_wrong(const Prediction& p, const LabeledExample& gold) {
    return p.status == ParseStatus::failed || !p.label || *p.label != gold.label;
}

// Visits each (node, mismatch?) pair of one aligned example.
template <typename Visit>
void walk(const Aligned& a, const GraphSpec& graph, bool errors_only, Visit&& visit) {
    const bool label_wrong = final_label_wrong(*a.pred, *a.gold);
    if (a.pred->status == ParseStatus::failed) {
        // Failed parses are attributed to the entry node only.
        visit(graph.root, /*comparable=*/true, /*mismatch=*/true, std::nullopt);
        return;
    }
    for (const auto& step : a.pred->path->steps) {
        auto git = a.gold->node_answers.find(step.node);
        if (git == a.gold->node_answers.end()) {
            visit(step.node, false, false, step.answer);
            continue;
        }
        bool differs = canonical_answer(step.answer) != canonical_answer(git->second);
        bool mismatch = differs && (!errors_only || label_wrong);
        visit(step.node, true, mismatch, step.answer);
    }
}

}  // namespace

StepStats diagnose(const std::vector<Prediction>& predictions,
                   const std::vector<LabeledExample>& golds, const GraphSpec& graph,
                   bool errors_only) {
    StepStats stats;
    stats.errors_only = errors_only;
    for (const auto& n : graph.nodes) stats.nodes.emplace(n.id, NodeStats{});

    for (const auto& a : align(predictions, golds)) {
        walk(a, graph, errors_only,
             [&](const std::string& node, bool comparable, bool mismatch,
                 const std::optional<std::string>&) {
                 auto& s = stats.nodes[node];
                 ++s.visited_count;
                 if (comparable) ++s.comparable_count;
                 if (mismatch) ++s.mismatch_count;
             });
    }
    for (auto& [id, s] : stats.nodes)
        s.mismatch_rate = s.comparable_count == 0
                              ? 0.0
                              : static_cast<double>(s.mismatch_count) /
                                    static_cast<double>(s.comparable_count);
    return stats;
}

TargetSet select_targets(const StepStats& stats, double tau) {
    if (tau < 0.0 || tau > 1.0) throw Error("tau must lie in [0,1]");
    TargetSet targets;
    targets.threshold = tau;
    for (const auto& [id, s] : stats.nodes)
        if (s.mismatch_rate > tau) targets.nodes.insert(id);
    return targets;
}

std::vector<ErrorCase> collect_errors(const std::vector<Prediction>& predictions,
                                      const std::vector<LabeledExample>& golds,
                                      const GraphSpec& graph, const std::string& node,
                                      bool errors_only) {
    if (graph.find(node) == nullptr) throw UnknownNode("no node " + node + " in graph");
    std::vector<ErrorCase> out;
    for (const auto& a : align(predictions, golds)) {
        walk(a, graph, errors_only,
             [&](const std::string& id, bool, bool mismatch,
                 const std::optional<std::string>& answer) {
                 if (!mismatch || id != node) return;
                 ErrorCase e;
                 e.example = *a.gold;
                 auto git = a.gold->node_answers.find(node);
                 e.gold_answer = git != a.gold->node_answers.end() ? git->second : "";
                 e.predicted_answer = answer;
                 if (a.pred->path) e.predicted_path = *a.pred->path;
                 out.push_back(std::move(e));
             });
    }
    return out;
}

std::string StepStats::to_table(const std::set<std::string>& selected) const {
    std::ostringstream os;
    os << std::left << std::setw(10) << "node" << std::right << std::setw(9) << "visited"
       << std::setw(12) << "comparable" << std::setw(12) << "mismatches" << std::setw(9)
       << "rate" << std::setw(10) << "selected" << "\n";
    for (const auto& [id, s] : nodes) {
        os << std::left << std::setw(10) << id << std::right << std::setw(9) << s.visited_count
           << std::setw(12) << s.comparable_count << std::setw(12) << s.mismatch_count
           << std::setw(9) << std::fixed << std::setprecision(4) << s.mismatch_rate
           << std::setw(10) << (selected.count(id) ? "yes" : "no") << "\n";
    }
    return os.str();
}

}  // namespace lingo
