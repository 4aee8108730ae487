#include "lingo/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "lingo/errors.hpp"

namespace lingo {

void VectorIndex::add(std::string id, std::vector<double> vector) {
    if (dim_ == 0) dim_ = vector.size();
    if (vector.size() != dim_) throw DimensionMismatch("index vectors must share one dimension");
    ids_.push_back(std::move(id));
    vectors_.push_back(std::move(vector));
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DimensionMismatch("cosine: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<VectorIndex::Hit> VectorIndex::top_k(const std::vector<double>& query, std::size_t k,
                                                 const std::string& exclude_id) const {
    std::vector<Hit> hits;
    hits.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (ids_[i] == exclude_id) continue;
        hits.push_back({ids_[i], cosine_similarity(query, vectors_[i])});
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

std::vector<Demonstration> RetrievalPolicy::retrieve(const Post& query, Embedder& embedder) const {
    auto hits = index->top_k(embedder.embed_one(query.text), k, query.id);
    std::vector<Demonstration> out;
    out.reserve(hits.size());
    for (const auto& h : hits) out.push_back(demos_by_id.at(h.id));
    return out;
}

RetrievalPolicy build_retrieval_policy(const std::vector<LabeledExample>& train_pool,
                                       Embedder& embedder, std::size_t k,
                                       const std::set<std::string>& node_filter,
                                       const GraphSpec& graph) {
    if (train_pool.empty()) throw Error("retrieval pool is empty");
    if (k < 1) throw Error("retrieval k must be >= 1");

    RetrievalPolicy policy;
    policy.k = k;
    policy.node_filter = node_filter;
    policy.index = std::make_shared<VectorIndex>();
    for (const auto& ex : train_pool) {
        if (!node_filter.empty()) {
            ReasoningPath gold = check_path_consistency(ex, graph);
            bool visits = std::any_of(gold.steps.begin(), gold.steps.end(),
                                      [&](const auto& s) { return node_filter.count(s.node); });
            if (!visits) continue;
        }
        policy.index->add(ex.post.id, embedder.embed_one(ex.post.text));
        policy.demos_by_id[ex.post.id] = Demonstration{ex, ""};
    }
    if (policy.index->size() == 0)
        throw EmptyFilteredPool("node filter removed every pool example");
    return policy;
}

}  // namespace lingo
