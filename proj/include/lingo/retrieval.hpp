#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lingo/gateway.hpp"
#include "lingo/prompt.hpp"

namespace lingo {

// Brute-force cosine nearest-neighbor index. Pools here are a few thousand
// items at most; an exact scan is both the oracle and the implementation.
class VectorIndex {
public:
    void add(std::string id, std::vector<double> vector);
    std::size_t size() const { return ids_.size(); }
    std::size_t dimension() const { return dim_; }
    const std::vector<std::string>& ids() const { return ids_; }

    struct Hit {
        std::string id;
        double score;
    };
    // Top-k by cosine similarity; ties broken by id for determinism.
    std::vector<Hit> top_k(const std::vector<double>& query, std::size_t k,
                           const std::string& exclude_id = "") const;

private:
    std::size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<std::vector<double>> vectors_;
};

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

// Per-query demonstration selection: k nearest training examples by
// embedding similarity, optionally restricted to examples whose gold path
// visits the targeted nodes.
struct RetrievalPolicy {
    std::shared_ptr<VectorIndex> index;
    std::map<std::string, Demonstration> demos_by_id;
    std::size_t k = 4;
    std::set<std::string> node_filter;  // empty = no filter

    std::vector<Demonstration> retrieve(const Post& query, Embedder& embedder) const;
};

// Embeds and indexes the (optionally node-filtered) pool.
// Throws EmptyFilteredPool when the filter removes everything.
RetrievalPolicy build_retrieval_policy(const std::vector<LabeledExample>& train_pool,
                                       Embedder& embedder, std::size_t k,
                                       const std::set<std::string>& node_filter,
                                       const GraphSpec& graph);

}  // namespace lingo
