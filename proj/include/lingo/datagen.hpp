#pragma once

#include <vector>

#include "lingo/corpus.hpp"

namespace lingo {

// Deterministic synthetic corpus whose per-(category, label) counts match the
// published distribution of the annotated posts: 1,600 development and 400
// test examples, each with a consistent gold reasoning chain. Stands in for
// the licensed corpus so the full pipeline runs offline.
struct SyntheticCorpus {
    std::vector<LabeledExample> dev;
    std::vector<LabeledExample> test;

    std::vector<LabeledExample> all() const;
};

SyntheticCorpus synthetic_corpus();

// The published counts, indexable as [category][label].
DistributionTable reference_dev_distribution();
DistributionTable reference_test_distribution();

}  // namespace lingo
