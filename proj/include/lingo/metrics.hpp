#pragma once

#include <array>
#include <string>
#include <vector>

#include "lingo/corpus.hpp"

namespace lingo {

// Predicted labels are 0-6; kFailedPrediction marks a malformed model output
// and matches no gold label.
inline constexpr int kFailedPrediction = -1;

struct LabelMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct MetricsReport {
    std::size_t n = 0;
    double accuracy = 0.0;
    double weighted_f1 = 0.0;
    std::array<LabelMetrics, kNumLabels> per_label{};
    std::array<double, kNumCategories> per_category_weighted_f1{};
    std::array<std::size_t, kNumCategories> per_category_n{};
    // gold label x predicted label; column kNumLabels collects parse failures.
    std::array<std::array<std::size_t, kNumLabels + 1>, kNumLabels> confusion{};
    std::size_t parse_failures = 0;
    bool empty_input = false;
    bool zero_division_hit = false;  // some precision/recall/F1 had a 0 denominator

    std::string to_json() const;
    static MetricsReport from_json(const std::string& text);
    std::string to_table() const;
};

double accuracy(const std::vector<int>& gold, const std::vector<int>& pred);
double weighted_f1(const std::vector<int>& gold, const std::vector<int>& pred);

MetricsReport report(const std::vector<int>& gold, const std::vector<int>& pred,
                     const std::vector<Category>& categories);
MetricsReport report(const std::vector<int>& gold, const std::vector<int>& pred);

}  // namespace lingo
