#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lingo/graph.hpp"

namespace lingo {

// The four forms of incivility.
enum class Category { IMP, HSST, PHAVPR, THREAT };
inline constexpr int kNumCategories = 4;

std::string category_code(Category c);
std::string category_full_name(Category c);
std::optional<Category> category_from_code(const std::string& code);
// "[Impoliteness] text" -> IMP; matches the bracketed tag at the front.
std::optional<Category> category_from_tag(const std::string& post_text);

struct Post {
    std::string id;
    std::string text;
    Category category = Category::IMP;

    bool operator==(const Post&) const = default;
};

struct LabeledExample {
    Post post;
    std::map<std::string, std::string> node_answers;  // gold path only
    IntentLabel label = IntentLabel::Other;
    std::string coder;  // optional

    bool operator==(const LabeledExample&) const = default;
};

// Replays node_answers through the graph and checks the terminal matches.
// Throws ChainPathError / AnswerOutOfDomain on violation.
ReasoningPath check_path_consistency(const LabeledExample& ex, const GraphSpec& graph);

// ---- chain format: "STEP 1: NO -> STEP 4: YES -> STEP 5: Explicit -> LABEL: 1"

struct ParsedChain {
    std::map<std::string, std::string> node_answers;
    std::vector<std::string> node_order;  // as written
    IntentLabel label = IntentLabel::Other;
};

ParsedChain parse_chain(const std::string& chain, const GraphSpec& graph);
std::string render_chain(const LabeledExample& ex, const GraphSpec& graph);

// ---- dataset wire format: one JSON object per line
// {"id":..,"text":..,"category":..,"answers":{..},"label":..,"coder":..}

std::string example_to_jsonl(const LabeledExample& ex);
LabeledExample example_from_jsonl(const std::string& line);

struct LoadResult {
    std::vector<LabeledExample> examples;
    // (line, reason) for records failing path consistency; they are not loaded.
    std::vector<std::pair<std::string, std::string>> quarantined;
};

LoadResult load_examples(const std::string& path, const GraphSpec& graph);
void save_examples(const std::string& path, const std::vector<LabeledExample>& examples);

// ---- splitting

struct DatasetSplit {
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> validation;
    std::vector<LabeledExample> test;
    std::uint64_t seed = 0;
    double test_ratio = 0.2;
    double val_ratio = 0.2;
};

// Stratified by (category, label) where stratum sizes permit; the test
// partition is chosen independently of `seed` so it stays fixed across runs.
DatasetSplit split(const std::vector<LabeledExample>& corpus, double test_ratio,
                   double val_ratio, std::uint64_t seed);

// counts[category][label]
using DistributionTable = std::array<std::array<int, kNumLabels>, kNumCategories>;
DistributionTable label_distribution(const std::vector<LabeledExample>& examples);

struct ChiSquareResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int dof = 0;
};

// Pearson chi-square over the 7-label dev/test contingency table; labels with
// zero combined mass are pooled away. Throws DegenerateTable when fewer than
// two labels remain.
ChiSquareResult distribution_homogeneity(const std::vector<LabeledExample>& dev,
                                         const std::vector<LabeledExample>& test);
ChiSquareResult chi_square_2xk(const std::vector<double>& row_a, const std::vector<double>& row_b);

// Regularized upper incomplete gamma Q(a, x); chi-square survival function is
// Q(dof/2, stat/2).
double gamma_q(double a, double x);

// ---- inter-rater reliability

struct RatingsTable {
    std::vector<std::string> categories;              // shared category set
    std::vector<std::vector<std::optional<int>>> items;  // items x coders, index into categories
};

std::vector<std::vector<double>> identity_weights(std::size_t n);
std::vector<std::vector<double>> ordinal_weights(std::size_t n);

// Gwet's weighted agreement coefficient (AC2); identity weights reduce it to
// AC1. Throws DegenerateAgreement when expected agreement is 1.
double gwet_ac2(const RatingsTable& table, const std::vector<std::vector<double>>& weights);

// Simple percent agreement among rater pairs (unweighted).
double percent_agreement(const RatingsTable& table);

}  // namespace lingo
