#include "lingo/datagen.hpp"

#include <iomanip>
#include <map>
#include <sstream>

#include "lingo/hash.hpp"

namespace lingo {

namespace {

// counts[category][label], from the published distribution of the 2,000
// annotated posts (label 4 has no case in either partition).
constexpr int kDev[kNumCategories][kNumLabels] = {
    {89, 268, 24, 5, 0, 9, 5},
    {290, 51, 7, 12, 0, 36, 4},
    {292, 8, 8, 53, 0, 31, 8},
    {231, 14, 7, 32, 0, 113, 3},
};
constexpr int kTest[kNumCategories][kNumLabels] = {
    {22, 67, 6, 2, 0, 2, 1},
    {68, 15, 1, 3, 0, 10, 3},
    {70, 2, 2, 17, 0, 5, 4},
    {67, 3, 1, 9, 0, 20, 0},
};

std::map<std::string, std::string> gold_answers(IntentLabel label, bool alt) {
    switch (label) {
        case IntentLabel::Other:
            if (alt) return {{"STEP 1", "YES"}, {"STEP 2", "NO"}, {"STEP 4", "NO"}};
            return {{"STEP 1", "NO"}, {"STEP 4", "NO"}};
        case IntentLabel::Explicit:
            if (alt)
                return {{"STEP 1", "YES"}, {"STEP 2", "NO"}, {"STEP 4", "YES"},
                        {"STEP 5", "Explicit"}};
            return {{"STEP 1", "NO"}, {"STEP 4", "YES"}, {"STEP 5", "Explicit"}};
        case IntentLabel::Implicit:
            if (alt)
                return {{"STEP 1", "YES"}, {"STEP 2", "NO"}, {"STEP 4", "YES"},
                        {"STEP 5", "Implicit"}};
            return {{"STEP 1", "NO"}, {"STEP 4", "YES"}, {"STEP 5", "Implicit"}};
        case IntentLabel::Report:
            return {{"STEP 1", "YES"}, {"STEP 2", "YES"}, {"STEP 3", "Report"}};
        case IntentLabel::Intensify:
            return {{"STEP 1", "YES"}, {"STEP 2", "YES"}, {"STEP 3", "Intensify"}};
        case IntentLabel::Counter:
            return {{"STEP 1", "YES"}, {"STEP 2", "YES"}, {"STEP 3", "Counter"}};
        case IntentLabel::Escalate:
            return {{"STEP 1", "YES"}, {"STEP 2", "YES"}, {"STEP 3", "Escalate"}};
    }
    return {};
}

std::string synthetic_text(const std::string& id, Category category, IntentLabel label) {
    static const char* kWords[] = {
        "governo",  "senado",   "deputado", "eleicao",  "urna",     "voto",
        "imprensa", "justica",  "protesto", "discurso", "partido",  "campanha",
        "mandato",  "reforma",  "tribunal", "ministro", "cidadao",  "debate",
        "congresso", "petista",  "bolsonarista", "esquerda", "direita", "militante",
        "corrupto", "patriota", "vergonha", "absurdo",  "mentira",  "golpe",
        "liberdade", "censura",
    };
    constexpr std::size_t kWordCount = sizeof(kWords) / sizeof(kWords[0]);

    std::uint64_t state = fnv1a64(id);
    std::ostringstream os;
    os << "[" << category_full_name(category) << "]";
    std::size_t words = 6 + splitmix64(state) % 5;
    for (std::size_t w = 0; w < words; ++w) os << " " << kWords[splitmix64(state) % kWordCount];
    os << " #" << label_name(label) << " " << id;
    return os.str();
}

std::vector<LabeledExample> generate(const int counts[kNumCategories][kNumLabels],
                                     const std::string& partition) {
    std::vector<LabeledExample> out;
    for (int c = 0; c < kNumCategories; ++c) {
        auto category = static_cast<Category>(c);
        for (int l = 0; l < kNumLabels; ++l) {
            auto label = *label_from_int(l);
            for (int i = 0; i < counts[c][l]; ++i) {
                LabeledExample ex;
                std::ostringstream id;
                id << partition << "-" << category_code(category) << "-" << l << "-"
                   << std::setw(3) << std::setfill('0') << i;
                ex.post.id = id.str();
                ex.post.category = category;
                ex.post.text = synthetic_text(ex.post.id, category, label);
                ex.label = label;
                ex.node_answers = gold_answers(label, i % 2 == 1);
                ex.coder = "synthetic";
                out.push_back(std::move(ex));
            }
        }
    }
    return out;
}

DistributionTable to_table(const int counts[kNumCategories][kNumLabels]) {
    DistributionTable t{};
    for (int c = 0; c < kNumCategories; ++c)
        for (int l = 0; l < kNumLabels; ++l) t[c][l] = counts[c][l];
    return t;
}

}  // namespace

std::vector<LabeledExample> SyntheticCorpus::all() const {
    std::vector<LabeledExample> out = dev;
    out.insert(out.end(), test.begin(), test.end());
    return out;
}

SyntheticCorpus synthetic_corpus() {
    SyntheticCorpus corpus;
    corpus.dev = generate(kDev, "dev");
    corpus.test = generate(kTest, "test");
    return corpus;
}

DistributionTable reference_dev_distribution() { return to_table(kDev); }
DistributionTable reference_test_distribution() { return to_table(kTest); }

}  // namespace lingo
