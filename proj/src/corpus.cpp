#include "lingo/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "lingo/errors.hpp"
#include "lingo/hash.hpp"

namespace lingo {

using nlohmann::json;

std::string category_code(Category c) {
    switch (c) {
        case Category::IMP: return "IMP";
        case Category::HSST: return "HSST";
        case Category::PHAVPR: return "PHAVPR";
        case Category::THREAT: return "THREAT";
    }
    return "?";
}

std::string category_full_name(Category c) {
    switch (c) {
        case Category::IMP: return "Impoliteness";
        case Category::HSST: return "Hate Speech and Stereotyping";
        case Category::PHAVPR: return "Physical Harm and Violent Political Rhetoric";
        case Category::THREAT: return "Threats to Democratic Institutions and Values";
    }
    return "?";
}

std::optional<Category> category_from_code(const std::string& code) {
    for (Category c : {Category::IMP, Category::HSST, Category::PHAVPR, Category::THREAT})
        if (category_code(c) == code) return c;
    return std::nullopt;
}

std::optional<Category> category_from_tag(const std::string& post_text) {
    auto open = post_text.find('[');
    if (open == std::string::npos) return std::nullopt;
    auto close = post_text.find(']', open);
    if (close == std::string::npos) return std::nullopt;
    std::string tag = post_text.substr(open + 1, close - open - 1);
    for (Category c : {Category::IMP, Category::HSST, Category::PHAVPR, Category::THREAT})
        if (category_full_name(c) == tag || category_code(c) == tag) return c;
    return std::nullopt;
}

ReasoningPath check_path_consistency(const LabeledExample& ex, const GraphSpec& graph) {
    ReasoningPath path = replay(graph, ex.node_answers);
    if (path.terminal != ex.label)
        throw ChainPathError("label " + std::to_string(static_cast<int>(ex.label)) +
                             " contradicts path terminal " +
                             std::to_string(static_cast<int>(path.terminal)));
    if (path.steps.size() != ex.node_answers.size())
        throw ChainPathError("answers present for nodes off the replayed path");
    return path;
}

// ---- chain format ------------------------------------------------------

static std::vector<std::string> split_segments(const std::string& chain) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        auto arrow = chain.find(" -> ", pos);
        if (arrow == std::string::npos) {
            out.push_back(chain.substr(pos));
            return out;
        }
        out.push_back(chain.substr(pos, arrow - pos));
        pos = arrow + 4;
    }
}

ParsedChain parse_chain(const std::string& chain, const GraphSpec& graph) {
    auto segments = split_segments(chain);
    if (segments.size() < 2) throw ChainSyntaxError("chain has fewer than two segments");

    ParsedChain parsed;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const std::string& seg = segments[i];
        auto colon = seg.find(": ");
        if (colon == std::string::npos)
            throw ChainSyntaxError("segment '" + seg + "' missing ': ' separator");
        std::string key = seg.substr(0, colon);
        std::string value = seg.substr(colon + 2);
        if (key.empty() || value.empty())
            throw ChainSyntaxError("segment '" + seg + "' has empty key or value");

        if (i + 1 == segments.size()) {
            if (key != "LABEL") throw ChainSyntaxError("chain must end with a LABEL segment");
            int v = 0;
            try {
                std::size_t used = 0;
                v = std::stoi(value, &used);
                if (used != value.size()) throw std::invalid_argument(value);
            } catch (const std::exception&) {
                throw ChainSyntaxError("non-numeric label '" + value + "'");
            }
            auto label = label_from_int(v);
            if (!label) throw ChainSyntaxError("label " + value + " out of range 0-6");
            parsed.label = *label;
        } else {
            if (key == "LABEL") throw ChainSyntaxError("LABEL segment before end of chain");
            if (graph.find(key) == nullptr)
                throw ChainSyntaxError("unknown node '" + key + "'");
            if (parsed.node_answers.count(key))
                throw ChainSyntaxError("node '" + key + "' answered twice");
            parsed.node_answers[key] = value;
            parsed.node_order.push_back(key);
        }
    }

    // Replay to validate routing; canonicalize answers to the graph's casing.
    ReasoningPath path;
    try {
        path = replay(graph, parsed.node_answers);
    } catch (const AnswerOutOfDomain& e) {
        throw ChainPathError(std::string("answer-out-of-domain: ") + e.what());
    }
    if (path.terminal != parsed.label)
        throw ChainPathError("label contradicts path terminal " +
                             std::to_string(static_cast<int>(path.terminal)));
    if (path.steps.size() != parsed.node_answers.size())
        throw ChainPathError("chain answers nodes off the routed path");
    std::vector<std::string> routed_order;
    parsed.node_answers.clear();
    for (const auto& step : path.steps) {
        parsed.node_answers[step.node] = step.answer;
        routed_order.push_back(step.node);
    }
    if (routed_order != parsed.node_order)
        throw ChainPathError("chain segment order differs from routed order");
    return parsed;
}

std::string render_chain(const LabeledExample& ex, const GraphSpec& graph) {
    ReasoningPath path = check_path_consistency(ex, graph);
    std::ostringstream os;
    for (const auto& step : path.steps) os << step.node << ": " << step.answer << " -> ";
    os << "LABEL: " << static_cast<int>(path.terminal);
    return os.str();
}

// ---- dataset wire format ----------------------------------------------

std::string example_to_jsonl(const LabeledExample& ex) {
    json answers = json::object();
    for (const auto& [node, answer] : ex.node_answers) answers[node] = answer;
    json j = {{"id", ex.post.id},
              {"text", ex.post.text},
              {"category", category_code(ex.post.category)},
              {"answers", answers},
              {"label", static_cast<int>(ex.label)}};
    if (!ex.coder.empty()) j["coder"] = ex.coder;
    return j.dump();
}

LabeledExample example_from_jsonl(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw ChainSyntaxError(std::string("bad record: ") + e.what());
    }
    LabeledExample ex;
    try {
        ex.post.id = j.at("id").get<std::string>();
        ex.post.text = j.at("text").get<std::string>();
        auto cat = category_from_code(j.at("category").get<std::string>());
        if (!cat) throw ChainSyntaxError("unknown category in record " + ex.post.id);
        ex.post.category = *cat;
        for (const auto& [node, answer] : j.at("answers").items())
            ex.node_answers[node] = answer.get<std::string>();
        auto label = label_from_int(j.at("label").get<int>());
        if (!label) throw ChainSyntaxError("label out of range in record " + ex.post.id);
        ex.label = *label;
        ex.coder = j.value("coder", "");
    } catch (const json::exception& e) {
        throw ChainSyntaxError(std::string("bad record fields: ") + e.what());
    }
    if (ex.post.text.empty()) throw ChainSyntaxError("empty text in record " + ex.post.id);
    return ex;
}

LoadResult load_examples(const std::string& path, const GraphSpec& graph) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("cannot open dataset file: " + path);
    LoadResult result;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            LabeledExample ex = example_from_jsonl(line);
            check_path_consistency(ex, graph);
            result.examples.push_back(std::move(ex));
        } catch (const Error& e) {
            result.quarantined.emplace_back(line, e.what());
        }
    }
    return result;
}

void save_examples(const std::string& path, const std::vector<LabeledExample>& examples) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write dataset file: " + path);
    for (const auto& ex : examples) out << example_to_jsonl(ex) << "\n";
}

// ---- splitting ---------------------------------------------------------

namespace {

struct Stratum {
    std::string key;
    std::vector<const LabeledExample*> members;
};

std::vector<Stratum> stratify(const std::vector<const LabeledExample*>& items) {
    std::map<std::string, std::vector<const LabeledExample*>> by_key;
    for (const auto* ex : items)
        by_key[category_code(ex->post.category) + "/" +
               std::to_string(static_cast<int>(ex->label))]
            .push_back(ex);
    std::vector<Stratum> out;
    for (auto& [key, members] : by_key) {
        std::sort(members.begin(), members.end(),
                  [](const auto* a, const auto* b) { return a->post.id < b->post.id; });
        out.push_back({key, std::move(members)});
    }
    return out;
}

// Largest-remainder allocation so the stratum quotas sum to round(total*ratio).
std::vector<std::size_t> allocate_quotas(const std::vector<Stratum>& strata, double ratio) {
    std::size_t total = 0;
    for (const auto& s : strata) total += s.members.size();
    auto target = static_cast<std::size_t>(std::llround(static_cast<double>(total) * ratio));

    std::vector<std::size_t> quota(strata.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < strata.size(); ++i) {
        double exact = static_cast<double>(strata[i].members.size()) * ratio;
        quota[i] = static_cast<std::size_t>(std::floor(exact));
        assigned += quota[i];
        remainders.emplace_back(exact - std::floor(exact), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t j = 0; assigned < target && j < remainders.size(); ++j) {
        std::size_t i = remainders[j].second;
        if (quota[i] < strata[i].members.size()) {
            ++quota[i];
            ++assigned;
        }
    }
    return quota;
}

// Deterministic draw of `quota` members from a stratum.
void draw(Stratum& s, std::size_t quota, std::uint64_t seed,
          std::vector<const LabeledExample*>& taken, std::vector<const LabeledExample*>& rest) {
    std::mt19937_64 rng(seed);
    std::shuffle(s.members.begin(), s.members.end(), rng);
    for (std::size_t i = 0; i < s.members.size(); ++i)
        (i < quota ? taken : rest).push_back(s.members[i]);
}

std::vector<LabeledExample> materialize(std::vector<const LabeledExample*> ptrs) {
    std::sort(ptrs.begin(), ptrs.end(),
              [](const auto* a, const auto* b) { return a->post.id < b->post.id; });
    std::vector<LabeledExample> out;
    out.reserve(ptrs.size());
    for (const auto* p : ptrs) out.push_back(*p);
    return out;
}

}  // namespace

DatasetSplit split(const std::vector<LabeledExample>& corpus, double test_ratio,
                   double val_ratio, std::uint64_t seed) {
    DatasetSplit result;
    result.seed = seed;
    result.test_ratio = test_ratio;
    result.val_ratio = val_ratio;

    std::vector<const LabeledExample*> all;
    all.reserve(corpus.size());
    for (const auto& ex : corpus) all.push_back(&ex);

    // Test partition is drawn with a fixed internal seed so it never moves
    // when the run seed changes.
    constexpr std::uint64_t kTestPartitionSeed = 0x7e57u;
    auto strata = stratify(all);
    auto quotas = allocate_quotas(strata, test_ratio);
    std::vector<const LabeledExample*> test_ptrs, dev_ptrs;
    for (std::size_t i = 0; i < strata.size(); ++i)
        draw(strata[i], quotas[i], derive_seed(kTestPartitionSeed, strata[i].key), test_ptrs,
             dev_ptrs);

    auto dev_strata = stratify(dev_ptrs);
    auto val_quotas = allocate_quotas(dev_strata, val_ratio);
    std::vector<const LabeledExample*> val_ptrs, train_ptrs;
    for (std::size_t i = 0; i < dev_strata.size(); ++i)
        draw(dev_strata[i], val_quotas[i], derive_seed(seed, "val/" + dev_strata[i].key),
             val_ptrs, train_ptrs);

    result.test = materialize(std::move(test_ptrs));
    result.validation = materialize(std::move(val_ptrs));
    result.train = materialize(std::move(train_ptrs));
    return result;
}

DistributionTable label_distribution(const std::vector<LabeledExample>& examples) {
    DistributionTable table{};
    for (const auto& ex : examples)
        ++table[static_cast<int>(ex.post.category)][static_cast<int>(ex.label)];
    return table;
}

// ---- chi-square --------------------------------------------------------

// Regularized incomplete gamma functions, series + continued fraction.
static double gamma_p_series(double a, double x) {
    double sum = 1.0 / a, term = sum, ap = a;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

static double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-15) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw Error("gamma_q: invalid arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

ChiSquareResult chi_square_2xk(const std::vector<double>& row_a, const std::vector<double>& row_b) {
    if (row_a.size() != row_b.size()) throw LengthMismatch("chi-square rows differ in length");
    std::vector<double> a, b;
    for (std::size_t i = 0; i < row_a.size(); ++i)
        if (row_a[i] + row_b[i] > 0.0) {  // pool away empty columns
            a.push_back(row_a[i]);
            b.push_back(row_b[i]);
        }
    if (a.size() < 2) throw DegenerateTable("fewer than two labels with nonzero totals");

    double total_a = std::accumulate(a.begin(), a.end(), 0.0);
    double total_b = std::accumulate(b.begin(), b.end(), 0.0);
    double grand = total_a + total_b;
    if (total_a == 0.0 || total_b == 0.0) throw DegenerateTable("empty row");

    double stat = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double col = a[i] + b[i];
        double ea = total_a * col / grand;
        double eb = total_b * col / grand;
        stat += (a[i] - ea) * (a[i] - ea) / ea;
        stat += (b[i] - eb) * (b[i] - eb) / eb;
    }
    ChiSquareResult r;
    r.statistic = stat;
    r.dof = static_cast<int>(a.size()) - 1;
    r.p_value = gamma_q(r.dof / 2.0, stat / 2.0);
    return r;
}

ChiSquareResult distribution_homogeneity(const std::vector<LabeledExample>& dev,
                                         const std::vector<LabeledExample>& test) {
    if (dev.empty() || test.empty()) throw DegenerateTable("empty partition");
    std::vector<double> a(kNumLabels, 0.0), b(kNumLabels, 0.0);
    for (const auto& ex : dev) a[static_cast<int>(ex.label)] += 1.0;
    for (const auto& ex : test) b[static_cast<int>(ex.label)] += 1.0;
    return chi_square_2xk(a, b);
}

// ---- Gwet agreement ----------------------------------------------------

std::vector<std::vector<double>> identity_weights(std::size_t n) {
    std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) w[i][i] = 1.0;
    return w;
}

std::vector<std::vector<double>> ordinal_weights(std::size_t n) {
    std::vector<std::vector<double>> w(n, std::vector<double>(n, 1.0));
    if (n < 2) return w;
    double span = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double d = (static_cast<double>(i) - static_cast<double>(j)) / span;
            w[i][j] = 1.0 - d * d;
        }
    return w;
}

double gwet_ac2(const RatingsTable& table, const std::vector<std::vector<double>>& weights) {
    const std::size_t q = table.categories.size();
    if (q < 2) throw DegenerateAgreement("need at least two categories");
    if (weights.size() != q) throw Error("weight matrix size mismatch");
    for (std::size_t i = 0; i < q; ++i) {
        if (weights[i].size() != q) throw Error("weight matrix size mismatch");
        if (std::fabs(weights[i][i] - 1.0) > 1e-12) throw Error("weight diagonal must be 1");
        for (std::size_t j = 0; j < q; ++j)
            if (std::fabs(weights[i][j] - weights[j][i]) > 1e-12)
                throw Error("weight matrix must be symmetric");
    }

    double pa_sum = 0.0;
    std::size_t n_scorable = 0;  // items with >= 2 ratings
    std::vector<double> pi(q, 0.0);
    std::size_t n_rated = 0;

    for (const auto& row : table.items) {
        std::vector<double> r(q, 0.0);
        double ri = 0.0;
        for (const auto& cell : row)
            if (cell) {
                if (*cell < 0 || static_cast<std::size_t>(*cell) >= q)
                    throw Error("rating index out of range");
                r[static_cast<std::size_t>(*cell)] += 1.0;
                ri += 1.0;
            }
        if (ri >= 1.0) {
            ++n_rated;
            for (std::size_t k = 0; k < q; ++k) pi[k] += r[k] / ri;
        }
        if (ri >= 2.0) {
            ++n_scorable;
            double item_pa = 0.0;
            for (std::size_t k = 0; k < q; ++k) {
                double rstar = 0.0;
                for (std::size_t l = 0; l < q; ++l) rstar += weights[k][l] * r[l];
                item_pa += r[k] * (rstar - 1.0);
            }
            pa_sum += item_pa / (ri * (ri - 1.0));
        }
    }
    if (n_scorable == 0) throw DegenerateAgreement("no item rated by two or more coders");

    double pa = pa_sum / static_cast<double>(n_scorable);
    for (auto& v : pi) v /= static_cast<double>(n_rated);

    double tw = 0.0;
    for (std::size_t k = 0; k < q; ++k)
        for (std::size_t l = 0; l < q; ++l) tw += weights[k][l];
    double pe_core = 0.0;
    for (std::size_t k = 0; k < q; ++k) pe_core += pi[k] * (1.0 - pi[k]);
    double pe = tw / (static_cast<double>(q) * static_cast<double>(q - 1)) * pe_core;

    if (1.0 - pe < 1e-12) throw DegenerateAgreement("expected agreement is 1");
    return (pa - pe) / (1.0 - pe);
}

double percent_agreement(const RatingsTable& table) {
    double pair_sum = 0.0;
    std::size_t n_scorable = 0;
    for (const auto& row : table.items) {
        std::vector<int> rated;
        for (const auto& cell : row)
            if (cell) rated.push_back(*cell);
        if (rated.size() < 2) continue;
        ++n_scorable;
        double agree = 0.0, pairs = 0.0;
        for (std::size_t i = 0; i < rated.size(); ++i)
            for (std::size_t j = i + 1; j < rated.size(); ++j) {
                pairs += 1.0;
                if (rated[i] == rated[j]) agree += 1.0;
            }
        pair_sum += agree / pairs;
    }
    if (n_scorable == 0) throw DegenerateAgreement("no item rated by two or more coders");
    return pair_sum / static_cast<double>(n_scorable);
}

}  // namespace lingo
