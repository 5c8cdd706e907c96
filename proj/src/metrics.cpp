#include "docdrift/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>
#include <numeric>
#include <random>
#include <sstream>

namespace docdrift {

EntryMetrics entry_metrics(std::span<const RunResult> results)
{
    EntryMetrics m;
    for (const auto& r : results) {
        if (r.truth_positive)
            ++(r.predicted_positive ? m.confusion.tp : m.confusion.fn);
        else
            ++(r.predicted_positive ? m.confusion.fp : m.confusion.tn);
    }
    const auto& c = m.confusion;
    if (c.tp + c.fn > 0)
        m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (c.tn + c.fp > 0)
        m.specificity = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
    return m;
}

std::optional<double> user_facing_accuracy(double recall, double specificity, double prevalence_ratio)
{
    double denominator = recall + (1.0 - specificity) * prevalence_ratio;
    if (denominator <= 0)
        return std::nullopt;
    return recall / denominator;
}

std::optional<double> index_recall(const std::set<int>& truth, std::span<const int> predicted)
{
    if (truth.empty())
        return std::nullopt;
    std::set<int> hits;
    for (int p : predicted)
        if (truth.contains(p))
            hits.insert(p);
    return static_cast<double>(hits.size()) / static_cast<double>(truth.size());
}

double reciprocal_rank(const std::set<int>& truth, std::span<const int> predicted)
{
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (truth.contains(predicted[i]))
            return 1.0 / static_cast<double>(i + 1);
    return 0.0;
}

std::optional<double> mean_reciprocal_rank(std::span<const RankedQuery> queries)
{
    if (queries.empty())
        return std::nullopt;
    double sum = 0;
    for (const auto& [truth, predicted] : queries)
        sum += reciprocal_rank(truth, predicted);
    return sum / static_cast<double>(queries.size());
}

namespace {

// A level-i key: the header node, or the section itself when it has none.
using LevelKey = std::pair<bool, std::size_t>;

std::set<LevelKey> map_to_level(const HierarchyTree& tree, const std::set<int>& indices, int level)
{
    std::set<LevelKey> keys;
    for (int s : indices) {
        if (auto node = tree.node_at_level(s, level))
            keys.insert({ true, *node });
        else
            keys.insert({ false, static_cast<std::size_t>(s) });
    }
    return keys;
}

} // namespace

std::array<std::pair<std::size_t, std::size_t>, 4> hierarchical_counts(
    const std::set<int>& truth, std::span<const int> predicted, const HierarchyTree& tree)
{
    std::set<int> pred(predicted.begin(), predicted.end());
    std::array<std::pair<std::size_t, std::size_t>, 4> counts {};
    for (int level = 1; level <= 4; ++level) {
        auto g = map_to_level(tree, truth, level);
        auto p = map_to_level(tree, pred, level);
        std::size_t hits = 0;
        for (const auto& key : g)
            hits += p.contains(key) ? 1 : 0;
        counts[level - 1] = { hits, g.size() };
    }
    return counts;
}

LevelRecall hierarchical_recall(const std::set<int>& truth, std::span<const int> predicted, const HierarchyTree& tree)
{
    LevelRecall out;
    auto counts = hierarchical_counts(truth, predicted, tree);
    for (std::size_t i = 0; i < 4; ++i)
        if (counts[i].second > 0)
            out[i] = static_cast<double>(counts[i].first) / static_cast<double>(counts[i].second);
    return out;
}

namespace {

struct Mean {
    double sum = 0;
    std::size_t n = 0;
    void add(double v)
    {
        sum += v;
        ++n;
    }
    std::optional<double> value() const
    {
        return n ? std::optional<double>(sum / static_cast<double>(n)) : std::nullopt;
    }
};

IndexMetrics index_metrics(std::span<const RunResult* const> entries, Averaging averaging)
{
    IndexMetrics m;
    Mean recall;
    Mean rr;
    std::array<Mean, 4> macro;
    std::array<std::pair<std::size_t, std::size_t>, 4> micro {};
    for (const RunResult* r : entries) {
        std::span<const int> predicted;
        if (r->predicted_positive)
            predicted = r->predicted_indices;
        recall.add(*index_recall(r->truth_indices, predicted));
        rr.add(reciprocal_rank(r->truth_indices, predicted));
        if (!r->tree)
            continue;
        auto counts = hierarchical_counts(r->truth_indices, predicted, *r->tree);
        for (std::size_t i = 0; i < 4; ++i) {
            if (counts[i].second == 0)
                continue;
            macro[i].add(static_cast<double>(counts[i].first) / static_cast<double>(counts[i].second));
            micro[i].first += counts[i].first;
            micro[i].second += counts[i].second;
        }
    }
    m.n_scored = entries.size();
    m.index_recall = recall.value();
    m.mrr = rr.value();
    for (std::size_t i = 0; i < 4; ++i) {
        if (averaging == Averaging::macro)
            m.hierarchical[i] = macro[i].value();
        else if (micro[i].second > 0)
            m.hierarchical[i] = static_cast<double>(micro[i].first) / static_cast<double>(micro[i].second);
    }
    return m;
}

} // namespace

MetricsReport aggregate(std::span<const RunResult> results, Averaging averaging)
{
    MetricsReport report;
    report.entry = entry_metrics(results);
    if (report.entry.recall && report.entry.specificity)
        report.user_facing_accuracy = user_facing_accuracy(*report.entry.recall, *report.entry.specificity);

    std::vector<const RunResult*> conditional;
    std::vector<const RunResult*> unconditional;
    for (const auto& r : results) {
        if (!r.truth_positive)
            continue;
        if (r.truth_indices.empty()) {
            ++report.n_skipped_empty_truth;
            continue;
        }
        unconditional.push_back(&r);
        if (r.predicted_positive)
            conditional.push_back(&r);
    }
    report.conditional = index_metrics(conditional, averaging);
    report.unconditional = index_metrics(unconditional, averaging);
    return report;
}

namespace {

std::string fmt(const std::optional<double>& v)
{
    if (!v)
        return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *v);
    return buf;
}

std::string pad(std::string s, std::size_t width)
{
    if (s.size() < width)
        s.append(width - s.size(), ' ');
    return s;
}

nlohmann::ordered_json opt(const std::optional<double>& v)
{
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json index_json(const IndexMetrics& m)
{
    nlohmann::ordered_json j;
    j["index_recall"] = opt(m.index_recall);
    j["mrr"] = opt(m.mrr);
    auto levels = nlohmann::ordered_json::array();
    for (const auto& l : m.hierarchical)
        levels.push_back(opt(l));
    j["hierarchical_recall"] = levels;
    j["n_scored"] = m.n_scored;
    return j;
}

} // namespace

std::string render_table(std::span<const std::pair<std::string, MetricsReport>> rows)
{
    const std::vector<std::string> header { "Approach", "Entry Recall", "Entry Specificity", "User-facing Acc.",
        "Index Recall", "MRR", "Hierarchical Recall (L1, L2, L3, L4)" };
    std::vector<std::vector<std::string>> cells { header };
    for (const auto& [name, r] : rows) {
        const auto& h = r.conditional.hierarchical;
        cells.push_back({ name, fmt(r.entry.recall), fmt(r.entry.specificity), fmt(r.user_facing_accuracy),
            fmt(r.conditional.index_recall), fmt(r.conditional.mrr),
            "(" + fmt(h[0]) + ", " + fmt(h[1]) + ", " + fmt(h[2]) + ", " + fmt(h[3]) + ")" });
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& row : cells)
        for (std::size_t i = 0; i < row.size(); ++i)
            width[i] = std::max(width[i], row[i].size());
    std::ostringstream out;
    for (std::size_t r = 0; r < cells.size(); ++r) {
        for (std::size_t i = 0; i < cells[r].size(); ++i)
            out << (i ? " | " : "") << (i + 1 == cells[r].size() ? cells[r][i] : pad(cells[r][i], width[i]));
        out << "\n";
        if (r == 0) {
            for (std::size_t i = 0; i < width.size(); ++i)
                out << (i ? "-|-" : "") << std::string(width[i], '-');
            out << "\n";
        }
    }
    return out.str();
}

std::string to_json(const MetricsReport& report)
{
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["entry_recall"] = opt(report.entry.recall);
    j["entry_specificity"] = opt(report.entry.specificity);
    j["user_facing_accuracy"] = opt(report.user_facing_accuracy);
    const auto& c = report.entry.confusion;
    j["confusion"] = { { "tp", c.tp }, { "fn", c.fn }, { "tn", c.tn }, { "fp", c.fp } };
    j["conditional"] = index_json(report.conditional);
    j["unconditional"] = index_json(report.unconditional);
    j["n_skipped_empty_truth"] = report.n_skipped_empty_truth;
    return j.dump(2);
}

MetricsReport random_baseline(
    const CorpusStats& stats, double prevalence, int picks, std::size_t trials, std::uint64_t seed)
{
    if (stats.section_counts.empty() || stats.section_counts.size() != stats.truth_sizes.size())
        throw std::invalid_argument("random_baseline needs aligned, non-empty section counts and truth sizes");
    if (prevalence < 0 || prevalence > 1 || picks < 1 || trials == 0)
        throw std::invalid_argument("random_baseline: bad prevalence, picks or trials");

    std::mt19937_64 rng(seed);
    std::bernoulli_distribution label(prevalence);
    std::uniform_int_distribution<std::size_t> pick_doc(0, stats.section_counts.size() - 1);

    // Partial Fisher-Yates over 1..n; the first k slots are the sample.
    std::vector<int> pool;
    auto draw = [&](int n, int k) {
        pool.resize(static_cast<std::size_t>(n));
        std::iota(pool.begin(), pool.end(), 1);
        k = std::min(k, n);
        for (int i = 0; i < k; ++i) {
            std::uniform_int_distribution<int> d(i, n - 1);
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(d(rng))]);
        }
        return std::vector<int>(pool.begin(), pool.begin() + k);
    };

    MetricsReport report;
    Confusion& c = report.entry.confusion;
    Mean recall;
    Mean rr;
    for (std::size_t t = 0; t < trials; ++t) {
        std::size_t doc = pick_doc(rng);
        int n = std::max(1, stats.section_counts[doc]);
        int g = std::clamp(stats.truth_sizes[doc], 1, n);
        auto truth_list = draw(n, g);
        std::set<int> truth(truth_list.begin(), truth_list.end());
        auto predicted = draw(n, picks);
        ++(label(rng) ? c.tp : c.fn);
        recall.add(*index_recall(truth, predicted));
        rr.add(reciprocal_rank(truth, predicted));
        ++(label(rng) ? c.fp : c.tn);
    }
    report.entry.recall = static_cast<double>(c.tp) / static_cast<double>(trials);
    report.entry.specificity = static_cast<double>(c.tn) / static_cast<double>(trials);
    report.user_facing_accuracy = user_facing_accuracy(*report.entry.recall, *report.entry.specificity);
    report.conditional.index_recall = recall.value();
    report.conditional.mrr = rr.value();
    report.conditional.n_scored = trials;
    report.unconditional = report.conditional;
    return report;
}

} // namespace docdrift
