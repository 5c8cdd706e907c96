#pragma once

#include "docdrift/corpus.hpp"
#include "docdrift/readme.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace docdrift {

struct RunResult {
    PrKey pr;
    bool predicted_positive = false;
    std::vector<int> predicted_indices; // empty when predicted_positive is false
    bool truth_positive = false;
    std::set<int> truth_indices;
    std::shared_ptr<const HierarchyTree> tree; // needed for hierarchical recall
};

struct Confusion {
    std::size_t tp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;
    friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct EntryMetrics {
    std::optional<double> recall;      // absent without positives
    std::optional<double> specificity; // absent without negatives
    Confusion confusion;
};

EntryMetrics entry_metrics(std::span<const RunResult> results);

/// recall / (recall + (1 - specificity) * prevalence_ratio), i.e. precision
/// at one positive per `prevalence_ratio` negatives. Absent when the
/// denominator is 0.
std::optional<double> user_facing_accuracy(double recall, double specificity, double prevalence_ratio = 99.0);

/// |G ∩ P| / |G|; absent for an empty G.
std::optional<double> index_recall(const std::set<int>& truth, std::span<const int> predicted);

/// 1 / rank of the first predicted index found in G, 0 when none is.
double reciprocal_rank(const std::set<int>& truth, std::span<const int> predicted);

using RankedQuery = std::pair<std::set<int>, std::vector<int>>;
/// Mean reciprocal rank; absent for an empty query list.
std::optional<double> mean_reciprocal_rank(std::span<const RankedQuery> queries);

using LevelRecall = std::array<std::optional<double>, 4>;

/// Recall after mapping indices to their level-i header node (i = 1..4).
/// A section without a node at level i is matched by its exact index.
/// Throws std::out_of_range for an index outside the tree.
LevelRecall hierarchical_recall(const std::set<int>& truth, std::span<const int> predicted, const HierarchyTree& tree);

/// Per-level (hits, |N_i(G)|) counts, the building block for micro averaging.
std::array<std::pair<std::size_t, std::size_t>, 4> hierarchical_counts(
    const std::set<int>& truth, std::span<const int> predicted, const HierarchyTree& tree);

enum class Averaging { macro, micro };

struct IndexMetrics {
    std::optional<double> index_recall;
    std::optional<double> mrr;
    LevelRecall hierarchical;
    std::size_t n_scored = 0;
};

struct MetricsReport {
    EntryMetrics entry;
    std::optional<double> user_facing_accuracy;
    IndexMetrics conditional;   // entries predicted and truly positive (default)
    IndexMetrics unconditional; // every truly positive entry, misses score 0
    std::size_t n_skipped_empty_truth = 0;
};

MetricsReport aggregate(std::span<const RunResult> results, Averaging averaging = Averaging::macro);

/// One-row table: Approach | Entry Recall | Entry Specificity | User-facing
/// Acc. | Index Recall | MRR | Hierarchical Recall (L1, L2, L3, L4).
std::string render_table(std::span<const std::pair<std::string, MetricsReport>> rows);
std::string to_json(const MetricsReport& report);

struct CorpusStats {
    std::vector<int> section_counts; // one per positive document
    std::vector<int> truth_sizes;    // aligned with section_counts
};

/// Monte-Carlo evaluation of a guesser that labels a PR positive with
/// probability `prevalence` and picks `picks` distinct random sections.
/// Each trial draws one positive document (from `stats`) and one negative.
/// Index metrics cover every positive trial, since the picks do not depend
/// on the label draw.
MetricsReport random_baseline(
    const CorpusStats& stats, double prevalence, int picks, std::size_t trials, std::uint64_t seed);

} // namespace docdrift
