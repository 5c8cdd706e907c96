#pragma once

#include "docdrift/corpus.hpp"

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace docdrift {

/// Outlier cutoffs; a PR *exceeding* any of them is excluded.
struct FilterThresholds {
    int max_readme_paragraphs = 11;
    int max_changed_files = 145;
    int max_commits = 23;

    void validate() const;
    /// "paragraphs,files,commits", e.g. "11,145,23".
    static FilterThresholds parse(const std::string& text);
};

struct OutlierCounts {
    std::size_t readme_paragraphs = 0;
    std::size_t changed_files = 0;
    std::size_t commits = 0;

    std::size_t total() const { return readme_paragraphs + changed_files + commits; }
    friend bool operator==(const OutlierCounts&, const OutlierCounts&) = default;
};

/// Stage counts. Every input record lands in exactly one bucket:
///   input = positive_candidates + negative_pool + readme_only
///   positive_candidates = removed_by_keyword + removed_by_chronology
///                       + removed_by_patch_error + removed_by_outlier + retained_positives
///   negatives_sampled = negative_removed_by_outlier + retained_negatives
struct FilterReport {
    std::size_t input = 0;
    std::size_t positive_candidates = 0;
    std::size_t negative_pool = 0;
    std::size_t readme_only = 0;
    std::size_t removed_by_keyword = 0;
    std::size_t removed_by_chronology = 0;
    std::size_t chronology_flagged = 0; // missing timestamps or commit paths
    std::size_t removed_by_patch_error = 0;
    OutlierCounts removed_by_outlier;
    std::size_t retained_positives = 0;
    std::size_t negatives_sampled = 0;
    OutlierCounts negative_removed_by_outlier;
    std::size_t retained_negatives = 0;

    bool consistent() const;
    std::string to_json() const;
    friend bool operator==(const FilterReport&, const FilterReport&) = default;
};

/// False iff the title mentions "readme" (any case).
bool filter_readme_keyword(const PullRequest& pr);

struct ChronologyOptions {
    std::chrono::minutes threshold { 5 };
    // Require the README commit to follow *every* code commit, not just one.
    bool strict = false;
};

struct ChronologyDecision {
    bool keep = false;
    bool flagged = false; // timestamps or per-commit paths missing
};

/// Keep iff the earliest README-touching commit lands at least `threshold`
/// after some (strict: every) commit touching a non-README file.
ChronologyDecision filter_chronology(const PullRequest& pr, const ChronologyOptions& options = {});

/// Q3 + 1.5 * (Q3 - Q1), quartiles by linear interpolation at 0.25(n-1)
/// and 0.75(n-1). Throws std::invalid_argument on empty input.
double tukey_upper_fence(std::span<const double> values);
double quantile_linear(std::vector<double> values, double q);

struct DatasetBuild {
    std::vector<PullRequest> positives;
    std::vector<PullRequest> negatives;
    FilterReport report;
};

struct BuildOptions {
    FilterThresholds thresholds;
    double negative_ratio = 1.0;
    std::uint64_t seed = 42;
    ChronologyOptions chronology;
};

/// Positive/negative dataset construction. Deterministic under a fixed seed.
DatasetBuild build_datasets(std::span<const PullRequest> prs, const BuildOptions& options);

/// Per-dimension Tukey fences over a corpus of README-updating PRs
/// (edited paragraphs, changed files, commits), floored to integers.
FilterThresholds derive_thresholds(std::span<const PullRequest> positives);

/// Uniform sample of `k` distinct indices from [0, n), ascending.
/// Portable: uses only raw mt19937_64 output.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed);

} // namespace docdrift
