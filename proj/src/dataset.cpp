#include "docdrift/dataset.hpp"

#include "docdrift/diff.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <random>
#include <sstream>

namespace docdrift {

void FilterThresholds::validate() const
{
    if (max_readme_paragraphs <= 0 || max_changed_files <= 0 || max_commits <= 0)
        throw std::invalid_argument("filter thresholds must be positive");
}

FilterThresholds FilterThresholds::parse(const std::string& text)
{
    FilterThresholds t;
    std::istringstream in(text);
    char c1 = 0;
    char c2 = 0;
    if (!(in >> t.max_readme_paragraphs >> c1 >> t.max_changed_files >> c2 >> t.max_commits) || c1 != ','
        || c2 != ',' || !(in >> std::ws).eof())
        throw std::invalid_argument("thresholds must look like 11,145,23, got '" + text + "'");
    t.validate();
    return t;
}

bool FilterReport::consistent() const
{
    return input == positive_candidates + negative_pool + readme_only
        && positive_candidates
        == removed_by_keyword + removed_by_chronology + removed_by_patch_error + removed_by_outlier.total()
            + retained_positives
        && negatives_sampled == negative_removed_by_outlier.total() + retained_negatives
        && negatives_sampled <= negative_pool;
}

std::string FilterReport::to_json() const
{
    auto outliers = [](const OutlierCounts& c) {
        nlohmann::ordered_json j;
        j["readme_paragraphs"] = c.readme_paragraphs;
        j["changed_files"] = c.changed_files;
        j["commits"] = c.commits;
        return j;
    };
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["input"] = input;
    j["positive_candidates"] = positive_candidates;
    j["negative_pool"] = negative_pool;
    j["readme_only"] = readme_only;
    j["removed_by_keyword"] = removed_by_keyword;
    j["removed_by_chronology"] = removed_by_chronology;
    j["chronology_flagged"] = chronology_flagged;
    j["removed_by_patch_error"] = removed_by_patch_error;
    j["removed_by_outlier"] = outliers(removed_by_outlier);
    j["retained_positives"] = retained_positives;
    j["negatives_sampled"] = negatives_sampled;
    j["negative_removed_by_outlier"] = outliers(negative_removed_by_outlier);
    j["retained_negatives"] = retained_negatives;
    return j.dump(2);
}

bool filter_readme_keyword(const PullRequest& pr)
{
    return !contains_ci(pr.title, "readme");
}

ChronologyDecision filter_chronology(const PullRequest& pr, const ChronologyOptions& options)
{
    std::optional<Timestamp> first_readme;
    std::optional<Timestamp> first_code;
    std::optional<Timestamp> last_code;
    for (const auto& c : pr.commits) {
        if (!c.authored_at || !c.files)
            return { false, true };
        bool touches_readme = false;
        bool touches_code = false;
        for (const auto& path : *c.files) {
            if (is_root_readme(path))
                touches_readme = true;
            else
                touches_code = true;
        }
        Timestamp t = *c.authored_at;
        if (touches_readme && (!first_readme || t < *first_readme))
            first_readme = t;
        if (touches_code) {
            if (!first_code || t < *first_code)
                first_code = t;
            if (!last_code || t > *last_code)
                last_code = t;
        }
    }
    if (!first_readme || !first_code)
        return { false, true };
    Timestamp reference = options.strict ? *last_code : *first_code;
    return { *first_readme >= reference + options.threshold, false };
}

double quantile_linear(std::vector<double> values, double q)
{
    if (values.empty())
        throw std::invalid_argument("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    double pos = q * static_cast<double>(values.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    auto hi = static_cast<std::size_t>(std::ceil(pos));
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double tukey_upper_fence(std::span<const double> values)
{
    if (values.empty())
        throw std::invalid_argument("Tukey fence of an empty sample");
    std::vector<double> v(values.begin(), values.end());
    double q1 = quantile_linear(v, 0.25);
    double q3 = quantile_linear(std::move(v), 0.75);
    return q3 + 1.5 * (q3 - q1);
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed)
{
    k = std::min(k, n);
    std::mt19937_64 rng(seed);
    auto bounded = [&rng](std::uint64_t bound) {
        std::uint64_t threshold = (0 - bound) % bound;
        while (true) {
            std::uint64_t r = rng();
            if (r >= threshold)
                return r % bound;
        }
    };
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t { 0 });
    for (std::size_t i = 0; i < k; ++i) {
        auto j = i + static_cast<std::size_t>(bounded(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

namespace {

bool has_non_readme_change(const PullRequest& pr)
{
    return std::any_of(pr.files.begin(), pr.files.end(), [](const FilePatch& f) { return !is_root_readme(f.path); });
}

/// Which outlier dimension (if any) `pr` exceeds; paragraphs checked first.
enum class Outlier { none, readme_paragraphs, changed_files, commits };

Outlier classify_outlier(std::size_t paragraphs, const PullRequest& pr, const FilterThresholds& t)
{
    if (paragraphs > static_cast<std::size_t>(t.max_readme_paragraphs))
        return Outlier::readme_paragraphs;
    if (pr.files.size() > static_cast<std::size_t>(t.max_changed_files))
        return Outlier::changed_files;
    if (pr.commits.size() > static_cast<std::size_t>(t.max_commits))
        return Outlier::commits;
    return Outlier::none;
}

void count_outlier(OutlierCounts& counts, Outlier o)
{
    switch (o) {
    case Outlier::readme_paragraphs:
        ++counts.readme_paragraphs;
        break;
    case Outlier::changed_files:
        ++counts.changed_files;
        break;
    case Outlier::commits:
        ++counts.commits;
        break;
    case Outlier::none:
        break;
    }
}

} // namespace

DatasetBuild build_datasets(std::span<const PullRequest> prs, const BuildOptions& options)
{
    options.thresholds.validate();
    if (options.negative_ratio < 0)
        throw std::invalid_argument("negative_ratio must be non-negative");

    DatasetBuild out;
    FilterReport& report = out.report;
    report.input = prs.size();

    std::vector<std::size_t> candidates;
    std::vector<std::size_t> negative_pool;
    for (std::size_t i = 0; i < prs.size(); ++i) {
        const PullRequest& pr = prs[i];
        if (!pr.readme_patch)
            negative_pool.push_back(i);
        else if (has_non_readme_change(pr))
            candidates.push_back(i);
        else
            ++report.readme_only;
    }
    report.positive_candidates = candidates.size();
    report.negative_pool = negative_pool.size();

    std::vector<std::size_t> survivors;
    for (std::size_t i : candidates) {
        const PullRequest& pr = prs[i];
        if (!filter_readme_keyword(pr)) {
            ++report.removed_by_keyword;
            continue;
        }
        auto chrono = filter_chronology(pr, options.chronology);
        if (chrono.flagged)
            ++report.chronology_flagged;
        if (!chrono.keep) {
            ++report.removed_by_chronology;
            continue;
        }
        survivors.push_back(i);
    }

    for (std::size_t i : survivors) {
        const PullRequest& pr = prs[i];
        std::size_t paragraphs = 0;
        try {
            paragraphs = ground_truth_indices(pr.readme_before, *pr.readme_patch).size();
        } catch (const Error&) {
            ++report.removed_by_patch_error;
            continue;
        }
        auto o = classify_outlier(paragraphs, pr, options.thresholds);
        if (o != Outlier::none) {
            count_outlier(report.removed_by_outlier, o);
            continue;
        }
        out.positives.push_back(pr);
    }
    report.retained_positives = out.positives.size();

    auto wanted = static_cast<std::size_t>(std::llround(options.negative_ratio * static_cast<double>(survivors.size())));
    auto picks = sample_indices(negative_pool.size(), wanted, options.seed);
    report.negatives_sampled = picks.size();
    for (std::size_t p : picks) {
        const PullRequest& pr = prs[negative_pool[p]];
        auto o = classify_outlier(0, pr, options.thresholds);
        if (o != Outlier::none) {
            count_outlier(report.negative_removed_by_outlier, o);
            continue;
        }
        out.negatives.push_back(pr);
    }
    report.retained_negatives = out.negatives.size();
    return out;
}

FilterThresholds derive_thresholds(std::span<const PullRequest> positives)
{
    std::vector<double> paragraphs;
    std::vector<double> files;
    std::vector<double> commits;
    for (const auto& pr : positives) {
        if (!pr.readme_patch)
            continue;
        try {
            paragraphs.push_back(static_cast<double>(ground_truth_indices(pr.readme_before, *pr.readme_patch).size()));
        } catch (const Error&) {
            continue;
        }
        files.push_back(static_cast<double>(pr.files.size()));
        commits.push_back(static_cast<double>(pr.commits.size()));
    }
    if (paragraphs.empty())
        throw std::invalid_argument("no README-updating records to derive thresholds from");
    FilterThresholds t;
    t.max_readme_paragraphs = std::max(1, static_cast<int>(std::floor(tukey_upper_fence(paragraphs))));
    t.max_changed_files = std::max(1, static_cast<int>(std::floor(tukey_upper_fence(files))));
    t.max_commits = std::max(1, static_cast<int>(std::floor(tukey_upper_fence(commits))));
    return t;
}

} // namespace docdrift
