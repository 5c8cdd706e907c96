// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include "docdrift/dataset.hpp"
#include "docdrift/gateway.hpp"
#include "docdrift/metrics.hpp"
#include "docdrift/pipeline.hpp"

#include "oracles.hpp"
#include "synthetic.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

using namespace docdrift;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

std::string fmt(double v, int digits = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

bool near(double a, double b, double tol)
{
    return std::abs(a - b) <= tol;
}

// 1 ---------------------------------------------------------------------
Outcome user_facing_accuracy_values()
{
    Outcome o;
    double a = user_facing_accuracy(0.52, 0.987).value_or(-1);
    double b = user_facing_accuracy(0.01, 0.99).value_or(-1);
    o.require(near(a, 0.287, 0.001), "UFA(0.52, 0.987) = " + fmt(a));
    o.require(near(b, 0.010, 0.001), "UFA(0.01, 0.99) = " + fmt(b));
    if (o.pass)
        o.detail = "UFA(0.52,0.987)=" + fmt(a) + " UFA(0.01,0.99)=" + fmt(b);
    return o;
}

// 2 ---------------------------------------------------------------------
Outcome random_baseline_reference()
{
    Outcome o;
    CorpusStats stats;
    for (int n = 30; n <= 59; ++n) { // mean 44.5 sections
        stats.section_counts.push_back(n);
        stats.truth_sizes.push_back(1 + n % 4);
    }
    const std::size_t trials = 100000;
    auto start = std::chrono::steady_clock::now();
    auto r = random_baseline(stats, 0.01, 5, trials, 2024);
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    double recall = r.conditional.index_recall.value_or(-1);
    double ufa = r.user_facing_accuracy.value_or(-1);
    o.require(near(recall, 0.11, 0.02), "index recall " + fmt(recall));
    o.require(near(ufa, 0.01, 0.005), "user-facing accuracy " + fmt(ufa));
    o.require(seconds < 10.0, "took " + fmt(seconds, 2) + " s");
    if (o.pass)
        o.detail = std::to_string(trials) + " trials, index recall " + fmt(recall) + ", UFA " + fmt(ufa) + ", "
            + fmt(seconds, 2) + " s";
    return o;
}

// 3 ---------------------------------------------------------------------
Outcome metric_oracles()
{
    Outcome o;
    std::mt19937_64 rng(303);
    auto subset = [&](int n) {
        std::set<int> s;
        int size = 1 + static_cast<int>(rng() % 5);
        while (static_cast<int>(s.size()) < std::min(size, n))
            s.insert(1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n)));
        return s;
    };
    auto ranking = [&](int n) {
        std::vector<int> p;
        for (int i = static_cast<int>(rng() % 6); i > 0; --i)
            p.push_back(1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n)));
        return p;
    };
    int checked = 0;
    for (int i = 0; i < 1000 && o.pass; ++i) {
        int n = 1 + static_cast<int>(rng() % 50);
        auto g = subset(n);
        auto p = ranking(n);
        o.require(near(*index_recall(g, p), oracle::index_recall(g, p), 1e-12), "index recall instance " + std::to_string(i));
        o.require(near(reciprocal_rank(g, p), oracle::reciprocal_rank(g, p), 1e-12), "MRR instance " + std::to_string(i));
        ++checked;
    }
    for (int i = 0; i < 1000 && o.pass; ++i) {
        auto doc = segment_readme(oracle::random_outline(rng, 2 + static_cast<int>(rng() % 40)));
        auto tree = build_hierarchy(doc);
        int n = doc.section_count();
        auto g = subset(n);
        auto p = ranking(n);
        auto got = hierarchical_recall(g, p, tree);
        for (int level = 1; level <= 4; ++level) {
            auto want = oracle::hierarchical_recall(doc, g, p, level);
            const auto& v = got[static_cast<std::size_t>(level - 1)];
            o.require(v.has_value() == want.has_value() && (!v || near(*v, *want, 1e-12)),
                "hierarchical recall L" + std::to_string(level) + " instance " + std::to_string(i));
        }
        ++checked;
    }
    if (o.pass)
        o.detail = std::to_string(checked) + " instances match the brute-force oracles";
    return o;
}

// 4 ---------------------------------------------------------------------
Outcome parser_properties()
{
    Outcome o;
    std::mt19937_64 rng(404);
    int docs = 0;
    for (int i = 0; i < 500 && o.pass; ++i, ++docs) {
        auto v = oracle::document_violation(oracle::random_markdown(rng));
        o.require(v.empty(), "generated document " + std::to_string(i) + ": " + v);
    }
    auto readmes = oracle::real_readmes();
    o.require(readmes.size() == 10, "expected 10 README fixtures, found " + std::to_string(readmes.size()));
    for (const auto& name : readmes) {
        auto v = oracle::document_violation(oracle::read_file(oracle::fixture("readmes/" + name)));
        o.require(v.empty(), name + ": " + v);
        ++docs;
    }
    if (o.pass)
        o.detail = std::to_string(docs) + " documents satisfy every structural property";
    return o;
}

// 5 ---------------------------------------------------------------------
Outcome dataset_construction()
{
    Outcome o;
    std::mt19937_64 rng(505);
    for (int i = 0; i < 200 && o.pass; ++i) {
        std::size_t n = 1 + rng() % 80;
        std::vector<long long> ints;
        std::vector<double> values;
        for (std::size_t j = 0; j < n; ++j) {
            ints.push_back(static_cast<long long>(rng() % 500));
            values.push_back(static_cast<double>(ints.back()));
        }
        double got = tukey_upper_fence(values);
        double want = oracle::tukey_fence_exact(ints);
        o.require(near(got, want, 1e-9), "Tukey sample " + std::to_string(i) + ": " + fmt(got) + " vs " + fmt(want));
    }

    std::vector<PullRequest> prs;
    for (int i = 1; i <= 60; ++i) {
        synth::Shape s;
        s.readme = i % 4 != 0;
        s.commits = i % 11 == 0 ? 30 : 2;
        s.paragraphs_edited = 1 + i % 14;
        s.readme_delay_minutes = i % 7 == 0 ? 1 : 10;
        prs.push_back(synth::make_pr("o/r", i, s));
    }
    auto dump = [](const DatasetBuild& b) {
        std::ostringstream out;
        write_corpus(out, b.positives);
        write_corpus(out, b.negatives);
        return out.str() + b.report.to_json();
    };
    auto first = dump(build_datasets(prs, { .seed = 42 }));
    auto second = dump(build_datasets(prs, { .seed = 42 }));
    o.require(first == second, "two builds with seed 42 differ");

    FilterThresholds t;
    auto parsed = FilterThresholds::parse("11,145,23");
    o.require(t.max_readme_paragraphs == 11 && t.max_changed_files == 145 && t.max_commits == 23,
        "default thresholds are not 11/145/23");
    o.require(parsed.max_readme_paragraphs == 11 && parsed.max_changed_files == 145 && parsed.max_commits == 23,
        "'11,145,23' does not parse to 11/145/23");
    if (o.pass)
        o.detail = "200 Tukey samples exact, seeded builds byte-identical, defaults 11/145/23";
    return o;
}

// 6 ---------------------------------------------------------------------
std::string fence(const nlohmann::json& j)
{
    return "```json\n" + j.dump() + "\n```";
}

Outcome pipeline_invariants()
{
    Outcome o;
    std::mt19937_64 rng(606);
    auto coin = [&](int percent) { return static_cast<int>(rng() % 100) < percent; };
    int sections = 0;
    FunctionBackend backend([&](const ChatRequest& r) -> std::string {
        if (coin(5))
            return "no fenced block here";
        switch (r.component) {
        case Component::relevance:
            return fence({ { "update_required", coin(85) } });
        case Component::sufficiency:
            return fence({ { "sufficient", coin(40) } });
        case Component::localisation: {
            nlohmann::json idx = nlohmann::json::array();
            nlohmann::json just = nlohmann::json::object();
            for (int i = static_cast<int>(rng() % 4); i > 0; --i) {
                int s = static_cast<int>(rng() % static_cast<std::uint64_t>(sections + 3));
                idx.push_back(s);
                if (coin(90))
                    just[std::to_string(s)] = "because";
            }
            return fence({ { "ranked_indices", idx }, { "justifications", just } });
        }
        case Component::critique: {
            static const char* values[] = { "correct", "hallucinating", "generic" };
            return fence({ { "critique", values[rng() % 3] } });
        }
        default:
            return fence({ { "approve", coin(70) } });
        }
    });
    Gateway gateway(backend);
    HashedBagOfWordsBackend embedder;
    const Timestamp at = parse_rfc3339("2024-01-01T00:00:00Z");

    for (int run = 0; run < 1000 && o.pass; ++run) {
        int files = static_cast<int>(rng() % 9);
        auto pr = synth::make_pr("o/r", run + 1, { .code_files = std::max(1, files) });
        if (files == 0)
            pr.files.clear();
        sections = segment_readme(pr.readme_before).section_count();
        PipelineConfig cfg;
        cfg.mode = coin(50) ? WorkflowMode::agentic : WorkflowMode::fixed;
        cfg.window_size = 1 + static_cast<int>(rng() % 4);
        cfg.max_iterations = 1 + static_cast<int>(rng() % 4);
        auto rec = run_pipeline(pr, cfg, { gateway, embedder, [at] { return at; } });
        const std::string where = "run " + std::to_string(run) + " (" + std::string(to_string(cfg.mode)) + ")";
        const int p = cfg.max_iterations;
        const auto n = pr.files.size();

        o.require(rec.loop.rounds <= 1 + 2 * p, where + ": " + std::to_string(rec.loop.rounds) + " C2 rounds");
        o.require(rec.loop.slides <= p && rec.loop.refinements <= p, where + ": loop budget exceeded");
        if (rec.decision == Decision::update) {
            o.require(!rec.verdict_trail.empty() && rec.verdict_trail.back().approve, where + ": update without approval");
            if (cfg.mode == WorkflowMode::agentic)
                o.require(rec.verdict_trail.back().critique == Critique::correct, where + ": update without a correct critique");
            o.require(!rec.ranked_indices.empty() && rec.ranked_indices.size() <= 5, where + ": bad index list");
            for (int idx : rec.ranked_indices)
                o.require(idx >= 1 && idx <= sections && !rec.justifications.at(idx).empty(), where + ": bad index");
        } else {
            o.require(rec.ranked_indices.empty(), where + ": indices on a no-update result");
        }
        for (auto size : rec.loop.window_sizes)
            o.require(size >= 1 && size <= n, where + ": window size " + std::to_string(size));
        if (n == 0)
            o.require(rec.loop.window_sizes.empty(), where + ": window sizes without patches");
        int last_iteration = 0;
        for (const auto& e : rec.trace) {
            o.require(e.iteration >= last_iteration, where + ": iteration decreased");
            last_iteration = e.iteration;
        }
        if (cfg.mode == WorkflowMode::fixed) {
            int prev = -1;
            for (const auto& e : rec.trace) {
                int s = static_cast<int>(e.stage);
                o.require(s > prev, where + ": static trace out of order");
                prev = s;
            }
            o.require(!rec.trace.empty() && rec.trace.front().stage == Stage::C1, where + ": trace does not start at C1");
            o.require(rec.loop.rounds <= 1 && rec.loop.refinements == 0, where + ": static run looped");
        }
    }
    if (o.pass)
        o.detail = "1000 fuzzed runs respect the loop bounds, approval rule and window range";
    return o;
}

// 7 ---------------------------------------------------------------------
Outcome rename_replay()
{
    Outcome o;
    auto pr = parse_corpus_record(oracle::read_file(oracle::fixture("jabref/pr.jsonl")));
    auto doc = segment_readme(pr.readme_before);
    std::string reports[2];
    Recommendation rec;
    for (auto& report : reports) {
        auto backend = ReplayBackend::from_file(oracle::fixture("jabref/replay.json"));
        Gateway gateway(backend);
        HashedBagOfWordsBackend embedder;
        Timestamp at = pr.created_at;
        rec = run_pipeline(pr, { .mode = WorkflowMode::agentic }, { gateway, embedder, [at] { return at; } });
        report = render_report(rec, doc) + to_json(rec);
    }
    o.require(rec.decision == Decision::update, "decision is not update");
    o.require(!rec.ranked_indices.empty() && rec.ranked_indices.front() == 9, "first index is not 9");
    o.require(rec.justifications.contains(9) && !is_blank(rec.justifications.at(9)), "empty justification for 9");
    o.require(reports[0] == reports[1], "report differs between runs");
    if (o.pass)
        o.detail = "update, first index 9, justified, report byte-stable";
    return o;
}

// 8 ---------------------------------------------------------------------
Outcome gateway_abstention()
{
    Outcome o;
    std::mt19937_64 rng(808);
    const std::vector<std::string> pieces { "```", "```json", "{", "}", "[", "]", "\"ranked_indices\"", ":",
        "\"justifications\"", "\"2\"", "\"text\"", "2", "99", "true", "false", "\"update_required\"", "\"sufficient\"",
        "\"approve\"", "\"critique\"", "\"generic\"", "\"correct\"", "\"bogus\"", ",", "\n", "null", "\xc3" };
    FunctionBackend fuzz([&](const ChatRequest&) {
        std::string s;
        for (int i = static_cast<int>(rng() % 24); i > 0; --i)
            s += pieces[rng() % pieces.size()];
        return s;
    });
    FunctionBackend garbage([](const ChatRequest&) { return std::string("{\"update_required\": true}"); });

    auto doc = segment_readme("# A\n\none\n\ntwo\n\nthree\n");
    PullRequest pr;
    pr.repo = "o/r";
    pr.number = 1;
    auto bundle = ContextBundle::from(pr, doc);
    LocalisationResult loc;
    loc.ranked_indices = { 2 };
    loc.justifications[2] = "x";

    int abstentions = 0;
    for (auto* backend : { &fuzz, &garbage }) {
        Gateway gw(*backend);
        int rounds = backend == &garbage ? 1 : 500;
        for (int i = 0; i < rounds && o.pass; ++i) {
            auto c1 = gw.classify_relevance(bundle);
            auto c2 = gw.assess_sufficiency(bundle);
            auto c4 = gw.localise_and_justify(bundle);
            auto c5s = gw.review_recommendation(loc, doc, bundle, ReviewMode::fixed);
            auto c5a = gw.review_recommendation(loc, doc, bundle, ReviewMode::agentic);
            o.require(!c1.abstained || !c1.update_required, "C1 abstained with update_required");
            o.require(!c2.abstained || !c2.sufficient, "C2 abstained as sufficient");
            o.require(!c4.abstained || (c4.error == "no-valid-indices" && c4.ranked_indices.empty()),
                "C4 abstained without no-valid-indices");
            o.require(c4.error.has_value() || c4.valid(doc.section_count()), "C4 returned an invalid result");
            for (const auto* v : { &c5s, &c5a })
                o.require(!v->abstained || (!v->approve && v->critique == Critique::generic),
                    "C5 abstained without a generic rejection");
            o.require(c1.attempts <= 2 && c2.attempts <= 2 && c4.attempts <= 2, "more than one repair retry");
            if (backend == &garbage)
                o.require(c1.abstained && c2.abstained && c4.abstained && c5s.abstained && c5a.abstained,
                    "unfenced replies did not abstain");
            abstentions += c1.abstained + c2.abstained + c4.abstained + c5s.abstained + c5a.abstained;
        }
    }
    if (o.pass)
        o.detail = "500 fuzzed rounds plus an all-invalid backend, " + std::to_string(abstentions)
            + " abstentions, all conservative";
    return o;
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria {
        { "user-facing accuracy reference values", user_facing_accuracy_values },
        { "weighted random guesser reference", random_baseline_reference },
        { "metric oracles", metric_oracles },
        { "README parser properties", parser_properties },
        { "dataset construction", dataset_construction },
        { "pipeline invariants under fuzzing", pipeline_invariants },
        { "rename scenario replay", rename_replay },
        { "gateway abstention under fuzzing", gateway_abstention },
    };
    int failures = 0;
    int number = 0;
    for (const auto& [name, check] : criteria) {
        ++number;
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = { false, std::string("exception: ") + e.what() };
        }
        std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", number, name, o.detail.c_str());
        failures += o.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
