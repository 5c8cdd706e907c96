#include "docdrift/cli.hpp"

#include "docdrift/diff.hpp"
#include "docdrift/metrics.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <mutex>
#include <sstream>
#include <thread>

namespace docdrift {

using nlohmann::json;

// ------------------------------------------------------------------ config

namespace {

void reject_unknown(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed)
{
    if (!j.is_object())
        throw std::invalid_argument("config '" + where + "' must be an object");
    for (const auto& [key, _] : j.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw std::invalid_argument("unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
}

template <class T>
void read_into(const json& j, const char* key, T& target)
{
    if (auto it = j.find(key); it != j.end())
        target = it->get<T>();
}

template <class T>
void read_into(const json& j, const char* key, std::optional<T>& target)
{
    if (auto it = j.find(key); it != j.end() && !it->is_null())
        target = it->get<T>();
}

} // namespace

AppConfig AppConfig::from_json(const std::string& text)
{
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw std::invalid_argument("config is not valid JSON");
    AppConfig cfg;
    try {
        reject_unknown(j, "", { "forge", "chat", "embedding", "pipeline", "dataset", "paths", "seed", "workers" });
        if (auto f = j.find("forge"); f != j.end()) {
            reject_unknown(*f, "forge", { "base_url", "per_page", "max_retries", "cache_dir" });
            read_into(*f, "base_url", cfg.forge.base_url);
            read_into(*f, "per_page", cfg.forge.per_page);
            read_into(*f, "max_retries", cfg.forge.max_retries);
            std::optional<std::string> cache;
            read_into(*f, "cache_dir", cache);
            if (cache)
                cfg.forge.cache_dir = *cache;
        }
        if (auto c = j.find("chat"); c != j.end()) {
            reject_unknown(*c, "chat", { "url", "model" });
            read_into(*c, "url", cfg.chat_url);
            read_into(*c, "model", cfg.chat_model);
        }
        if (auto e = j.find("embedding"); e != j.end()) {
            reject_unknown(*e, "embedding", { "url", "model" });
            read_into(*e, "url", cfg.embed_url);
            read_into(*e, "model", cfg.embed_model);
        }
        if (auto p = j.find("pipeline"); p != j.end()) {
            reject_unknown(*p, "pipeline", { "mode", "k", "p" });
            if (auto m = p->find("mode"); m != p->end()) {
                auto mode = parse_workflow_mode(m->get<std::string>());
                if (!mode)
                    throw std::invalid_argument("pipeline.mode must be static or agentic");
                cfg.pipeline.mode = *mode;
            }
            read_into(*p, "k", cfg.pipeline.window_size);
            read_into(*p, "p", cfg.pipeline.max_iterations);
        }
        if (auto d = j.find("dataset"); d != j.end()) {
            reject_unknown(*d, "dataset", { "thresholds", "negative_ratio", "strict_chronology" });
            if (auto t = d->find("thresholds"); t != d->end())
                cfg.thresholds = FilterThresholds::parse(t->get<std::string>());
            read_into(*d, "negative_ratio", cfg.negative_ratio);
            read_into(*d, "strict_chronology", cfg.strict_chronology);
        }
        if (auto p = j.find("paths"); p != j.end()) {
            reject_unknown(*p, "paths", { "replay", "prompts" });
            std::optional<std::string> replay;
            std::optional<std::string> prompts;
            read_into(*p, "replay", replay);
            read_into(*p, "prompts", prompts);
            if (replay)
                cfg.replay = *replay;
            if (prompts)
                cfg.prompts_dir = *prompts;
        }
        read_into(j, "seed", cfg.seed);
        read_into(j, "workers", cfg.workers);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config value has the wrong type: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

AppConfig AppConfig::from_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

void AppConfig::validate() const
{
    forge.validate();
    pipeline.validate();
    thresholds.validate();
    if (negative_ratio < 0)
        throw std::invalid_argument("negative_ratio must be non-negative");
    if (workers < 1 || workers > 256)
        throw std::invalid_argument("workers must be in 1..256");
}

// ---------------------------------------------------------------- commands

namespace {

/// Raised for conditions that map to exit code 2.
class InputError : public Error {
public:
    using Error::Error;
};

template <class Fn>
void parallel_for(std::size_t n, int workers, Fn fn)
{
    std::atomic<std::size_t> next { 0 };
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next = n;
            }
        }
    };
    std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), std::max<std::size_t>(n, 1));
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < count; ++t)
        threads.emplace_back(worker);
    worker();
    for (auto& t : threads)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

std::vector<PullRequest> read_corpus(const std::string& path, std::ostream& err)
{
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot read " + path);
    auto load = load_corpus(in);
    for (const auto& e : load.errors)
        err << path << ": skipped " << e << "\n";
    return std::move(load.records);
}

void write_file(const std::filesystem::path& path, const std::string& content)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot write " + path.string());
    out << content;
}

void write_corpus_file(const std::filesystem::path& path, std::span<const PullRequest> prs)
{
    std::ostringstream buf;
    write_corpus(buf, prs);
    write_file(path, buf.str());
}

PrStateFilter parse_state(const std::string& s)
{
    if (s == "merged")
        return PrStateFilter::merged;
    if (s == "closed")
        return PrStateFilter::closed;
    if (s == "all")
        return PrStateFilter::all;
    throw InputError("--state must be merged, closed or all");
}

struct ChatSetup {
    std::unique_ptr<ChatBackend> base;
    std::unique_ptr<RecordingBackend> recorder;
    bool replay = false;

    ChatBackend& backend() { return recorder ? static_cast<ChatBackend&>(*recorder) : *base; }
};

ChatSetup make_chat(const AppConfig& cfg, bool live, const std::optional<std::string>& record_to)
{
    ChatSetup s;
    if (live) {
        if (!cfg.chat_url)
            throw InputError("--live needs --backend-url (or chat.url in the config)");
        s.base = std::make_unique<HttpChatBackend>(*cfg.chat_url, cfg.chat_model);
        if (record_to)
            s.recorder = std::make_unique<RecordingBackend>(*s.base);
    } else if (cfg.replay) {
        try {
            s.base = std::make_unique<ReplayBackend>(ReplayBackend::from_file(*cfg.replay));
        } catch (const std::invalid_argument& e) {
            throw InputError(e.what());
        }
        s.replay = true;
    } else {
        throw InputError("no chat backend: pass --replay FILE or --live with --backend-url");
    }
    return s;
}

std::unique_ptr<EmbeddingBackend> make_embedder(const AppConfig& cfg)
{
    if (cfg.embed_url)
        return std::make_unique<HttpEmbeddingBackend>(*cfg.embed_url, cfg.embed_model);
    return std::make_unique<HashedBagOfWordsBackend>();
}

PromptTemplates make_templates(const AppConfig& cfg)
{
    try {
        return cfg.prompts_dir ? PromptTemplates::load_dir(*cfg.prompts_dir) : PromptTemplates::defaults();
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
}

/// Replay runs stamp trace events with the PR's creation time so reports
/// are byte-stable.
Clock clock_for(const PullRequest& pr, bool replay)
{
    if (!replay)
        return system_now;
    Timestamp fixed = pr.created_at;
    return [fixed] { return fixed; };
}

std::optional<PrKey> parse_pr_ref(const std::string& ref)
{
    auto hash = ref.rfind('#');
    if (hash == std::string::npos || hash == 0 || ref.find('/') > hash)
        return std::nullopt;
    try {
        std::size_t used = 0;
        long long n = std::stoll(ref.substr(hash + 1), &used);
        if (used != ref.size() - hash - 1 || n <= 0)
            return std::nullopt;
        return PrKey { ref.substr(0, hash), n };
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

int cmd_ingest(AppConfig cfg, const std::string& repo, const std::string& out_path, const std::string& state,
    int limit, std::ostream& out, std::ostream& err)
{
    cfg.forge = ForgeConfig::with_env_token(cfg.forge);
    auto limiter = std::make_shared<RateLimiter>();
    std::vector<PrSummary> listing;
    {
        ForgeClient client(cfg.forge, limiter);
        listing = client.list_pull_requests(repo, parse_state(state));
    }
    if (limit > 0 && listing.size() > static_cast<std::size_t>(limit))
        listing.resize(static_cast<std::size_t>(limit));

    std::vector<PullRequest> records(listing.size());
    parallel_for(listing.size(), cfg.workers, [&](std::size_t i) {
        ForgeClient client(cfg.forge, limiter);
        records[i] = client.fetch_pr_detail(repo, listing[i].number);
    });
    write_corpus_file(out_path, records);
    std::size_t missing = std::count_if(
        records.begin(), records.end(), [](const PullRequest& pr) { return pr.meta.readme_missing; });
    out << "ingested " << records.size() << " pull requests from " << repo << " into " << out_path << "\n";
    if (missing)
        err << missing << " record(s) have no README at their base revision\n";
    return exit_code::ok;
}

int cmd_build_dataset(const AppConfig& cfg, const std::string& in_path, const std::string& out_dir, bool derive,
    std::ostream& out, std::ostream& err)
{
    auto prs = read_corpus(in_path, err);
    BuildOptions options;
    options.thresholds = cfg.thresholds;
    options.negative_ratio = cfg.negative_ratio;
    options.seed = cfg.seed;
    options.chronology.strict = cfg.strict_chronology;
    if (derive) {
        std::vector<PullRequest> updating;
        for (const auto& pr : prs)
            if (pr.readme_patch)
                updating.push_back(pr);
        try {
            options.thresholds = derive_thresholds(updating);
        } catch (const std::invalid_argument& e) {
            throw InputError(e.what());
        }
        out << "derived thresholds: " << options.thresholds.max_readme_paragraphs << ","
            << options.thresholds.max_changed_files << "," << options.thresholds.max_commits << "\n";
    }
    auto build = build_datasets(prs, options);
    std::filesystem::path dir(out_dir);
    write_corpus_file(dir / "positives.jsonl", build.positives);
    write_corpus_file(dir / "negatives.jsonl", build.negatives);
    write_file(dir / "filter_report.json", build.report.to_json() + "\n");
    out << build.report.to_json() << "\n";
    return exit_code::ok;
}

int cmd_analyze(AppConfig cfg, const std::string& target, const std::optional<std::string>& pr_ref, bool live,
    bool as_json, const std::optional<std::string>& record_to, std::ostream& out, std::ostream& err)
{
    PullRequest pr;
    if (std::filesystem::exists(target)) {
        auto prs = read_corpus(target, err);
        if (prs.empty())
            throw InputError("no readable record in " + target);
        auto it = prs.begin();
        if (pr_ref) {
            auto key = parse_pr_ref(*pr_ref);
            if (!key)
                throw InputError("--pr must look like owner/repo#123");
            it = std::find_if(prs.begin(), prs.end(), [&](const PullRequest& p) { return p.key() == *key; });
            if (it == prs.end())
                throw InputError(*pr_ref + " is not in " + target);
        }
        pr = *it;
    } else if (auto key = parse_pr_ref(target)) {
        cfg.forge = ForgeConfig::with_env_token(cfg.forge);
        ForgeClient client(cfg.forge);
        pr = client.fetch_pr_detail(key->repo, key->number);
    } else {
        throw InputError("'" + target + "' is neither a corpus file nor owner/repo#number");
    }

    auto chat = make_chat(cfg, live, record_to);
    auto embedder = make_embedder(cfg);
    GatewayOptions gopts;
    gopts.top_k = cfg.pipeline.top_k;
    Gateway gateway(chat.backend(), gopts, make_templates(cfg));
    auto rec = run_pipeline(pr, cfg.pipeline, { gateway, *embedder, clock_for(pr, chat.replay) });
    if (chat.recorder && record_to)
        chat.recorder->save(*record_to);

    if (as_json)
        out << to_json(rec) << "\n";
    else
        out << render_report(rec, segment_readme(pr.readme_before));
    if (rec.backend_failure) {
        err << "backend failure: " << rec.error.value_or("unknown") << "\n";
        return exit_code::backend_error;
    }
    return exit_code::ok;
}

struct EvalEntry {
    RunResult result;
    std::optional<std::string> error;
    bool backend_failure = false;
    bool skipped = false;
};

int cmd_evaluate(const AppConfig& cfg, const std::string& pos_path, const std::string& neg_path, bool live,
    bool random, std::size_t trials, bool micro, bool as_json, const std::optional<std::string>& results_out,
    const std::optional<std::string>& record_to, std::ostream& out, std::ostream& err)
{
    auto positives = read_corpus(pos_path, err);
    auto negatives = read_corpus(neg_path, err);
    const std::string label = random ? "Random Guesser" : std::string(to_string(cfg.pipeline.mode));

    if (random) {
        CorpusStats stats;
        for (const auto& pr : positives) {
            if (!pr.readme_patch)
                continue;
            try {
                auto truth = ground_truth_indices(pr.readme_before, *pr.readme_patch);
                if (truth.empty())
                    continue;
                stats.section_counts.push_back(segment_readme(pr.readme_before).section_count());
                stats.truth_sizes.push_back(static_cast<int>(truth.size()));
            } catch (const Error& e) {
                err << pr.key().str() << ": skipped, " << e.what() << "\n";
            }
        }
        if (stats.section_counts.empty())
            throw InputError("random baseline needs at least one positive record with a usable README patch");
        auto report = random_baseline(stats, 0.01, 5, trials, cfg.seed);
        std::vector<std::pair<std::string, MetricsReport>> rows { { label, report } };
        out << (as_json ? to_json(report) + "\n" : render_table(rows));
        return exit_code::ok;
    }

    auto chat = make_chat(cfg, live, record_to);
    auto embedder = make_embedder(cfg);
    GatewayOptions gopts;
    gopts.top_k = cfg.pipeline.top_k;
    gopts.max_in_flight = cfg.workers;
    Gateway gateway(chat.backend(), gopts, make_templates(cfg));

    std::vector<const PullRequest*> all;
    for (const auto& pr : positives)
        all.push_back(&pr);
    for (const auto& pr : negatives)
        all.push_back(&pr);
    std::vector<EvalEntry> entries(all.size());

    parallel_for(all.size(), cfg.workers, [&](std::size_t i) {
        const PullRequest& pr = *all[i];
        EvalEntry& e = entries[i];
        e.result.pr = pr.key();
        e.result.truth_positive = i < positives.size();
        auto doc = segment_readme(pr.readme_before);
        e.result.tree = std::make_shared<const HierarchyTree>(build_hierarchy(doc));
        if (e.result.truth_positive) {
            try {
                if (!pr.readme_patch)
                    throw Error("positive record without a README patch");
                e.result.truth_indices = ground_truth_indices(pr.readme_before, *pr.readme_patch);
            } catch (const Error& ex) {
                e.skipped = true;
                e.error = ex.what();
                return;
            }
        }
        auto rec = run_pipeline(pr, cfg.pipeline, { gateway, *embedder, clock_for(pr, chat.replay) });
        e.result.predicted_positive = rec.decision == Decision::update;
        if (e.result.predicted_positive)
            e.result.predicted_indices = rec.ranked_indices;
        e.error = rec.error;
        e.backend_failure = rec.backend_failure;
    });
    if (chat.recorder && record_to)
        chat.recorder->save(*record_to);

    std::vector<RunResult> results;
    std::size_t failures = 0;
    for (const auto& e : entries) {
        if (e.skipped) {
            err << e.result.pr.str() << ": skipped, " << e.error.value_or("") << "\n";
            continue;
        }
        if (e.backend_failure) {
            ++failures;
            err << e.result.pr.str() << ": " << e.error.value_or("backend failure") << "\n";
        }
        results.push_back(e.result);
    }

    if (results_out) {
        std::ostringstream buf;
        for (const auto& e : entries) {
            nlohmann::ordered_json j;
            j["pr"] = e.result.pr.str();
            j["truth_positive"] = e.result.truth_positive;
            j["truth_indices"] = e.result.truth_indices;
            j["predicted_positive"] = e.result.predicted_positive;
            j["predicted_indices"] = e.result.predicted_indices;
            j["skipped"] = e.skipped;
            j["error"] = e.error ? nlohmann::ordered_json(*e.error) : nlohmann::ordered_json(nullptr);
            buf << j.dump(-1, ' ', false, json::error_handler_t::replace) << "\n";
        }
        write_file(*results_out, buf.str());
    }

    auto report = aggregate(results, micro ? Averaging::micro : Averaging::macro);
    std::vector<std::pair<std::string, MetricsReport>> rows { { label, report } };
    out << (as_json ? to_json(report) + "\n" : render_table(rows));
    if (failures) {
        err << failures << " entr" << (failures == 1 ? "y" : "ies") << " hit a backend failure\n";
        return exit_code::backend_error;
    }
    return exit_code::ok;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app { "Recommends paragraph-level README updates for pull requests.", "docdrift" };
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON settings file (unknown keys are rejected)");

    // Flags shared by several subcommands; applied on top of the config.
    std::string mode;
    int k = 0;
    int p = 0;
    std::uint64_t seed = 0;
    std::string thresholds;
    std::string backend_url;
    std::string embed_url;
    std::string replay;
    std::string prompts;
    std::string cache;
    std::string forge_url;
    int workers = 0;
    bool live = false;
    bool as_json = false;
    std::string record_to;

    auto add_pipeline_flags = [&](CLI::App* sub) {
        sub->add_option("--mode", mode, "static or agentic")->check(CLI::IsMember({ "static", "agentic" }));
        sub->add_option("--k", k, "retrieval window size")->check(CLI::PositiveNumber);
        sub->add_option("--p", p, "iteration budget")->check(CLI::PositiveNumber);
        sub->add_option("--backend-url", backend_url, "chat-completions base URL");
        sub->add_option("--embed-url", embed_url, "embeddings base URL (default: offline hashed embeddings)");
        sub->add_option("--replay", replay, "replay file answering every model call");
        sub->add_option("--prompts", prompts, "directory of prompt templates");
        sub->add_flag("--live", live, "call the live chat backend");
        sub->add_option("--record", record_to, "with --live, save the session as a replay file");
        sub->add_flag("--json", as_json, "structured output");
    };

    auto* ingest = app.add_subcommand("ingest", "mine pull requests of one repository into a corpus file");
    std::string repo;
    std::string out_path;
    std::string state = "merged";
    int limit = 0;
    ingest->add_option("--repo", repo, "owner/name")->required();
    ingest->add_option("--out", out_path, "corpus file to write")->required();
    ingest->add_option("--state", state, "merged, closed or all");
    ingest->add_option("--limit", limit, "stop after this many pull requests");
    ingest->add_option("--cache", cache, "response cache directory");
    ingest->add_option("--forge-url", forge_url, "API base URL");
    ingest->add_option("--workers", workers, "parallel fetches")->check(CLI::PositiveNumber);

    auto* build = app.add_subcommand("build-dataset", "filter a corpus into positive and negative sets");
    std::string in_path;
    std::string out_dir;
    bool derive = false;
    double negative_ratio = -1;
    bool strict = false;
    build->add_option("--in", in_path, "corpus file")->required();
    build->add_option("--out-dir", out_dir, "output directory")->required();
    build->add_option("--thresholds", thresholds, "paragraphs,files,commits (default 11,145,23)");
    build->add_option("--seed", seed, "negative sampling seed");
    build->add_option("--negative-ratio", negative_ratio, "negatives per retained positive");
    build->add_flag("--strict-chronology", strict, "README commit must follow every code commit");
    build->add_flag("--derive-thresholds", derive, "recompute thresholds with Tukey's fences");

    auto* analyze = app.add_subcommand("analyze", "recommend README updates for one pull request");
    std::string target;
    std::string pr_ref;
    analyze->add_option("target", target, "corpus file or owner/repo#number")->required();
    analyze->add_option("--pr", pr_ref, "pick owner/repo#number from the corpus file");
    analyze->add_option("--cache", cache, "forge response cache directory");
    analyze->add_option("--forge-url", forge_url, "API base URL");
    add_pipeline_flags(analyze);

    auto* evaluate = app.add_subcommand("evaluate", "score the pipeline on positive and negative sets");
    std::string pos_path;
    std::string neg_path;
    bool random = false;
    std::size_t trials = 10000;
    bool micro = false;
    std::string results_out;
    evaluate->add_option("--positives", pos_path, "positive corpus file")->required();
    evaluate->add_option("--negatives", neg_path, "negative corpus file")->required();
    evaluate->add_flag("--random", random, "evaluate the weighted random guesser instead");
    evaluate->add_option("--trials", trials, "random guesser trials");
    evaluate->add_option("--seed", seed, "random guesser seed");
    evaluate->add_flag("--micro", micro, "micro-average hierarchical recall");
    evaluate->add_option("--results-out", results_out, "per-entry results (JSON lines)");
    evaluate->add_option("--workers", workers, "parallel pipeline runs")->check(CLI::PositiveNumber);
    add_pipeline_flags(evaluate);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        if (!reversed.empty())
            reversed.pop_back(); // program name
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_code::ok;
    } catch (const CLI::ParseError& e) {
        err << "docdrift: " << e.what() << "\n";
        if (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front())
            err << sub->help();
        return exit_code::input_error;
    }

    auto given = [](CLI::App* sub, const char* name) {
        const auto* opt = sub->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };

    try {
        AppConfig cfg = config_path.empty() ? AppConfig {} : AppConfig::from_file(config_path);
        CLI::App* sub = app.get_subcommands().front();
        if (given(sub, "--mode"))
            cfg.pipeline.mode = *parse_workflow_mode(mode);
        if (given(sub, "--k"))
            cfg.pipeline.window_size = k;
        if (given(sub, "--p"))
            cfg.pipeline.max_iterations = p;
        if (given(sub, "--seed"))
            cfg.seed = seed;
        if (given(sub, "--thresholds"))
            cfg.thresholds = FilterThresholds::parse(thresholds);
        if (given(sub, "--negative-ratio"))
            cfg.negative_ratio = negative_ratio;
        if (strict)
            cfg.strict_chronology = true;
        if (given(sub, "--backend-url"))
            cfg.chat_url = backend_url;
        if (given(sub, "--embed-url"))
            cfg.embed_url = embed_url;
        if (given(sub, "--replay"))
            cfg.replay = replay;
        if (given(sub, "--prompts"))
            cfg.prompts_dir = prompts;
        if (given(sub, "--cache"))
            cfg.forge.cache_dir = cache;
        if (given(sub, "--forge-url"))
            cfg.forge.base_url = forge_url;
        if (given(sub, "--workers"))
            cfg.workers = workers;
        cfg.validate();
        std::optional<std::string> record;
        if (!record_to.empty())
            record = record_to;

        if (sub == ingest)
            return cmd_ingest(cfg, repo, out_path, state, limit, out, err);
        if (sub == build)
            return cmd_build_dataset(cfg, in_path, out_dir, derive, out, err);
        if (sub == analyze)
            return cmd_analyze(cfg, target, pr_ref.empty() ? std::nullopt : std::optional(pr_ref), live, as_json,
                record, out, err);
        return cmd_evaluate(cfg, pos_path, neg_path, live, random, trials, micro, as_json,
            results_out.empty() ? std::nullopt : std::optional(results_out), record, out, err);
    } catch (const ForgeError& e) {
        err << "docdrift: " << e.what() << "\n";
        bool input = e.kind() == ForgeError::Kind::unauthorized || e.kind() == ForgeError::Kind::not_found;
        return input ? exit_code::input_error : exit_code::backend_error;
    } catch (const BackendError& e) {
        err << "docdrift: " << e.what() << "\n";
        return exit_code::backend_error;
    } catch (const EmbeddingError& e) {
        err << "docdrift: " << e.what() << "\n";
        return exit_code::backend_error;
    } catch (const std::invalid_argument& e) {
        err << "docdrift: " << e.what() << "\n";
        return exit_code::input_error;
    } catch (const std::exception& e) {
        err << "docdrift: " << e.what() << "\n";
        return exit_code::input_error;
    }
}

} // namespace docdrift
