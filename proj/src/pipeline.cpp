#include "docdrift/pipeline.hpp"

#include <algorithm>
#include <json.hpp>
#include <sstream>

namespace docdrift {

std::string_view to_string(WorkflowMode mode)
{
    return mode == WorkflowMode::fixed ? "static" : "agentic";
}

std::optional<WorkflowMode> parse_workflow_mode(std::string_view text)
{
    if (text == "static")
        return WorkflowMode::fixed;
    if (text == "agentic")
        return WorkflowMode::agentic;
    return std::nullopt;
}

void PipelineConfig::validate() const
{
    if (window_size < 1)
        throw std::invalid_argument("window size k must be at least 1");
    if (max_iterations < 1)
        throw std::invalid_argument("iteration budget p must be at least 1");
    if (top_k < 1 || top_k > 5)
        throw std::invalid_argument("top_k must be in 1..5");
    if (static_retrieval_count < 1)
        throw std::invalid_argument("static_retrieval_count must be at least 1");
}

std::string_view to_string(Stage stage)
{
    static constexpr std::string_view names[] = { "C1", "C2", "C3", "C4", "C5" };
    return names[static_cast<int>(stage)];
}

std::string_view to_string(Decision d)
{
    return d == Decision::update ? "update" : "no_update";
}

namespace {

std::string flag(bool abstained)
{
    return abstained ? " (abstained)" : "";
}

std::string join_indices(const std::vector<int>& indices)
{
    std::string out = "[";
    for (std::size_t i = 0; i < indices.size(); ++i)
        out += (i ? "," : "") + std::to_string(indices[i]);
    return out + "]";
}

/// Per-run state shared by both workflows.
class Run {
public:
    Run(const PullRequest& pr, const PipelineConfig& cfg, PipelineBackends backends)
        : pr_(pr)
        , cfg_(cfg)
        , b_(backends)
        , doc_(segment_readme(pr.readme_before))
        , bundle_(ContextBundle::from(pr, doc_))
    {
        cfg_.validate();
        rec_.pr = pr.key();
        rec_.mode = cfg.mode;
    }

    Recommendation static_flow()
    {
        guarded([this] {
            if (!gate())
                return;
            stage_ = Stage::C2;
            auto c2 = b_.gateway.assess_sufficiency(bundle_);
            ++rec_.loop.rounds;
            event(Stage::C2, std::string(c2.sufficient ? "sufficient" : "insufficient") + flag(c2.abstained));
            if (!c2.sufficient && !pr_.files.empty()) {
                stage_ = Stage::C3;
                if (retrieve(RetrievalWindow { 0, static_cast<std::size_t>(cfg_.static_retrieval_count) }))
                    ++rec_.loop.slides;
            }
            auto loc = localise();
            if (!loc)
                return;
            auto verdict = review(*loc, ReviewMode::fixed);
            if (verdict.approve)
                accept(*loc);
            else
                rec_.error = "recommendation rejected by review";
        });
        return rec_;
    }

    Recommendation agentic_flow()
    {
        guarded([this] {
            if (!gate())
                return;
            const std::size_t n = pr_.files.size();
            const int p = cfg_.max_iterations;
            RetrievalWindow window { 0, std::min<std::size_t>(static_cast<std::size_t>(cfg_.window_size), n) };
            bool included = false;
            if (n > 0)
                rec_.loop.window_sizes.push_back(window.size);

            auto can_slide = [&] {
                return n > 0 && !retrieval_failed_ && rec_.loop.slides < p
                    && (!included || window.offset + window.size < n);
            };

            while (true) {
                stage_ = Stage::C2;
                auto c2 = b_.gateway.assess_sufficiency(bundle_);
                ++rec_.loop.rounds;
                event(Stage::C2, std::string(c2.sufficient ? "sufficient" : "insufficient") + flag(c2.abstained));
                while (!c2.sufficient && can_slide()) {
                    if (included)
                        ++window.offset;
                    included = true;
                    ++rec_.loop.slides;
                    stage_ = Stage::C3;
                    if (!retrieve(window))
                        break;
                    stage_ = Stage::C2;
                    c2 = b_.gateway.assess_sufficiency(bundle_);
                    ++rec_.loop.rounds;
                    event(Stage::C2, std::string(c2.sufficient ? "sufficient" : "insufficient") + flag(c2.abstained));
                }

                auto loc = localise();
                if (!loc)
                    return;
                auto verdict = review(*loc, ReviewMode::agentic);
                if (verdict.critique == Critique::correct) {
                    if (verdict.approve)
                        accept(*loc);
                    else
                        rec_.error = "update judged unnecessary by stability check";
                    return;
                }
                if (rec_.loop.refinements >= p) {
                    rec_.error = "refinement budget exhausted";
                    return;
                }
                ++rec_.loop.refinements;
                ++iteration_;
                if (n > 0) {
                    if (verdict.critique == Critique::generic) {
                        window.size = std::min(window.size + 1, n);
                        window.offset = std::min(window.offset, n - window.size);
                        included = true;
                    } else {
                        window.size = std::max<std::size_t>(window.size - 1, 1);
                    }
                    rec_.loop.window_sizes.push_back(window.size);
                    if (included && !retrieval_failed_) {
                        stage_ = Stage::C3;
                        if (scores_)
                            refresh_patches(window);
                        else
                            retrieve(window);
                    }
                }
            }
        });
        return rec_;
    }

private:
    template <class Fn>
    void guarded(Fn body)
    {
        try {
            body();
        } catch (const BackendError& e) {
            rec_.backend_failure = true;
            rec_.error = std::string("backend error: ") + e.what();
            event(stage_, *rec_.error);
            rec_.decision = Decision::no_update;
            rec_.ranked_indices.clear();
            rec_.justifications.clear();
        }
    }

    bool gate()
    {
        stage_ = Stage::C1;
        auto c1 = b_.gateway.classify_relevance(bundle_);
        event(Stage::C1, std::string("update_required=") + (c1.update_required ? "true" : "false") + flag(c1.abstained));
        return c1.update_required;
    }

    /// Loads the ranked window into the bundle. False when retrieval is
    /// unavailable (the run continues on metadata alone).
    bool retrieve(RetrievalWindow window)
    {
        if (!scores_ && !retrieval_failed_) {
            try {
                scores_ = score_patches(pr_, doc_, b_.embedder);
            } catch (const std::exception& e) {
                retrieval_failed_ = true;
                event(Stage::C3, std::string("retrieval unavailable: ") + e.what());
                return false;
            }
        }
        auto w = refresh_patches(window);
        std::string summary = "ranks " + std::to_string(w.offset + 1) + "-" + std::to_string(w.offset + w.size) + ":";
        for (const auto& patch : bundle_.patches)
            summary += " " + patch.first;
        event(Stage::C3, summary);
        return true;
    }

    RetrievalWindow refresh_patches(RetrievalWindow window)
    {
        bundle_.patches.clear();
        if (!scores_)
            return window.clamped(0);
        for (const auto& f : window_slice(*scores_, pr_.files, window))
            bundle_.patches.emplace_back(f.path, f.patch_text);
        return window.clamped(scores_->size());
    }

    std::optional<LocalisationResult> localise()
    {
        stage_ = Stage::C4;
        auto loc = b_.gateway.localise_and_justify(bundle_);
        std::string summary = loc.error ? *loc.error : "indices " + join_indices(loc.ranked_indices);
        event(Stage::C4, summary + flag(loc.abstained) + " with " + std::to_string(bundle_.patches.size()) + " patch(es)");
        if (loc.error) {
            rec_.error = *loc.error;
            return std::nullopt;
        }
        return loc;
    }

    ReviewVerdict review(const LocalisationResult& loc, ReviewMode mode)
    {
        stage_ = Stage::C5;
        auto v = b_.gateway.review_recommendation(loc, doc_, bundle_, mode);
        std::string summary = std::string("approve=") + (v.approve ? "true" : "false");
        if (v.critique)
            summary += " critique=" + std::string(to_string(*v.critique));
        event(Stage::C5, summary + flag(v.abstained));
        rec_.verdict_trail.push_back(v);
        return v;
    }

    void accept(const LocalisationResult& loc)
    {
        rec_.decision = Decision::update;
        rec_.ranked_indices = loc.ranked_indices;
        rec_.justifications = loc.justifications;
        rec_.error.reset();
    }

    void event(Stage stage, std::string summary)
    {
        rec_.trace.push_back({ stage, iteration_, std::move(summary), b_.clock ? b_.clock() : system_now() });
    }

    const PullRequest& pr_;
    PipelineConfig cfg_;
    PipelineBackends b_;
    ReadmeDocument doc_;
    ContextBundle bundle_;
    Recommendation rec_;
    std::optional<std::vector<PatchScore>> scores_;
    bool retrieval_failed_ = false;
    int iteration_ = 0;
    Stage stage_ = Stage::C1;
};

std::string first_line(const std::string& text, std::size_t max_chars = 100)
{
    std::string line = text.substr(0, text.find('\n'));
    if (utf8_length(line) > max_chars)
        line = std::string(utf8_prefix(line, max_chars)) + "...";
    return line;
}

} // namespace

Recommendation run_static(const PullRequest& pr, const PipelineConfig& cfg, PipelineBackends backends)
{
    return Run(pr, cfg, backends).static_flow();
}

Recommendation run_agentic(const PullRequest& pr, const PipelineConfig& cfg, PipelineBackends backends)
{
    return Run(pr, cfg, backends).agentic_flow();
}

Recommendation run_pipeline(const PullRequest& pr, const PipelineConfig& cfg, PipelineBackends backends)
{
    return cfg.mode == WorkflowMode::agentic ? run_agentic(pr, cfg, backends) : run_static(pr, cfg, backends);
}

std::string render_report(const Recommendation& rec, const ReadmeDocument& doc)
{
    std::ostringstream out;
    out << "docdrift report v1\n";
    out << "pr: " << rec.pr.str() << "\n";
    out << "mode: " << to_string(rec.mode) << "\n";
    if (rec.decision == Decision::update) {
        out << "decision: update recommended\n";
        out << "sections:\n";
        auto tree = build_hierarchy(doc);
        int rank = 0;
        for (int idx : rec.ranked_indices) {
            out << "  " << ++rank << ". [" << idx << "]";
            if (doc.has_section(idx)) {
                const auto& owner = tree.node(tree.owner_of(idx));
                const Section& s = doc.section(idx);
                if (s.kind == SectionKind::header)
                    out << " " << s.heading();
                else {
                    if (!owner.header_text.empty())
                        out << " under \"" << first_line(owner.header_text) << "\"";
                    out << ": " << first_line(s.text);
                }
            }
            out << "\n";
            auto j = rec.justifications.find(idx);
            if (j != rec.justifications.end())
                out << "     why: " << j->second << "\n";
        }
    } else {
        out << "decision: no update required\n";
    }
    if (rec.error)
        out << "note: " << *rec.error << "\n";
    out << "trace:\n";
    for (const auto& e : rec.trace)
        out << "  " << to_string(e.stage) << " #" << e.iteration << " " << e.summary << "\n";
    return out.str();
}

std::string to_json(const Recommendation& rec)
{
    using nlohmann::ordered_json;
    ordered_json j;
    j["version"] = 1;
    j["pr"] = rec.pr.str();
    j["mode"] = to_string(rec.mode);
    j["decision"] = to_string(rec.decision);
    j["ranked_indices"] = rec.ranked_indices;
    ordered_json just = ordered_json::object();
    for (int idx : rec.ranked_indices)
        if (auto it = rec.justifications.find(idx); it != rec.justifications.end())
            just[std::to_string(idx)] = it->second;
    j["justifications"] = just;
    ordered_json verdicts = ordered_json::array();
    for (const auto& v : rec.verdict_trail) {
        ordered_json e;
        e["approve"] = v.approve;
        e["critique"] = v.critique ? ordered_json(std::string(to_string(*v.critique))) : ordered_json(nullptr);
        e["abstained"] = v.abstained;
        e["attempts"] = v.attempts;
        verdicts.push_back(e);
    }
    j["verdicts"] = verdicts;
    ordered_json trace = ordered_json::array();
    for (const auto& e : rec.trace) {
        ordered_json t;
        t["stage"] = to_string(e.stage);
        t["iteration"] = e.iteration;
        t["summary"] = e.summary;
        t["timestamp"] = format_rfc3339(e.timestamp);
        trace.push_back(t);
    }
    j["trace"] = trace;
    j["loop"] = { { "slides", rec.loop.slides }, { "refinements", rec.loop.refinements },
        { "rounds", rec.loop.rounds }, { "window_sizes", rec.loop.window_sizes } };
    j["error"] = rec.error ? ordered_json(*rec.error) : ordered_json(nullptr);
    j["backend_failure"] = rec.backend_failure;
    return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace);
}

} // namespace docdrift
