#pragma once

#include "docdrift/common.hpp"
#include "docdrift/corpus.hpp"
#include "docdrift/gateway.hpp"
#include "docdrift/readme.hpp"
#include "docdrift/retrieval.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace docdrift {

/// `fixed` is the linear workflow, printed as "static".
enum class WorkflowMode { fixed, agentic };

std::string_view to_string(WorkflowMode mode);
std::optional<WorkflowMode> parse_workflow_mode(std::string_view text);

struct PipelineConfig {
    WorkflowMode mode = WorkflowMode::fixed;
    int window_size = 3;    // k
    int max_iterations = 3; // p, for slides and for refinements separately
    int top_k = 5;
    int static_retrieval_count = 1;

    /// Throws std::invalid_argument unless k >= 1, p >= 1, top_k in 1..5.
    void validate() const;
};

enum class Stage { C1, C2, C3, C4, C5 };
std::string_view to_string(Stage stage);

struct TraceEvent {
    Stage stage = Stage::C1;
    int iteration = 0; // refinement round; non-decreasing along a trace
    std::string summary;
    Timestamp timestamp {};
};

enum class Decision { no_update, update };
std::string_view to_string(Decision d);

struct LoopStats {
    int slides = 0;      // C3 retrievals
    int refinements = 0; // C5-triggered window adjustments
    int rounds = 0;      // C2 evaluations
    // Retrieval window size after every change (only when the PR has patches).
    std::vector<std::size_t> window_sizes;
};

struct Recommendation {
    PrKey pr;
    WorkflowMode mode = WorkflowMode::fixed;
    Decision decision = Decision::no_update;
    std::vector<int> ranked_indices;
    std::map<int, std::string> justifications;
    std::vector<ReviewVerdict> verdict_trail;
    std::vector<TraceEvent> trace;
    std::optional<std::string> error;
    bool backend_failure = false;
    LoopStats loop;
};

struct PipelineBackends {
    Gateway& gateway;
    EmbeddingBackend& embedder;
    Clock clock = system_now; // trace timestamps
};

/// C1 gate, C2, at most one C3 fetch of the top-ranked patches, C4, and a
/// single C5 review. Rejection or any component failure yields no_update.
Recommendation run_static(const PullRequest& pr, const PipelineConfig& cfg, PipelineBackends backends);

/// C1 gate, then a retrieval loop (C2 insufficient -> slide the window, up
/// to p slides) and a refinement loop (C5 critique generic grows the window,
/// hallucinating shrinks it, up to p times, each time back to C2). Performs
/// at most 1 + 2p C2 rounds.
Recommendation run_agentic(const PullRequest& pr, const PipelineConfig& cfg, PipelineBackends backends);

Recommendation run_pipeline(const PullRequest& pr, const PipelineConfig& cfg, PipelineBackends backends);

/// Line-oriented text report (first line "docdrift report v1").
std::string render_report(const Recommendation& rec, const ReadmeDocument& doc);

/// Structured dump with "version": 1.
std::string to_json(const Recommendation& rec);

} // namespace docdrift
