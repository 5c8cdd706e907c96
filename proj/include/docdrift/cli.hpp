#pragma once

#include "docdrift/dataset.hpp"
#include "docdrift/forge.hpp"
#include "docdrift/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace docdrift {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int input_error = 2; // bad input, config or credentials
inline constexpr int backend_error = 3;
} // namespace exit_code

/// Settings shared by all subcommands. Loaded from a JSON file whose
/// unknown keys are rejected; command-line flags override it. Secrets are
/// never read from here (FORGE_TOKEN and LLM_API_KEY only).
struct AppConfig {
    ForgeConfig forge;
    std::optional<std::string> chat_url;
    std::string chat_model = "default";
    std::optional<std::string> embed_url; // unset: offline hashed embeddings
    std::string embed_model = "all-MiniLM-L6-v2";
    PipelineConfig pipeline;
    FilterThresholds thresholds;
    double negative_ratio = 1.0;
    bool strict_chronology = false;
    std::optional<std::filesystem::path> replay;
    std::optional<std::filesystem::path> prompts_dir;
    std::uint64_t seed = 42;
    int workers = 1;

    /// Throws std::invalid_argument on unknown keys or bad values.
    static AppConfig from_json(const std::string& text);
    static AppConfig from_file(const std::filesystem::path& path);
    void validate() const;
};

/// Runs the command line `args` (args[0] is the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace docdrift
