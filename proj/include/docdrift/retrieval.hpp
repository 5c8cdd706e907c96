#pragma once

#include "docdrift/common.hpp"
#include "docdrift/corpus.hpp"
#include "docdrift/readme.hpp"

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace docdrift {

using Embedding = std::vector<double>;

class EmbeddingError : public Error {
public:
    using Error::Error;
};

/// Maps texts to unit-norm vectors of one fixed dimension. Implementations
/// must be deterministic and safe to call from several threads.
class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    virtual std::vector<Embedding> embed(std::span<const std::string> texts) = 0;
};

/// Offline backend: hashed bag of lowercased ASCII alphanumeric tokens.
class HashedBagOfWordsBackend final : public EmbeddingBackend {
public:
    explicit HashedBagOfWordsBackend(std::size_t dimension = 256);
    std::vector<Embedding> embed(std::span<const std::string> texts) override;
    Embedding embed_one(std::string_view text) const;

private:
    std::size_t dimension_;
};

/// OpenAI-style `POST {base}/embeddings`. The API key, when needed, comes
/// from LLM_API_KEY. Outputs are re-normalised.
class HttpEmbeddingBackend final : public EmbeddingBackend {
public:
    HttpEmbeddingBackend(const std::string& base_url, std::string model);
    ~HttpEmbeddingBackend() override;
    std::vector<Embedding> embed(std::span<const std::string> texts) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Lowercased maximal runs of [A-Za-z0-9].
std::vector<std::string> tokenize_alnum(std::string_view text);

/// Cosine similarity; 0 when either vector is zero. Throws
/// std::invalid_argument on a dimension mismatch.
double cosine_similarity(const Embedding& a, const Embedding& b);

inline constexpr std::size_t patch_embedding_chars = 4096;

/// `path + "\n" + patch_text`, cut to the first 4096 characters.
std::string patch_embedding_text(const FilePatch& patch);

struct PatchScore {
    std::size_t file_index = 0;
    double score = 0;
    double desc_sim = 0;
    double best_section_sim = 0;
    // Absent for binary or empty patches, which are scored on the path alone.
    std::optional<int> best_section_index;
};

/// Ranks every file of `pr` by sim(desc, p) + max_i sim(section_i, p),
/// with desc = title + "\n" + description. Sorted by descending score, ties
/// by ascending path. Throws std::invalid_argument when there are no files
/// or no sections; EmbeddingError propagates from the backend.
std::vector<PatchScore> score_patches(const PullRequest& pr, const ReadmeDocument& doc, EmbeddingBackend& backend);

struct RetrievalWindow {
    std::size_t offset = 0;
    std::size_t size = 3;

    /// Same window with offset + size <= n (size kept >= 1 when n > 0).
    RetrievalWindow clamped(std::size_t n) const;
    friend bool operator==(const RetrievalWindow&, const RetrievalWindow&) = default;
};

/// Patches at ranks [offset, offset + size) after clamping, in rank order.
std::vector<FilePatch> window_slice(
    std::span<const PatchScore> ranked, std::span<const FilePatch> files, RetrievalWindow window);

} // namespace docdrift
