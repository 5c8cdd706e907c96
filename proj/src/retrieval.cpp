#include "docdrift/retrieval.hpp"

#include "docdrift/http.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <json.hpp>
#include <numeric>
#include <stdexcept>

namespace docdrift {

namespace {

bool is_ascii_alnum(char c)
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

void normalise(Embedding& v)
{
    double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (norm == 0)
        return;
    for (double& x : v)
        x /= norm;
}

} // namespace

std::vector<std::string> tokenize_alnum(std::string_view text)
{
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_ascii_alnum(text[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && is_ascii_alnum(text[j]))
            ++j;
        tokens.push_back(to_lower(text.substr(i, j - i)));
        i = j;
    }
    return tokens;
}

HashedBagOfWordsBackend::HashedBagOfWordsBackend(std::size_t dimension)
    : dimension_(dimension)
{
    if (dimension_ == 0)
        throw std::invalid_argument("embedding dimension must be positive");
}

Embedding HashedBagOfWordsBackend::embed_one(std::string_view text) const
{
    Embedding v(dimension_, 0.0);
    auto tokens = tokenize_alnum(text);
    if (tokens.empty())
        tokens.emplace_back("<empty>");
    for (const auto& t : tokens)
        v[fnv1a64(t) % dimension_] += 1.0;
    normalise(v);
    return v;
}

std::vector<Embedding> HashedBagOfWordsBackend::embed(std::span<const std::string> texts)
{
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts)
        out.push_back(embed_one(t));
    return out;
}

struct HttpEmbeddingBackend::Impl {
    Impl(HttpClient client, std::string model_name)
        : http(std::move(client))
        , model(std::move(model_name))
    {
    }

    HttpClient http;
    std::string model;
    std::optional<std::string> api_key;
    std::mutex mutex;
};

HttpEmbeddingBackend::HttpEmbeddingBackend(const std::string& base_url, std::string model)
    : impl_(std::make_unique<Impl>(HttpClient(base_url), std::move(model)))
{
    if (const char* key = std::getenv("LLM_API_KEY"); key && *key)
        impl_->api_key = key;
}

HttpEmbeddingBackend::~HttpEmbeddingBackend() = default;

std::vector<Embedding> HttpEmbeddingBackend::embed(std::span<const std::string> texts)
{
    using nlohmann::json;
    json input = json::array();
    for (const auto& t : texts)
        input.push_back(t);
    json request { { "model", impl_->model }, { "input", std::move(input) } };
    HttpHeaders headers;
    if (impl_->api_key)
        headers.emplace_back("Authorization", "Bearer " + *impl_->api_key);

    std::optional<HttpResponse> res;
    {
        std::lock_guard lock(impl_->mutex);
        res = impl_->http.post("/embeddings", request.dump(-1, ' ', false, json::error_handler_t::replace),
            "application/json", headers);
        if (!res)
            throw EmbeddingError("embedding backend unreachable: " + impl_->http.last_error());
    }
    if (res->status != 200)
        throw EmbeddingError("embedding backend returned status " + std::to_string(res->status));

    std::vector<Embedding> out(texts.size());
    try {
        json body = json::parse(res->body);
        const json& data = body.at("data");
        if (!data.is_array() || data.size() != texts.size())
            throw EmbeddingError("embedding backend returned the wrong number of vectors");
        for (std::size_t i = 0; i < data.size(); ++i) {
            std::size_t slot = data[i].value("index", i);
            if (slot >= out.size())
                throw EmbeddingError("embedding index out of range");
            out[slot] = data[i].at("embedding").get<Embedding>();
            normalise(out[slot]);
        }
    } catch (const json::exception& e) {
        throw EmbeddingError(std::string("malformed embedding response: ") + e.what());
    }
    for (const auto& v : out)
        if (v.empty() || v.size() != out.front().size())
            throw EmbeddingError("embedding backend returned inconsistent dimensions");
    return out;
}

double cosine_similarity(const Embedding& a, const Embedding& b)
{
    if (a.size() != b.size())
        throw std::invalid_argument("cosine_similarity: dimension mismatch");
    double dot = 0;
    double na = 0;
    double nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0)
        return 0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::string patch_embedding_text(const FilePatch& patch)
{
    std::string text = patch.path + "\n" + patch.patch_text;
    return std::string(utf8_prefix(text, patch_embedding_chars));
}

std::vector<PatchScore> score_patches(const PullRequest& pr, const ReadmeDocument& doc, EmbeddingBackend& backend)
{
    if (pr.files.empty())
        throw std::invalid_argument("score_patches: PR has no file patches");
    if (doc.section_count() == 0)
        throw std::invalid_argument("score_patches: README has no sections");

    // One batch: desc, every section, then every patch.
    std::vector<std::string> texts;
    texts.reserve(1 + doc.sections().size() + pr.files.size());
    texts.push_back(pr.title + "\n" + pr.description);
    for (const auto& s : doc.sections())
        texts.push_back(s.text);
    for (const auto& f : pr.files)
        texts.push_back(f.patch_text.empty() ? f.path : patch_embedding_text(f));

    auto vectors = backend.embed(texts);
    if (vectors.size() != texts.size())
        throw EmbeddingError("embedding backend returned the wrong number of vectors");

    const Embedding& desc = vectors[0];
    const std::size_t first_patch = 1 + doc.sections().size();
    std::vector<PatchScore> scores;
    scores.reserve(pr.files.size());
    for (std::size_t f = 0; f < pr.files.size(); ++f) {
        const Embedding& p = vectors[first_patch + f];
        PatchScore s;
        s.file_index = f;
        s.desc_sim = cosine_similarity(desc, p);
        if (!pr.files[f].patch_text.empty()) {
            for (std::size_t i = 0; i < doc.sections().size(); ++i) {
                double sim = cosine_similarity(vectors[1 + i], p);
                if (!s.best_section_index || sim > s.best_section_sim) {
                    s.best_section_sim = sim;
                    s.best_section_index = static_cast<int>(i) + 1;
                }
            }
        }
        s.score = s.desc_sim + s.best_section_sim;
        scores.push_back(s);
    }
    std::sort(scores.begin(), scores.end(), [&pr](const PatchScore& a, const PatchScore& b) {
        if (a.score != b.score)
            return a.score > b.score;
        const auto& pa = pr.files[a.file_index].path;
        const auto& pb = pr.files[b.file_index].path;
        if (pa != pb)
            return pa < pb;
        return a.file_index < b.file_index;
    });
    return scores;
}

RetrievalWindow RetrievalWindow::clamped(std::size_t n) const
{
    if (n == 0)
        return { 0, 0 };
    RetrievalWindow w { std::min(offset, n - 1), std::max<std::size_t>(size, 1) };
    w.size = std::min(w.size, n - w.offset);
    return w;
}

std::vector<FilePatch> window_slice(
    std::span<const PatchScore> ranked, std::span<const FilePatch> files, RetrievalWindow window)
{
    std::vector<FilePatch> out;
    if (ranked.empty())
        return out;
    window = window.clamped(ranked.size());
    for (std::size_t r = window.offset; r < window.offset + window.size; ++r)
        out.push_back(files[ranked[r].file_index]);
    return out;
}

} // namespace docdrift
