#pragma once

#include "docdrift/common.hpp"

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace docdrift {

enum class ChangeKind { added, modified, deleted, renamed };

std::string_view to_string(ChangeKind kind);
std::optional<ChangeKind> parse_change_kind(std::string_view text);

struct Commit {
    std::string sha; // 40 lowercase hex characters
    std::string message;
    std::optional<Timestamp> authored_at;
    // Paths touched by this commit, when the source recorded them.
    std::optional<std::vector<std::string>> files;

    friend bool operator==(const Commit&, const Commit&) = default;
};

struct FilePatch {
    std::string path;
    ChangeKind change_kind = ChangeKind::modified;
    std::string patch_text; // empty for binary files
    std::optional<std::string> old_path;

    friend bool operator==(const FilePatch&, const FilePatch&) = default;
};

struct PrKey {
    std::string repo;
    std::int64_t number = 0;

    std::string str() const { return repo + "#" + std::to_string(number); }
    friend auto operator<=>(const PrKey&, const PrKey&) = default;
    friend bool operator==(const PrKey&, const PrKey&) = default;
};

struct RecordMeta {
    bool readme_missing = false; // no README at the base ref

    friend bool operator==(const RecordMeta&, const RecordMeta&) = default;
};

struct PullRequest {
    std::string repo; // "owner/name"
    std::int64_t number = 0;
    std::string title;
    std::string description;
    std::vector<Commit> commits;
    std::vector<FilePatch> files;
    std::string readme_before;
    std::optional<std::string> readme_patch; // set iff the root README changed
    Timestamp created_at {};
    RecordMeta meta;

    PrKey key() const { return { repo, number }; }
    friend bool operator==(const PullRequest&, const PullRequest&) = default;
};

struct GroundTruth {
    PrKey pr_key;
    std::set<int> updated_indices;
    bool is_positive = false;
};

/// Raised for a record that does not match the corpus schema.
class SchemaError : public Error {
public:
    SchemaError(std::string field, const std::string& what)
        : Error("field '" + field + "': " + what)
        , field_(std::move(field))
    {
    }
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Parses one corpus line. A missing or null description becomes "".
PullRequest parse_corpus_record(std::string_view record);

/// One line of JSON, no trailing newline. Output is byte-stable.
std::string serialize_corpus_record(const PullRequest& pr);

struct CorpusLoad {
    std::vector<PullRequest> records;
    std::size_t skipped = 0;
    std::vector<std::string> errors; // "line N: ..." per skipped record
};

/// Reads newline-delimited records, skipping (and counting) bad ones.
CorpusLoad load_corpus(std::istream& in);
CorpusLoad load_corpus_file(const std::string& path);
void write_corpus(std::ostream& out, std::span<const PullRequest> prs);

/// Root-level README: `README` in any case, extension md/markdown/txt/rst or none.
bool is_root_readme(std::string_view path);

/// Picks the README among `paths`, preferring `.md` when several match.
std::optional<std::size_t> select_readme(std::span<const std::string> paths);

/// Index into pr.files of the changed root README, if any.
std::optional<std::size_t> find_readme_patch(const PullRequest& pr);

/// Ground truth for a record. Throws PatchApplyError when the README patch
/// does not apply to readme_before.
GroundTruth ground_truth(const PullRequest& pr);

} // namespace docdrift
