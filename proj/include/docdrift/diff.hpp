#pragma once

#include "docdrift/common.hpp"

#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace docdrift {

class ReadmeDocument;

enum class LineMarker { context, added, removed };

struct DiffLine {
    LineMarker marker = LineMarker::context;
    std::string text;

    friend bool operator==(const DiffLine&, const DiffLine&) = default;
};

/// One `@@ -old_start,old_len +new_start,new_len @@` block. When a side has
/// length 0 its start names the line *after which* the change sits.
struct DiffHunk {
    int old_start = 0;
    int old_len = 0;
    int new_start = 0;
    int new_len = 0;
    std::vector<DiffLine> lines;

    friend bool operator==(const DiffHunk&, const DiffHunk&) = default;
};

class DiffParseError : public Error {
public:
    DiffParseError(const std::string& what, int line)
        : Error("diff line " + std::to_string(line) + ": " + what)
        , line_(line)
    {
    }
    int line() const { return line_; }

private:
    int line_;
};

class PatchApplyError : public Error {
public:
    using Error::Error;
};

/// Decodes unified-diff hunks. File headers (`diff --git`, `---`, `+++`,
/// `index ...`) and `\ No newline at end of file` markers are skipped.
/// Empty input yields no hunks. Throws DiffParseError.
std::vector<DiffHunk> parse_unified_diff(std::string_view patch_text);

/// Applies hunks (in any order) to `before`. Lines are compared ignoring
/// trailing whitespace. Throws PatchApplyError when a hunk does not match.
std::string apply_hunks(std::string_view before, std::span<const DiffHunk> hunks);

/// Line-based diff of two texts rendered as unified-diff hunks (no file
/// header), `context` lines around each change, adjacent hunks merged the
/// way GNU diff does.
std::vector<DiffHunk> diff_lines(std::string_view before, std::string_view after, int context = 3);
std::string render_unified_diff(std::span<const DiffHunk> hunks);

/// Section indices of `readme_before` touched by `readme_patch`.
///
/// Removed lines map to the section containing them. A change block made
/// only of added lines maps to the section holding the nearest non-blank old
/// line before the insertion point, or section 1 when there is none.
/// Throws PatchApplyError if the patch does not apply.
std::set<int> ground_truth_indices(std::string_view readme_before, std::string_view readme_patch);
std::set<int> ground_truth_indices(const ReadmeDocument& before, std::span<const DiffHunk> hunks);

} // namespace docdrift
