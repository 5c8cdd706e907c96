#include "docdrift/diff.hpp"

#include "docdrift/readme.hpp"

#include <algorithm>
#include <charconv>

namespace docdrift {

namespace {

bool starts_with(std::string_view s, std::string_view prefix)
{
    return s.substr(0, prefix.size()) == prefix;
}

bool parse_number(std::string_view& s, int& out)
{
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || out < 0)
        return false;
    s.remove_prefix(static_cast<std::size_t>(ptr - s.data()));
    return true;
}

// "-12,3" or "-12" after the sign has been consumed.
bool parse_range(std::string_view& s, int& start, int& len)
{
    if (!parse_number(s, start))
        return false;
    len = 1;
    if (!s.empty() && s.front() == ',') {
        s.remove_prefix(1);
        if (!parse_number(s, len))
            return false;
    }
    return true;
}

bool parse_hunk_header(std::string_view line, DiffHunk& hunk)
{
    if (!starts_with(line, "@@ -"))
        return false;
    line.remove_prefix(4);
    if (!parse_range(line, hunk.old_start, hunk.old_len))
        return false;
    if (!starts_with(line, " +"))
        return false;
    line.remove_prefix(2);
    if (!parse_range(line, hunk.new_start, hunk.new_len))
        return false;
    return starts_with(line, " @@");
}

bool same_line(std::string_view a, std::string_view b)
{
    return trim_right(a) == trim_right(b);
}

struct Op {
    LineMarker marker;
    int old_index; // 0-based, -1 for insertions
    int new_index; // 0-based, -1 for deletions
};

std::vector<Op> myers_script(const std::vector<std::string>& a, const std::vector<std::string>& b)
{
    const int n = static_cast<int>(a.size());
    const int m = static_cast<int>(b.size());
    const int max = n + m;
    const int offset = max + 1;
    std::vector<int> v(static_cast<std::size_t>(2 * max + 3), 0);
    std::vector<std::vector<int>> trace;

    auto at = [&](std::vector<int>& vec, int k) -> int& { return vec[static_cast<std::size_t>(k + offset)]; };

    int found_d = -1;
    for (int d = 0; d <= max && found_d < 0; ++d) {
        trace.push_back(v);
        for (int k = -d; k <= d; k += 2) {
            int x = (k == -d || (k != d && at(v, k - 1) < at(v, k + 1))) ? at(v, k + 1) : at(v, k - 1) + 1;
            int y = x - k;
            while (x < n && y < m && a[static_cast<std::size_t>(x)] == b[static_cast<std::size_t>(y)]) {
                ++x;
                ++y;
            }
            at(v, k) = x;
            if (x >= n && y >= m) {
                found_d = d;
                break;
            }
        }
    }

    std::vector<Op> reversed;
    int x = n;
    int y = m;
    for (int d = found_d; d > 0; --d) {
        auto& vd = trace[static_cast<std::size_t>(d)];
        int k = x - y;
        int prev_k = (k == -d || (k != d && at(vd, k - 1) < at(vd, k + 1))) ? k + 1 : k - 1;
        int prev_x = at(vd, prev_k);
        int prev_y = prev_x - prev_k;
        while (x > prev_x && y > prev_y) {
            --x;
            --y;
            reversed.push_back({ LineMarker::context, x, y });
        }
        if (x == prev_x)
            reversed.push_back({ LineMarker::added, -1, prev_y });
        else
            reversed.push_back({ LineMarker::removed, prev_x, -1 });
        x = prev_x;
        y = prev_y;
    }
    while (x > 0 && y > 0) {
        --x;
        --y;
        reversed.push_back({ LineMarker::context, x, y });
    }
    std::reverse(reversed.begin(), reversed.end());

    // Within each change run, list removals before additions.
    std::vector<Op> script;
    script.reserve(reversed.size());
    std::size_t i = 0;
    while (i < reversed.size()) {
        if (reversed[i].marker == LineMarker::context) {
            script.push_back(reversed[i++]);
            continue;
        }
        std::size_t j = i;
        while (j < reversed.size() && reversed[j].marker != LineMarker::context)
            ++j;
        for (std::size_t k = i; k < j; ++k)
            if (reversed[k].marker == LineMarker::removed)
                script.push_back(reversed[k]);
        for (std::size_t k = i; k < j; ++k)
            if (reversed[k].marker == LineMarker::added)
                script.push_back(reversed[k]);
        i = j;
    }
    return script;
}

} // namespace

std::vector<DiffHunk> parse_unified_diff(std::string_view patch_text)
{
    auto lines = split_lines(patch_text);
    for (auto& l : lines)
        if (!l.empty() && l.back() == '\r')
            l.pop_back();

    std::vector<DiffHunk> hunks;
    std::size_t i = 0;
    while (i < lines.size()) {
        const std::string& line = lines[i];
        if (!starts_with(line, "@@")) {
            // File headers, mode lines and blank separators outside hunks.
            ++i;
            continue;
        }
        const int header_line = static_cast<int>(i) + 1;
        DiffHunk hunk;
        if (!parse_hunk_header(line, hunk))
            throw DiffParseError("malformed hunk header '" + line + "'", header_line);

        int old_left = hunk.old_len;
        int new_left = hunk.new_len;
        std::size_t j = i + 1;
        while (old_left > 0 || new_left > 0) {
            if (j >= lines.size())
                throw DiffParseError("hunk ends before its declared length", header_line);
            std::string_view body = lines[j];
            const int lineno = static_cast<int>(j) + 1;
            if (starts_with(body, "\\")) {
                ++j;
                continue;
            }
            LineMarker marker;
            std::string_view text;
            if (body.empty()) {
                // Some tools strip the single space of an empty context line.
                marker = LineMarker::context;
            } else {
                switch (body.front()) {
                case ' ':
                    marker = LineMarker::context;
                    break;
                case '-':
                    marker = LineMarker::removed;
                    break;
                case '+':
                    marker = LineMarker::added;
                    break;
                default:
                    throw DiffParseError("unexpected line inside hunk", lineno);
                }
                text = body.substr(1);
            }
            if (marker != LineMarker::added) {
                if (old_left == 0)
                    throw DiffParseError("more old lines than the header declares", lineno);
                --old_left;
            }
            if (marker != LineMarker::removed) {
                if (new_left == 0)
                    throw DiffParseError("more new lines than the header declares", lineno);
                --new_left;
            }
            hunk.lines.push_back({ marker, std::string(text) });
            ++j;
        }
        while (j < lines.size() && starts_with(lines[j], "\\"))
            ++j;
        hunks.push_back(std::move(hunk));
        i = j;
    }
    return hunks;
}

std::string apply_hunks(std::string_view before, std::span<const DiffHunk> hunks)
{
    auto old_lines = split_lines(before);
    // Lines added to an empty file are complete lines.
    const bool trailing_newline = before.empty() || before.back() == '\n';

    std::vector<const DiffHunk*> ordered;
    for (const auto& h : hunks)
        ordered.push_back(&h);
    std::stable_sort(ordered.begin(), ordered.end(),
        [](const DiffHunk* a, const DiffHunk* b) { return a->old_start < b->old_start; });

    std::vector<std::string> out;
    std::size_t cursor = 1; // next old line to copy, 1-based
    for (const DiffHunk* h : ordered) {
        std::size_t first = static_cast<std::size_t>(h->old_len == 0 ? h->old_start + 1 : h->old_start);
        if (first < cursor)
            throw PatchApplyError("hunk @@ -" + std::to_string(h->old_start) + " overlaps the previous hunk");
        if (first > old_lines.size() + 1)
            throw PatchApplyError("hunk @@ -" + std::to_string(h->old_start) + " starts past end of file");
        for (; cursor < first; ++cursor)
            out.push_back(old_lines[cursor - 1]);
        std::size_t pos = first;
        for (const auto& line : h->lines) {
            if (line.marker == LineMarker::added) {
                out.push_back(line.text);
                continue;
            }
            if (pos > old_lines.size() || !same_line(old_lines[pos - 1], line.text))
                throw PatchApplyError("hunk @@ -" + std::to_string(h->old_start) + " does not match line "
                    + std::to_string(pos));
            if (line.marker == LineMarker::context)
                out.push_back(old_lines[pos - 1]);
            ++pos;
        }
        cursor = pos;
    }
    for (; cursor <= old_lines.size(); ++cursor)
        out.push_back(old_lines[cursor - 1]);

    std::string result;
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (k > 0)
            result += '\n';
        result += out[k];
    }
    if (trailing_newline && !out.empty())
        result += '\n';
    return result;
}

std::vector<DiffHunk> diff_lines(std::string_view before, std::string_view after, int context)
{
    auto a = split_lines(before);
    auto b = split_lines(after);
    auto script = myers_script(a, b);

    // Indices (into script) of change ops.
    std::vector<std::size_t> changes;
    for (std::size_t i = 0; i < script.size(); ++i)
        if (script[i].marker != LineMarker::context)
            changes.push_back(i);

    std::vector<DiffHunk> hunks;
    std::size_t c = 0;
    const std::size_t ctx = static_cast<std::size_t>(std::max(context, 0));
    while (c < changes.size()) {
        std::size_t first = changes[c];
        std::size_t last = first;
        // Extend while the gap of context lines to the next change is <= 2*ctx.
        while (c + 1 < changes.size() && changes[c + 1] - last - 1 <= 2 * ctx) {
            ++c;
            last = changes[c];
        }
        ++c;
        std::size_t begin = first >= ctx ? first - ctx : 0;
        std::size_t end = std::min(script.size(), last + ctx + 1);

        DiffHunk hunk;
        // Old/new positions (0-based) at `begin`.
        int old_pos = 0;
        int new_pos = 0;
        for (std::size_t i = 0; i < begin; ++i) {
            if (script[i].marker != LineMarker::added)
                ++old_pos;
            if (script[i].marker != LineMarker::removed)
                ++new_pos;
        }
        for (std::size_t i = begin; i < end; ++i) {
            const Op& op = script[i];
            if (op.marker != LineMarker::added)
                ++hunk.old_len;
            if (op.marker != LineMarker::removed)
                ++hunk.new_len;
            const std::string& text = op.marker == LineMarker::added
                ? b[static_cast<std::size_t>(op.new_index)]
                : a[static_cast<std::size_t>(op.old_index)];
            hunk.lines.push_back({ op.marker, text });
        }
        hunk.old_start = hunk.old_len == 0 ? old_pos : old_pos + 1;
        hunk.new_start = hunk.new_len == 0 ? new_pos : new_pos + 1;
        hunks.push_back(std::move(hunk));
    }
    return hunks;
}

std::string render_unified_diff(std::span<const DiffHunk> hunks)
{
    auto range = [](int start, int len) {
        return len == 1 ? std::to_string(start) : std::to_string(start) + "," + std::to_string(len);
    };
    std::string out;
    for (const auto& h : hunks) {
        out += "@@ -" + range(h.old_start, h.old_len) + " +" + range(h.new_start, h.new_len) + " @@\n";
        for (const auto& line : h.lines) {
            out += line.marker == LineMarker::context ? ' ' : line.marker == LineMarker::added ? '+' : '-';
            out += line.text;
            out += '\n';
        }
    }
    return out;
}

std::set<int> ground_truth_indices(const ReadmeDocument& before, std::span<const DiffHunk> hunks)
{
    std::set<int> indices;
    if (before.section_count() == 0)
        return indices;

    auto anchor_section = [&before](int line) {
        for (int l = line; l >= 1; --l)
            if (auto s = before.section_at_line(l))
                return *s;
        return 1;
    };

    for (const auto& h : hunks) {
        int pos = h.old_len == 0 ? h.old_start + 1 : h.old_start;
        std::size_t i = 0;
        while (i < h.lines.size()) {
            if (h.lines[i].marker == LineMarker::context) {
                ++pos;
                ++i;
                continue;
            }
            std::size_t j = i;
            bool has_removed = false;
            while (j < h.lines.size() && h.lines[j].marker != LineMarker::context) {
                has_removed = has_removed || h.lines[j].marker == LineMarker::removed;
                ++j;
            }
            if (has_removed) {
                for (std::size_t k = i; k < j; ++k) {
                    if (h.lines[k].marker != LineMarker::removed)
                        continue;
                    auto s = before.section_at_line(pos);
                    indices.insert(s ? *s : anchor_section(pos));
                    ++pos;
                }
            } else {
                indices.insert(anchor_section(pos - 1));
            }
            i = j;
        }
    }
    return indices;
}

std::set<int> ground_truth_indices(std::string_view readme_before, std::string_view readme_patch)
{
    auto hunks = parse_unified_diff(readme_patch);
    apply_hunks(readme_before, hunks);
    return ground_truth_indices(segment_readme(readme_before), hunks);
}

} // namespace docdrift
