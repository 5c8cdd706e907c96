#include "docdrift/corpus.hpp"

#include "docdrift/diff.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <ostream>

namespace docdrift {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(ChangeKind kind)
{
    switch (kind) {
    case ChangeKind::added:
        return "added";
    case ChangeKind::modified:
        return "modified";
    case ChangeKind::deleted:
        return "deleted";
    case ChangeKind::renamed:
        return "renamed";
    }
    return "modified";
}

std::optional<ChangeKind> parse_change_kind(std::string_view text)
{
    if (text == "added")
        return ChangeKind::added;
    if (text == "modified")
        return ChangeKind::modified;
    if (text == "deleted")
        return ChangeKind::deleted;
    if (text == "renamed")
        return ChangeKind::renamed;
    return std::nullopt;
}

namespace {

const json& require(const json& obj, const std::string& key, const std::string& path)
{
    auto it = obj.find(key);
    if (it == obj.end())
        throw SchemaError(path + key, "missing");
    return *it;
}

std::string require_string(const json& obj, const std::string& key, const std::string& path)
{
    const json& v = require(obj, key, path);
    if (!v.is_string())
        throw SchemaError(path + key, "expected string");
    return v.get<std::string>();
}

std::string optional_string(const json& obj, const std::string& key, const std::string& path)
{
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null())
        return {};
    if (!it->is_string())
        throw SchemaError(path + key, "expected string");
    return it->get<std::string>();
}

Timestamp require_timestamp(const json& obj, const std::string& key, const std::string& path)
{
    auto text = require_string(obj, key, path);
    try {
        return parse_rfc3339(text);
    } catch (const std::invalid_argument& e) {
        throw SchemaError(path + key, e.what());
    }
}

bool is_sha(std::string_view s)
{
    return s.size() == 40
        && std::all_of(s.begin(), s.end(), [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

Commit parse_commit(const json& j, const std::string& path)
{
    if (!j.is_object())
        throw SchemaError(path.substr(0, path.size() - 1), "expected object");
    Commit c;
    c.sha = require_string(j, "sha", path);
    if (!is_sha(c.sha))
        throw SchemaError(path + "sha", "expected 40 lowercase hex characters");
    c.message = optional_string(j, "message", path);
    auto ts = j.find("authored_at");
    if (ts != j.end() && !ts->is_null())
        c.authored_at = require_timestamp(j, "authored_at", path);
    auto files = j.find("files");
    if (files != j.end() && !files->is_null()) {
        if (!files->is_array())
            throw SchemaError(path + "files", "expected array");
        std::vector<std::string> paths;
        for (const auto& f : *files) {
            if (!f.is_string())
                throw SchemaError(path + "files", "expected array of strings");
            paths.push_back(f.get<std::string>());
        }
        c.files = std::move(paths);
    }
    return c;
}

FilePatch parse_file(const json& j, const std::string& path)
{
    if (!j.is_object())
        throw SchemaError(path.substr(0, path.size() - 1), "expected object");
    FilePatch f;
    f.path = require_string(j, "path", path);
    auto kind = require_string(j, "change_kind", path);
    auto parsed = parse_change_kind(kind);
    if (!parsed)
        throw SchemaError(path + "change_kind", "unknown value '" + kind + "'");
    f.change_kind = *parsed;
    f.patch_text = optional_string(j, "patch_text", path);
    auto old = j.find("old_path");
    if (old != j.end() && !old->is_null()) {
        if (!old->is_string())
            throw SchemaError(path + "old_path", "expected string");
        f.old_path = old->get<std::string>();
    }
    return f;
}

} // namespace

PullRequest parse_corpus_record(std::string_view record)
{
    json j;
    try {
        j = json::parse(record);
    } catch (const json::parse_error& e) {
        throw SchemaError("<record>", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object())
        throw SchemaError("<record>", "expected object");

    PullRequest pr;
    pr.repo = require_string(j, "repo", "");
    if (pr.repo.find('/') == std::string::npos)
        throw SchemaError("repo", "expected owner/name");
    const json& number = require(j, "number", "");
    if (!number.is_number_integer() || number.get<std::int64_t>() <= 0)
        throw SchemaError("number", "expected positive integer");
    pr.number = number.get<std::int64_t>();
    pr.title = require_string(j, "title", "");
    pr.description = optional_string(j, "description", "");

    const json& commits = require(j, "commits", "");
    if (!commits.is_array())
        throw SchemaError("commits", "expected array");
    for (std::size_t i = 0; i < commits.size(); ++i)
        pr.commits.push_back(parse_commit(commits[i], "commits[" + std::to_string(i) + "]."));

    const json& files = require(j, "files", "");
    if (!files.is_array())
        throw SchemaError("files", "expected array");
    for (std::size_t i = 0; i < files.size(); ++i)
        pr.files.push_back(parse_file(files[i], "files[" + std::to_string(i) + "]."));

    pr.readme_before = require_string(j, "readme_before", "");
    const json& patch = require(j, "readme_patch", "");
    if (patch.is_string())
        pr.readme_patch = patch.get<std::string>();
    else if (!patch.is_null())
        throw SchemaError("readme_patch", "expected string or null");
    pr.created_at = require_timestamp(j, "created_at", "");

    auto meta = j.find("meta");
    if (meta != j.end() && meta->is_object())
        pr.meta.readme_missing = meta->value("readme_missing", false);
    return pr;
}

std::string serialize_corpus_record(const PullRequest& pr)
{
    ordered_json j;
    j["repo"] = pr.repo;
    j["number"] = pr.number;
    j["title"] = pr.title;
    j["description"] = pr.description;
    j["commits"] = ordered_json::array();
    for (const auto& c : pr.commits) {
        ordered_json cj;
        cj["sha"] = c.sha;
        cj["message"] = c.message;
        cj["authored_at"] = c.authored_at ? ordered_json(format_rfc3339(*c.authored_at)) : ordered_json(nullptr);
        if (c.files)
            cj["files"] = *c.files;
        j["commits"].push_back(std::move(cj));
    }
    j["files"] = ordered_json::array();
    for (const auto& f : pr.files) {
        ordered_json fj;
        fj["path"] = f.path;
        fj["change_kind"] = std::string(to_string(f.change_kind));
        fj["patch_text"] = f.patch_text;
        if (f.old_path)
            fj["old_path"] = *f.old_path;
        j["files"].push_back(std::move(fj));
    }
    j["readme_before"] = pr.readme_before;
    j["readme_patch"] = pr.readme_patch ? ordered_json(*pr.readme_patch) : ordered_json(nullptr);
    j["created_at"] = format_rfc3339(pr.created_at);
    if (pr.meta.readme_missing)
        j["meta"] = { { "readme_missing", true } };
    return j.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

CorpusLoad load_corpus(std::istream& in)
{
    CorpusLoad load;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank(line))
            continue;
        try {
            load.records.push_back(parse_corpus_record(line));
        } catch (const SchemaError& e) {
            ++load.skipped;
            load.errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return load;
}

CorpusLoad load_corpus_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open corpus file " + path);
    return load_corpus(in);
}

void write_corpus(std::ostream& out, std::span<const PullRequest> prs)
{
    for (const auto& pr : prs)
        out << serialize_corpus_record(pr) << '\n';
}

bool is_root_readme(std::string_view path)
{
    if (path.find('/') != std::string_view::npos)
        return false;
    auto lower = to_lower(path);
    if (lower == "readme")
        return true;
    static constexpr std::string_view exts[] = { ".md", ".markdown", ".txt", ".rst" };
    for (auto ext : exts)
        if (lower.size() == 6 + ext.size() && lower.starts_with("readme") && lower.ends_with(ext))
            return true;
    return false;
}

std::optional<std::size_t> select_readme(std::span<const std::string> paths)
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        if (!is_root_readme(paths[i]))
            continue;
        if (!best)
            best = i;
        else if (to_lower(paths[i]).ends_with(".md") && !to_lower(paths[*best]).ends_with(".md"))
            best = i;
    }
    return best;
}

std::optional<std::size_t> find_readme_patch(const PullRequest& pr)
{
    std::vector<std::string> paths;
    paths.reserve(pr.files.size());
    for (const auto& f : pr.files)
        paths.push_back(f.path);
    return select_readme(paths);
}

GroundTruth ground_truth(const PullRequest& pr)
{
    GroundTruth gt;
    gt.pr_key = pr.key();
    if (pr.readme_patch)
        gt.updated_indices = ground_truth_indices(pr.readme_before, *pr.readme_patch);
    gt.is_positive = pr.readme_patch.has_value() || !gt.updated_indices.empty();
    return gt;
}

} // namespace docdrift
