#include "docdrift/readme.hpp"

#include "docdrift/common.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace docdrift {

std::string_view to_string(SectionKind kind)
{
    switch (kind) {
    case SectionKind::header:
        return "header";
    case SectionKind::paragraph:
        return "paragraph";
    case SectionKind::code_block:
        return "code_block";
    case SectionKind::table:
        return "table";
    case SectionKind::list_block:
        return "list_block";
    }
    return "paragraph";
}

namespace {

std::size_t leading_spaces(std::string_view line)
{
    std::size_t n = 0;
    while (n < line.size() && line[n] == ' ')
        ++n;
    return n;
}

/// Level of an ATX header line, or 0.
int atx_level(std::string_view line)
{
    auto indent = leading_spaces(line);
    if (indent > 3)
        return 0;
    line.remove_prefix(indent);
    int level = 0;
    while (level < static_cast<int>(line.size()) && line[level] == '#')
        ++level;
    if (level == 0 || level > 6)
        return 0;
    if (level < static_cast<int>(line.size()) && line[level] != ' ' && line[level] != '\t')
        return 0;
    return level;
}

/// Setext underline level (1 for `===`, 2 for `---`), or 0.
int setext_level(std::string_view line)
{
    auto indent = leading_spaces(line);
    if (indent > 3)
        return 0;
    line = trim(line);
    if (line.empty())
        return 0;
    char c = line.front();
    if (c != '=' && c != '-')
        return 0;
    if (!std::all_of(line.begin(), line.end(), [c](char x) { return x == c; }))
        return 0;
    return c == '=' ? 1 : 2;
}

struct Fence {
    char marker = 0;
    std::size_t length = 0;
};

std::optional<Fence> fence_open(std::string_view line)
{
    auto indent = leading_spaces(line);
    if (indent > 3)
        return std::nullopt;
    line.remove_prefix(indent);
    if (line.empty() || (line.front() != '`' && line.front() != '~'))
        return std::nullopt;
    char c = line.front();
    std::size_t n = 0;
    while (n < line.size() && line[n] == c)
        ++n;
    if (n < 3)
        return std::nullopt;
    // Backtick fences may not carry backticks in their info string.
    if (c == '`' && line.substr(n).find('`') != std::string_view::npos)
        return std::nullopt;
    return Fence { c, n };
}

bool fence_closes(std::string_view line, const Fence& fence)
{
    auto indent = leading_spaces(line);
    if (indent > 3)
        return false;
    line = trim(line);
    std::size_t n = 0;
    while (n < line.size() && line[n] == fence.marker)
        ++n;
    return n >= fence.length && n == line.size();
}

bool is_list_item(std::string_view line)
{
    auto pos = line.find_first_not_of(" \t");
    if (pos == std::string_view::npos)
        return false;
    auto body = line.substr(pos);
    if (body.empty())
        return false;
    if (body.front() == '-' || body.front() == '*' || body.front() == '+')
        return body.size() == 1 || body[1] == ' ' || body[1] == '\t';
    std::size_t digits = 0;
    while (digits < body.size() && digits < 9 && std::isdigit(static_cast<unsigned char>(body[digits])))
        ++digits;
    if (digits == 0 || digits >= body.size())
        return false;
    if (body[digits] != '.' && body[digits] != ')')
        return false;
    return digits + 1 == body.size() || body[digits + 1] == ' ' || body[digits + 1] == '\t';
}

bool is_table_delimiter(std::string_view line)
{
    if (line.find('|') == std::string_view::npos)
        return false;
    line = trim(line);
    if (!line.empty() && line.front() == '|')
        line.remove_prefix(1);
    if (!line.empty() && line.back() == '|')
        line.remove_suffix(1);
    if (line.empty())
        return false;
    std::size_t start = 0;
    while (start <= line.size()) {
        auto bar = line.find('|', start);
        auto cell = trim(line.substr(start, bar == std::string_view::npos ? std::string_view::npos : bar - start));
        if (!cell.empty() && cell.front() == ':')
            cell.remove_prefix(1);
        if (!cell.empty() && cell.back() == ':')
            cell.remove_suffix(1);
        if (cell.empty() || !std::all_of(cell.begin(), cell.end(), [](char c) { return c == '-'; }))
            return false;
        if (bar == std::string_view::npos)
            break;
        start = bar + 1;
    }
    return true;
}

std::string strip_atx(std::string_view line)
{
    line = trim(line);
    while (!line.empty() && line.front() == '#')
        line.remove_prefix(1);
    line = trim(line);
    // A closing `#` run only counts when separated by whitespace.
    auto last = line.find_last_not_of('#');
    if (last == std::string_view::npos)
        return {};
    if (last + 1 < line.size() && (line[last] == ' ' || line[last] == '\t'))
        line = line.substr(0, last + 1);
    return std::string(trim(line));
}

class Segmenter {
public:
    explicit Segmenter(std::vector<std::string> lines)
        : lines_(std::move(lines))
    {
    }

    std::vector<Section> run()
    {
        const std::size_t n = lines_.size();
        for (std::size_t i = 0; i < n; ++i) {
            const std::string& line = lines_[i];
            if (is_blank(line)) {
                flush();
                continue;
            }
            if (auto fence = fence_open(line)) {
                flush();
                std::size_t close = i + 1;
                while (close < n && !fence_closes(lines_[close], *fence))
                    ++close;
                if (close >= n) {
                    // Unclosed fence runs to the last non-blank line.
                    close = n - 1;
                    while (close > i && is_blank(lines_[close]))
                        --close;
                }
                emit(SectionKind::code_block, i, close, std::nullopt);
                i = close;
                continue;
            }
            if (int level = atx_level(line)) {
                flush();
                emit(SectionKind::header, i, i, level);
                continue;
            }
            if (open_ == Open::paragraph) {
                if (int level = setext_level(line)) {
                    emit(SectionKind::header, start_, i, level);
                    open_ = Open::none;
                    continue;
                }
            }
            if (open_ != Open::table && line.find('|') != std::string::npos && i + 1 < n
                && is_table_delimiter(lines_[i + 1])) {
                flush();
                begin(Open::table, i);
                continue;
            }
            if (open_ == Open::table) {
                if (line.find('|') != std::string::npos) {
                    end_ = i;
                    continue;
                }
                flush();
            }
            if (is_list_item(line)) {
                if (open_ == Open::list) {
                    end_ = i;
                } else {
                    flush();
                    begin(Open::list, i);
                }
                continue;
            }
            if (open_ == Open::list || open_ == Open::paragraph) {
                end_ = i;
                continue;
            }
            begin(Open::paragraph, i);
        }
        flush();
        return std::move(sections_);
    }

private:
    enum class Open { none, paragraph, list, table };

    void begin(Open kind, std::size_t line)
    {
        open_ = kind;
        start_ = end_ = line;
    }

    void flush()
    {
        switch (open_) {
        case Open::none:
            return;
        case Open::paragraph:
            emit(SectionKind::paragraph, start_, end_, std::nullopt);
            break;
        case Open::list:
            emit(SectionKind::list_block, start_, end_, std::nullopt);
            break;
        case Open::table:
            emit(SectionKind::table, start_, end_, std::nullopt);
            break;
        }
        open_ = Open::none;
    }

    void emit(SectionKind kind, std::size_t first, std::size_t last, std::optional<int> level)
    {
        Section s;
        s.index = static_cast<int>(sections_.size()) + 1;
        s.kind = kind;
        s.header_level = level;
        s.lines = { static_cast<int>(first) + 1, static_cast<int>(last) + 1 };
        for (std::size_t k = first; k <= last; ++k) {
            if (k > first)
                s.text += '\n';
            s.text += lines_[k];
        }
        sections_.push_back(std::move(s));
    }

    std::vector<std::string> lines_;
    std::vector<Section> sections_;
    Open open_ = Open::none;
    std::size_t start_ = 0;
    std::size_t end_ = 0;
};

} // namespace

std::string Section::heading() const
{
    if (kind != SectionKind::header)
        return {};
    auto first_line = std::string_view(text).substr(0, text.find('\n'));
    if (atx_level(first_line) > 0)
        return strip_atx(first_line);
    // Setext: every line except the underline.
    auto last_nl = text.rfind('\n');
    std::string body = last_nl == std::string::npos ? text : text.substr(0, last_nl);
    std::replace(body.begin(), body.end(), '\n', ' ');
    return std::string(trim(body));
}

ReadmeDocument::ReadmeDocument(std::string raw_text, std::vector<Section> sections, int line_count)
    : raw_text_(std::move(raw_text))
    , sections_(std::move(sections))
    , line_count_(line_count)
{
}

const Section& ReadmeDocument::section(int index) const
{
    if (!has_section(index))
        throw std::out_of_range("no README section " + std::to_string(index));
    return sections_[static_cast<std::size_t>(index - 1)];
}

std::optional<int> ReadmeDocument::section_at_line(int line) const
{
    auto it = std::lower_bound(sections_.begin(), sections_.end(), line,
        [](const Section& s, int l) { return s.lines.end < l; });
    if (it != sections_.end() && it->lines.contains(line))
        return it->index;
    return std::nullopt;
}

ReadmeDocument segment_readme(std::string_view raw_text)
{
    std::string clean = sanitize_utf8(raw_text);
    auto lines = split_lines(clean);
    for (auto& line : lines) {
        line.resize(trim_right(line).size());
    }
    int line_count = static_cast<int>(lines.size());
    auto sections = Segmenter(std::move(lines)).run();
    return ReadmeDocument(std::string(raw_text), std::move(sections), line_count);
}

NodeId HierarchyTree::owner_of(int section_index) const
{
    if (section_index < 1 || static_cast<std::size_t>(section_index) > owner_.size())
        throw std::out_of_range("section index " + std::to_string(section_index) + " not in document");
    return owner_[static_cast<std::size_t>(section_index - 1)];
}

std::optional<NodeId> HierarchyTree::node_at_level(int section_index, int level) const
{
    if (level < 1 || level > max_depth)
        throw std::invalid_argument("hierarchy level must be in 1..4, got " + std::to_string(level));
    NodeId id = owner_of(section_index);
    if (nodes_[id].level < level)
        return std::nullopt;
    while (nodes_[id].level > level)
        id = *nodes_[id].parent;
    return id;
}

int HierarchyTree::depth() const
{
    int d = 0;
    for (const auto& n : nodes_)
        d = std::max(d, n.level);
    return d;
}

HierarchyTree build_hierarchy(const ReadmeDocument& doc)
{
    HierarchyTree tree;
    tree.nodes_.push_back(HierarchyNode {});
    tree.owner_.reserve(doc.sections().size());

    auto add_node = [&tree](NodeId parent, int level, std::string header, bool synthetic) {
        NodeId id = tree.nodes_.size();
        HierarchyNode node;
        node.id = id;
        node.level = level;
        node.header_text = std::move(header);
        node.parent = parent;
        node.synthetic = synthetic;
        tree.nodes_.push_back(std::move(node));
        tree.nodes_[parent].children.push_back(id);
        return id;
    };

    std::vector<NodeId> stack { 0 };
    for (const auto& section : doc.sections()) {
        if (section.kind == SectionKind::header && *section.header_level <= HierarchyTree::max_depth) {
            int level = *section.header_level;
            while (tree.nodes_[stack.back()].level >= level)
                stack.pop_back();
            for (int l = tree.nodes_[stack.back()].level + 1; l < level; ++l)
                stack.push_back(add_node(stack.back(), l, {}, true));
            stack.push_back(add_node(stack.back(), level, section.heading(), false));
        }
        NodeId owner = stack.back();
        tree.owner_.push_back(owner);
        tree.nodes_[owner].section_indices.push_back(section.index);
    }
    return tree;
}

} // namespace docdrift
