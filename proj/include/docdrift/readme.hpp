#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace docdrift {

enum class SectionKind { header, paragraph, code_block, table, list_block };

std::string_view to_string(SectionKind kind);

/// Inclusive, 1-based line range.
struct LineRange {
    int start = 0;
    int end = 0;

    bool contains(int line) const { return line >= start && line <= end; }
    friend bool operator==(const LineRange&, const LineRange&) = default;
};

/// One paragraph-level unit of a README. `index` is 1-based in document order.
struct Section {
    int index = 0;
    SectionKind kind = SectionKind::paragraph;
    std::optional<int> header_level; // set iff kind == header
    std::string text;
    LineRange lines;

    /// Header text without markup (`## Usage ##` -> `Usage`). Empty for non-headers.
    std::string heading() const;
};

class ReadmeDocument {
public:
    ReadmeDocument() = default;
    ReadmeDocument(std::string raw_text, std::vector<Section> sections, int line_count);

    const std::string& raw_text() const { return raw_text_; }
    const std::vector<Section>& sections() const { return sections_; }
    int line_count() const { return line_count_; }
    int section_count() const { return static_cast<int>(sections_.size()); }
    bool has_section(int index) const { return index >= 1 && index <= section_count(); }

    /// Throws std::out_of_range for an unknown index.
    const Section& section(int index) const;

    /// Section whose line range contains `line`, if any (blank lines belong to none).
    std::optional<int> section_at_line(int line) const;

private:
    std::string raw_text_;
    std::vector<Section> sections_;
    int line_count_ = 0;
};

/// Splits markdown into paragraph-level sections.
///
/// A section is a maximal run of non-blank lines, except that an ATX header
/// line is always its own section, a fenced code block is one section even
/// across blank lines, and a contiguous list or table is one section.
/// Setext headers become level 1/2 header sections spanning their underline.
/// Line endings and trailing whitespace are normalised first; invalid UTF-8
/// is replaced with U+FFFD. Never throws on malformed markdown.
ReadmeDocument segment_readme(std::string_view raw_text);

using NodeId = std::size_t;

struct HierarchyNode {
    NodeId id = 0;
    int level = 0; // 0 for the synthetic preamble root
    std::string header_text;
    std::optional<NodeId> parent;
    std::vector<NodeId> children;
    std::vector<int> section_indices;
    // Fills a skipped header level (e.g. `###` directly under `#`).
    bool synthetic = false;
};

/// Header tree of depth at most 4. Nodes live in a flat vector in pre-order;
/// node 0 is the root.
class HierarchyTree {
public:
    static constexpr int max_depth = 4;

    const HierarchyNode& root() const { return nodes_.front(); }
    const HierarchyNode& node(NodeId id) const { return nodes_.at(id); }
    const std::vector<HierarchyNode>& nodes() const { return nodes_; }
    std::size_t section_count() const { return owner_.size(); }

    /// Node directly holding `section_index`. Throws std::out_of_range.
    NodeId owner_of(int section_index) const;

    /// Ancestor-or-self of the owning node at exactly `level` (1..4).
    /// Empty when the owning node is shallower than `level`, which includes
    /// every preamble section. Throws std::out_of_range for an unknown
    /// section and std::invalid_argument for a level outside 1..4.
    std::optional<NodeId> node_at_level(int section_index, int level) const;

    int depth() const;

private:
    friend HierarchyTree build_hierarchy(const ReadmeDocument& doc);

    std::vector<HierarchyNode> nodes_;
    std::vector<NodeId> owner_; // owner_[i - 1] for section i
};

HierarchyTree build_hierarchy(const ReadmeDocument& doc);

inline std::optional<NodeId> node_at_level(const HierarchyTree& tree, int section_index, int level)
{
    return tree.node_at_level(section_index, level);
}

} // namespace docdrift
