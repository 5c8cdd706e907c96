#include "docdrift/readme.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace docdrift;

namespace {

std::vector<SectionKind> kinds(const ReadmeDocument& doc)
{
    std::vector<SectionKind> out;
    for (const auto& s : doc.sections())
        out.push_back(s.kind);
    return out;
}

} // namespace

TEST_SUITE("readme")
{
    TEST_CASE("empty input has no sections")
    {
        auto doc = segment_readme("");
        CHECK(doc.section_count() == 0);
        CHECK(doc.line_count() == 0);
        auto tree = build_hierarchy(doc);
        CHECK(tree.nodes().size() == 1);
        CHECK(tree.depth() == 0);
    }

    TEST_CASE("header then paragraph")
    {
        auto doc = segment_readme("# Title\n\nHello world.\n");
        REQUIRE(doc.section_count() == 2);
        const auto& h = doc.section(1);
        CHECK(h.index == 1);
        CHECK(h.kind == SectionKind::header);
        CHECK(h.header_level == 1);
        CHECK(h.text == "# Title");
        CHECK(h.heading() == "Title");
        const auto& p = doc.section(2);
        CHECK(p.kind == SectionKind::paragraph);
        CHECK_FALSE(p.header_level);
        CHECK(p.text == "Hello world.");
        CHECK(p.lines == LineRange { 3, 3 });
    }

    TEST_CASE("fenced fixture matches its hand segmentation")
    {
        auto doc = segment_readme(oracle::read_file(oracle::fixture("markdown/fenced.md")));
        using K = SectionKind;
        REQUIRE(doc.section_count() == 7);
        CHECK(kinds(doc) == std::vector<K> { K::header, K::paragraph, K::code_block, K::header, K::list_block, K::table, K::paragraph });
        CHECK(doc.section(2).lines == LineRange { 3, 4 });
        CHECK(doc.section(3).lines == LineRange { 6, 10 });
        CHECK(doc.section(3).text.find("\n\n") != std::string::npos);
        CHECK(doc.section(4).header_level == 2);
        CHECK(doc.section(5).lines == LineRange { 14, 16 });
        CHECK(doc.section(6).lines == LineRange { 18, 20 });
        CHECK(doc.section(7).lines == LineRange { 22, 22 });
        CHECK(doc.section_at_line(8) == 3);
        CHECK(doc.section_at_line(5) == std::nullopt);
    }

    TEST_CASE("block rules")
    {
        SUBCASE("ATX header interrupts a paragraph")
        {
            auto doc = segment_readme("text\n## Sub\nmore\n");
            CHECK(kinds(doc) == std::vector { SectionKind::paragraph, SectionKind::header, SectionKind::paragraph });
        }
        SUBCASE("setext headers span their underline")
        {
            auto doc = segment_readme("Big Title\n=========\n\nSmall one\n---\n");
            REQUIRE(doc.section_count() == 2);
            CHECK(doc.section(1).header_level == 1);
            CHECK(doc.section(1).lines == LineRange { 1, 2 });
            CHECK(doc.section(1).heading() == "Big Title");
            CHECK(doc.section(2).header_level == 2);
        }
        SUBCASE("tilde fences and unclosed fences")
        {
            auto doc = segment_readme("~~~\na\n\nb\n~~~\n\n```\nnever closed\n\n");
            REQUIRE(doc.section_count() == 2);
            CHECK(doc.section(1).kind == SectionKind::code_block);
            CHECK(doc.section(2).kind == SectionKind::code_block);
            CHECK(doc.section(2).lines == LineRange { 7, 8 });
        }
        SUBCASE("a header inside a fence is code")
        {
            auto doc = segment_readme("```\n# not a header\n```\n");
            CHECK(kinds(doc) == std::vector { SectionKind::code_block });
        }
        SUBCASE("HTML headers are paragraphs")
        {
            auto doc = segment_readme("<h1>Title</h1>\n");
            CHECK(kinds(doc) == std::vector { SectionKind::paragraph });
        }
        SUBCASE("hash without space is text")
        {
            auto doc = segment_readme("#hashtag\n");
            CHECK(kinds(doc) == std::vector { SectionKind::paragraph });
        }
        SUBCASE("closing hashes are stripped from the heading")
        {
            CHECK(segment_readme("## Usage ##\n").section(1).heading() == "Usage");
        }
        SUBCASE("list split by a blank line is two sections")
        {
            auto doc = segment_readme("- a\n- b\n\n- c\n");
            CHECK(kinds(doc) == std::vector { SectionKind::list_block, SectionKind::list_block });
        }
    }

    TEST_CASE("CRLF and trailing whitespace are normalised")
    {
        auto unix = segment_readme("# T\n\npara\n");
        auto dos = segment_readme("# T  \r\n\r\npara\t\r\n");
        REQUIRE(dos.section_count() == unix.section_count());
        for (int i = 1; i <= unix.section_count(); ++i) {
            CHECK(dos.section(i).text == unix.section(i).text);
            CHECK(dos.section(i).lines == unix.section(i).lines);
        }
    }

    TEST_CASE("invalid UTF-8 becomes the replacement character")
    {
        auto doc = segment_readme("caf\xe9 au lait\n");
        REQUIRE(doc.section_count() == 1);
        CHECK(doc.section(1).text == "caf\xef\xbf\xbd au lait");
    }

    TEST_CASE("section lookup errors")
    {
        auto doc = segment_readme("a\n");
        CHECK_THROWS_AS(doc.section(0), std::out_of_range);
        CHECK_THROWS_AS(doc.section(2), std::out_of_range);
        auto tree = build_hierarchy(doc);
        CHECK_THROWS_AS(tree.node_at_level(2, 1), std::out_of_range);
        CHECK_THROWS_AS(tree.node_at_level(1, 0), std::invalid_argument);
        CHECK_THROWS_AS(tree.node_at_level(1, 5), std::invalid_argument);
    }

    TEST_CASE("headerless document keeps everything at the root")
    {
        auto doc = segment_readme("one\n\ntwo\n\n- three\n");
        auto tree = build_hierarchy(doc);
        REQUIRE(tree.nodes().size() == 1);
        CHECK(tree.root().section_indices == std::vector { 1, 2, 3 });
        for (int s = 1; s <= 3; ++s)
            for (int level = 1; level <= 4; ++level)
                CHECK_FALSE(tree.node_at_level(s, level));
    }

    TEST_CASE("strict nesting")
    {
        auto doc = segment_readme("# A\npara1\n## B\npara2\n");
        REQUIRE(doc.section_count() == 4);
        auto tree = build_hierarchy(doc);
        REQUIRE(tree.nodes().size() == 3);
        const auto& a = tree.node(tree.root().children.at(0));
        CHECK(a.level == 1);
        CHECK(a.header_text == "A");
        CHECK(a.section_indices == std::vector { 1, 2 });
        const auto& b = tree.node(a.children.at(0));
        CHECK(b.level == 2);
        CHECK(b.section_indices == std::vector { 3, 4 });
        CHECK(tree.node_at_level(4, 1) == a.id);
        CHECK(tree.node_at_level(4, 2) == b.id);
        CHECK_FALSE(tree.node_at_level(4, 3));
        CHECK(tree.node_at_level(2, 1) == a.id);
        CHECK_FALSE(tree.node_at_level(2, 2));
    }

    TEST_CASE("preamble sections have no node at any level")
    {
        auto doc = segment_readme("intro\n\n# A\n\nbody\n");
        auto tree = build_hierarchy(doc);
        CHECK(tree.owner_of(1) == 0);
        CHECK_FALSE(tree.node_at_level(1, 1));
        CHECK(tree.node_at_level(3, 1).has_value());
    }

    TEST_CASE("skipped levels get synthetic filler nodes")
    {
        auto doc = segment_readme("# A\n### B\n### C\n#### D\n");
        auto tree = build_hierarchy(doc);
        auto b2 = tree.node_at_level(2, 2);
        REQUIRE(b2);
        CHECK(tree.node(*b2).synthetic);
        CHECK(tree.node(*b2).section_indices.empty());
        CHECK(tree.node_at_level(3, 2) == b2);
        CHECK(tree.node_at_level(4, 2) == b2);
        CHECK(tree.node_at_level(4, 3) == tree.owner_of(3));
        CHECK(tree.nodes().size() == oracle::node_count(doc));
    }

    TEST_CASE("level five content merges into the level four node")
    {
        auto doc = segment_readme(oracle::read_file(oracle::fixture("markdown/levels.md")));
        REQUIRE(doc.section_count() == 13);
        CHECK(doc.section(10).header_level == 5);
        auto tree = build_hierarchy(doc);
        CHECK(tree.depth() == 4);
        CHECK(tree.nodes().size() == 6);
        CHECK(tree.nodes().size() == oracle::node_count(doc));
        NodeId four = tree.owner_of(8);
        CHECK(tree.node(four).level == 4);
        CHECK(tree.node(four).section_indices == std::vector { 8, 9, 10, 11 });
        CHECK(tree.owner_of(12) != tree.owner_of(4));
        CHECK(tree.node(tree.owner_of(12)).level == 2);
        CHECK(tree.node_at_level(11, 1) == tree.node_at_level(4, 1));
    }

    TEST_CASE("node_at_level agrees with the path-walk oracle")
    {
        std::mt19937_64 rng(7);
        for (int trial = 0; trial < 200; ++trial) {
            auto doc = segment_readme(oracle::random_outline(rng, 1 + static_cast<int>(rng() % 30)));
            auto tree = build_hierarchy(doc);
            std::map<NodeId, oracle::NodeKey> forward;
            std::map<oracle::NodeKey, NodeId> backward;
            for (int s = 1; s <= doc.section_count(); ++s) {
                for (int level = 1; level <= 4; ++level) {
                    auto got = tree.node_at_level(s, level);
                    auto want = oracle::node_at_level(doc, s, level);
                    REQUIRE(got.has_value() == want.has_value());
                    if (!got)
                        continue;
                    CHECK(tree.node(*got).level == level);
                    auto [f, fresh_f] = forward.emplace(*got, *want);
                    auto [b, fresh_b] = backward.emplace(*want, *got);
                    CHECK(f->second == *want);
                    CHECK(b->second == *got);
                }
            }
            CHECK(tree.nodes().size() == oracle::node_count(doc));
        }
    }

    TEST_CASE("structural properties hold on generated and real documents")
    {
        std::mt19937_64 rng(11);
        for (int trial = 0; trial < 150; ++trial) {
            auto md = oracle::random_markdown(rng);
            INFO(md);
            CHECK(oracle::document_violation(md) == "");
        }
        for (const auto& name : oracle::real_readmes()) {
            INFO(name);
            CHECK(oracle::document_violation(oracle::read_file(oracle::fixture("readmes/" + name))) == "");
        }
    }
}
