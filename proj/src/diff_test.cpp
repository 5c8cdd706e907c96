#include "docdrift/diff.hpp"
#include "docdrift/readme.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace docdrift;

namespace {

std::string before_md()
{
    return oracle::read_file(oracle::fixture("diff/before.md"));
}

std::string after_md()
{
    return oracle::read_file(oracle::fixture("diff/after.md"));
}

std::string expected_diff()
{
    return oracle::read_file(oracle::fixture("diff/expected.diff"));
}

} // namespace

TEST_SUITE("diff")
{
    TEST_CASE("empty patch has no hunks")
    {
        CHECK(parse_unified_diff("").empty());
    }

    TEST_CASE("single hunk counts")
    {
        auto hunks = parse_unified_diff("@@ -1,2 +1,3 @@\n ctx\n-old\n+new\n+new2\n");
        REQUIRE(hunks.size() == 1);
        CHECK(hunks[0].old_start == 1);
        CHECK(hunks[0].old_len == 2);
        CHECK(hunks[0].new_len == 3);
        REQUIRE(hunks[0].lines.size() == 4);
        CHECK(hunks[0].lines[1] == DiffLine { LineMarker::removed, "old" });
        CHECK(hunks[0].lines[3] == DiffLine { LineMarker::added, "new2" });
    }

    TEST_CASE("omitted lengths default to one and headers are skipped")
    {
        auto hunks = parse_unified_diff("diff --git a/R b/R\nindex 1..2 100644\n--- a/R\n+++ b/R\n@@ -3 +3 @@ tail\n-x\n+y\n"
                                        "\\ No newline at end of file\n");
        REQUIRE(hunks.size() == 1);
        CHECK(hunks[0].old_start == 3);
        CHECK(hunks[0].old_len == 1);
        CHECK(hunks[0].new_len == 1);
    }

    TEST_CASE("malformed patches report the line")
    {
        auto line_of = [](const char* text) {
            try {
                parse_unified_diff(text);
            } catch (const DiffParseError& e) {
                return e.line();
            }
            return 0;
        };
        CHECK(line_of("--- a\n+++ b\n@@ -x +1 @@\n") == 3);
        CHECK(line_of("@@ -1,2 +1,2 @@\n a\n") == 1);
        CHECK(line_of("@@ -1,1 +1,1 @@\n?bad\n") == 2);
        CHECK(line_of("@@ -1,1 +1,1 @@\n-a\n-b\n") == 3);
    }

    TEST_CASE("hunk boundaries agree with GNU diff on the fixture")
    {
        auto reference = parse_unified_diff(expected_diff());
        REQUIRE(reference.size() == 3);
        auto ours = diff_lines(before_md(), after_md());
        REQUIRE(ours.size() == reference.size());
        for (std::size_t i = 0; i < ours.size(); ++i) {
            CHECK(ours[i].old_start == reference[i].old_start);
            CHECK(ours[i].old_len == reference[i].old_len);
            CHECK(ours[i].new_start == reference[i].new_start);
            CHECK(ours[i].new_len == reference[i].new_len);
            CHECK(ours[i].lines == reference[i].lines);
        }
        CHECK(render_unified_diff(ours) == expected_diff());
    }

    TEST_CASE("apply then re-diff reproduces the hunk structure")
    {
        auto hunks = parse_unified_diff(expected_diff());
        auto applied = apply_hunks(before_md(), hunks);
        CHECK(applied == after_md());
        CHECK(diff_lines(before_md(), applied) == hunks);
    }

    TEST_CASE("apply rejects a mismatching hunk")
    {
        auto hunks = parse_unified_diff("@@ -1,1 +1,1 @@\n-nothing like this\n+x\n");
        CHECK_THROWS_AS(apply_hunks("line one\n", hunks), PatchApplyError);
        auto past = parse_unified_diff("@@ -9,1 +9,1 @@\n-a\n+b\n");
        CHECK_THROWS_AS(apply_hunks("a\n", past), PatchApplyError);
    }

    TEST_CASE("apply ignores trailing whitespace differences")
    {
        auto hunks = parse_unified_diff("@@ -1,1 +1,1 @@\n-a\n+b\n");
        CHECK(apply_hunks("a   \n", hunks) == "b\n");
    }

    TEST_CASE("diff_lines handles edge shapes")
    {
        CHECK(diff_lines("same\n", "same\n").empty());
        auto from_empty = diff_lines("", "a\nb\n");
        REQUIRE(from_empty.size() == 1);
        CHECK(from_empty[0].old_start == 0);
        CHECK(from_empty[0].old_len == 0);
        CHECK(render_unified_diff(from_empty) == "@@ -0,0 +1,2 @@\n+a\n+b\n");
        auto to_empty = diff_lines("a\n", "");
        CHECK(render_unified_diff(to_empty) == "@@ -1 +0,0 @@\n-a\n");
    }

    TEST_CASE("random round trips")
    {
        std::mt19937_64 rng(5);
        std::uniform_int_distribution<int> len(0, 25);
        std::uniform_int_distribution<int> tok(0, 5);
        for (int trial = 0; trial < 300; ++trial) {
            std::string a;
            std::string b;
            for (int i = len(rng); i > 0; --i)
                a += "l" + std::to_string(tok(rng)) + "\n";
            for (int i = len(rng); i > 0; --i)
                b += "l" + std::to_string(tok(rng)) + "\n";
            auto hunks = diff_lines(a, b, 1 + trial % 3);
            CHECK(apply_hunks(a, hunks) == b);
            CHECK(parse_unified_diff(render_unified_diff(hunks)) == hunks);
        }
    }

    TEST_CASE("ground truth: edit inside section 3")
    {
        const std::string before = "# T\n\nintro\n\nthird section\nsecond line\n\nlast\n";
        CHECK(ground_truth_indices(before, "@@ -6,1 +6,1 @@\n-second line\n+changed line\n") == std::set { 3 });
    }

    TEST_CASE("ground truth: appending at end of file anchors on the last section")
    {
        const std::string before = "# T\n\nintro\n\nlast\n";
        CHECK(ground_truth_indices(before, "@@ -5,0 +6,2 @@\n+\n+appended\n") == std::set { 3 });
    }

    TEST_CASE("ground truth: insertion before any content maps to section 1")
    {
        const std::string before = "# T\n\nbody\n";
        CHECK(ground_truth_indices(before, "@@ -0,0 +1,2 @@\n+badge\n+\n") == std::set { 1 });
    }

    TEST_CASE("ground truth: insertion anchors on the preceding non-blank line")
    {
        const std::string before = "# T\n\nfirst\n\nsecond\n";
        // Inserted between the blank line 4 and "second": anchors on "first".
        CHECK(ground_truth_indices(before, "@@ -3,2 +3,4 @@\n first\n \n+new para\n+\n") == std::set { 2 });
    }

    TEST_CASE("ground truth: fixture patch matches the hand mapping")
    {
        // before.md sections: 2 = intro paragraph (lines 3-4), 7 = usage
        // paragraph (16-17), 10 = configuration table (23-25).
        auto doc = segment_readme(before_md());
        REQUIRE(doc.section_count() == 12);
        CHECK(doc.section(2).lines == LineRange { 3, 4 });
        CHECK(doc.section(7).lines == LineRange { 16, 17 });
        CHECK(doc.section(10).lines == LineRange { 23, 25 });
        CHECK(ground_truth_indices(before_md(), expected_diff()) == std::set { 2, 7, 10 });
    }

    TEST_CASE("ground truth is invariant under hunk order")
    {
        auto hunks = parse_unified_diff(expected_diff());
        auto doc = segment_readme(before_md());
        auto expected = ground_truth_indices(doc, hunks);
        std::mt19937_64 rng(3);
        for (int i = 0; i < 10; ++i) {
            std::shuffle(hunks.begin(), hunks.end(), rng);
            CHECK(ground_truth_indices(doc, hunks) == expected);
            CHECK(apply_hunks(before_md(), hunks) == after_md());
        }
    }

    TEST_CASE("ground truth indices stay within the document")
    {
        std::mt19937_64 rng(9);
        for (int trial = 0; trial < 200; ++trial) {
            auto a = oracle::random_markdown(rng);
            auto b = oracle::random_markdown(rng);
            auto clean_a = sanitize_utf8(a);
            auto hunks = diff_lines(clean_a, sanitize_utf8(b));
            auto doc = segment_readme(clean_a);
            for (int s : ground_truth_indices(doc, hunks))
                CHECK((s >= 1 && s <= std::max(1, doc.section_count())));
        }
    }

    TEST_CASE("unapplicable README patch is an error")
    {
        CHECK_THROWS_AS(ground_truth_indices("a\n", "@@ -1,1 +1,1 @@\n-b\n+c\n"), PatchApplyError);
    }
}
