#include "docdrift/common.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>

namespace docdrift {

Timestamp system_now()
{
    return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
}

namespace {

int parse_fixed(std::string_view text, std::size_t pos, std::size_t width)
{
    if (pos + width > text.size())
        throw std::invalid_argument("timestamp too short: " + std::string(text));
    int value = 0;
    auto first = text.data() + pos;
    auto [ptr, ec] = std::from_chars(first, first + width, value);
    if (ec != std::errc() || ptr != first + width)
        throw std::invalid_argument("bad timestamp digits: " + std::string(text));
    return value;
}

void expect_char(std::string_view text, std::size_t pos, std::string_view allowed)
{
    if (pos >= text.size() || allowed.find(text[pos]) == std::string_view::npos)
        throw std::invalid_argument("malformed timestamp: " + std::string(text));
}

} // namespace

Timestamp parse_rfc3339(std::string_view text)
{
    using namespace std::chrono;
    // YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM)
    int y = parse_fixed(text, 0, 4);
    expect_char(text, 4, "-");
    int mo = parse_fixed(text, 5, 2);
    expect_char(text, 7, "-");
    int d = parse_fixed(text, 8, 2);
    expect_char(text, 10, "Tt ");
    int h = parse_fixed(text, 11, 2);
    expect_char(text, 13, ":");
    int mi = parse_fixed(text, 14, 2);
    expect_char(text, 16, ":");
    int s = parse_fixed(text, 17, 2);
    std::size_t pos = 19;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])))
            ++pos;
    }
    int offset_minutes = 0;
    if (pos >= text.size())
        throw std::invalid_argument("timestamp missing zone: " + std::string(text));
    if (text[pos] == 'Z' || text[pos] == 'z') {
        ++pos;
    } else if (text[pos] == '+' || text[pos] == '-') {
        int sign = text[pos] == '-' ? -1 : 1;
        int oh = parse_fixed(text, pos + 1, 2);
        expect_char(text, pos + 3, ":");
        int om = parse_fixed(text, pos + 4, 2);
        offset_minutes = sign * (oh * 60 + om);
        pos += 6;
    } else {
        throw std::invalid_argument("malformed timestamp zone: " + std::string(text));
    }
    if (pos != text.size())
        throw std::invalid_argument("trailing characters in timestamp: " + std::string(text));

    year_month_day ymd { year { y }, month { static_cast<unsigned>(mo) }, day { static_cast<unsigned>(d) } };
    if (!ymd.ok() || h > 23 || mi > 59 || s > 60)
        throw std::invalid_argument("timestamp out of range: " + std::string(text));
    auto tp = sys_days { ymd } + hours { h } + minutes { mi } + seconds { s };
    return tp - minutes { offset_minutes };
}

std::string format_rfc3339(Timestamp ts)
{
    using namespace std::chrono;
    auto day_point = floor<days>(ts);
    year_month_day ymd { day_point };
    hh_mm_ss hms { ts - day_point };
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
        static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
        static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
        static_cast<long>(hms.seconds().count()));
    return buf;
}

std::uint64_t fnv1a64(std::string_view data)
{
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string to_hex(std::uint64_t value)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string to_lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
        [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool contains_ci(std::string_view haystack, std::string_view needle)
{
    return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

std::string_view trim(std::string_view s)
{
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && is_space(s.front()))
        s.remove_prefix(1);
    while (!s.empty() && is_space(s.back()))
        s.remove_suffix(1);
    return s;
}

std::string_view trim_right(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

bool is_blank(std::string_view s)
{
    return trim(s).empty();
}

std::vector<std::string> split_lines(std::string_view text)
{
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.emplace_back(text.substr(start));
            break;
        }
        lines.emplace_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

std::string sanitize_utf8(std::string_view text)
{
    static constexpr std::string_view replacement = "\xEF\xBF\xBD";
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    const std::size_t n = text.size();
    auto byte = [&](std::size_t k) { return static_cast<unsigned char>(text[k]); };
    while (i < n) {
        unsigned char c = byte(i);
        if (c < 0x80) {
            out.push_back(static_cast<char>(c));
            ++i;
            continue;
        }
        // Well-formed sequences per lead byte: total length and the allowed
        // range of the second byte. Later bytes are always 80..BF.
        std::size_t len = 0;
        unsigned char lo = 0x80;
        unsigned char hi = 0xBF;
        if (c >= 0xC2 && c <= 0xDF) {
            len = 2;
        } else if (c >= 0xE0 && c <= 0xEF) {
            len = 3;
            if (c == 0xE0)
                lo = 0xA0;
            else if (c == 0xED)
                hi = 0x9F;
        } else if (c >= 0xF0 && c <= 0xF4) {
            len = 4;
            if (c == 0xF0)
                lo = 0x90;
            else if (c == 0xF4)
                hi = 0x8F;
        } else {
            out += replacement;
            ++i;
            continue;
        }
        // Consume the longest valid prefix; an incomplete one becomes a
        // single replacement character.
        std::size_t k = 1;
        while (k < len && i + k < n) {
            unsigned char b = byte(i + k);
            bool in_range = k == 1 ? (b >= lo && b <= hi) : (b >= 0x80 && b <= 0xBF);
            if (!in_range)
                break;
            ++k;
        }
        if (k == len)
            out.append(text.substr(i, len));
        else
            out += replacement;
        i += k;
    }
    return out;
}

std::size_t utf8_length(std::string_view text)
{
    std::size_t n = 0;
    for (unsigned char c : text)
        if ((c & 0xC0) != 0x80)
            ++n;
    return n;
}

std::string_view utf8_prefix(std::string_view text, std::size_t max_chars)
{
    std::size_t seen = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if ((static_cast<unsigned char>(text[i]) & 0xC0) == 0x80)
            continue;
        if (seen == max_chars)
            return text.substr(0, i);
        ++seen;
    }
    return text;
}

} // namespace docdrift
