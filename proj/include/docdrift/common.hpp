#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace docdrift {

using Timestamp = std::chrono::sys_seconds;
using Clock = std::function<Timestamp()>;

Timestamp system_now();

/// Parses an RFC 3339 timestamp. Offsets other than UTC are folded into UTC;
/// fractional seconds are discarded. Throws std::invalid_argument.
Timestamp parse_rfc3339(std::string_view text);
std::string format_rfc3339(Timestamp ts);

std::uint64_t fnv1a64(std::string_view data);
std::string to_hex(std::uint64_t value);

std::string to_lower(std::string_view s);
bool contains_ci(std::string_view haystack, std::string_view needle);
std::string_view trim(std::string_view s);
std::string_view trim_right(std::string_view s);
bool is_blank(std::string_view s);

/// Splits on '\n'. A trailing newline does not produce an extra empty line.
std::vector<std::string> split_lines(std::string_view text);

/// Replaces every invalid UTF-8 sequence with U+FFFD.
std::string sanitize_utf8(std::string_view text);

/// Number of code points, counting each UTF-8 lead byte (or stray byte) once.
std::size_t utf8_length(std::string_view text);

/// Longest prefix holding at most `max_chars` code points. Never splits a
/// multi-byte sequence.
std::string_view utf8_prefix(std::string_view text, std::size_t max_chars);

/// Base error for everything the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace docdrift
