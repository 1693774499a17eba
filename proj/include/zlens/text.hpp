#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace zlens::text {

/// Splits on runs of ASCII whitespace.
std::vector<std::string_view> split_ws(std::string_view line);

std::vector<std::string> split(std::string_view s, char sep);

std::string_view trim(std::string_view s);

/// Accepts decimal or 0x-prefixed hex. Returns nullopt on junk or overflow.
std::optional<uint64_t> parse_u64(std::string_view token);

/// parse_u64 plus an optional B/KiB/MiB/GiB suffix ("64MiB").
std::optional<uint64_t> parse_size(std::string_view token);

std::optional<double> parse_double(std::string_view token);

/// Reads `key=value` lines. Blank lines and `#` comments are skipped;
/// a repeated key or a line without '=' is a ParseError.
std::map<std::string, std::string> read_key_values(std::istream& in);

/// Human-readable byte count ("4KiB", "64MiB", "1536B").
std::string format_bytes(uint64_t bytes);

}  // namespace zlens::text
