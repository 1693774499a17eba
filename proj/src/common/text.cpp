#include "zlens/text.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <utility>

#include "zlens/error.hpp"

namespace zlens {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse: return "PARSE";
    case ErrorCode::Range: return "RANGE";
    case ErrorCode::Integrity: return "INTEGRITY";
    case ErrorCode::Unsupported: return "UNSUPPORTED";
    case ErrorCode::Io: return "IO";
    case ErrorCode::UnalignedWrite: return "UNALIGNED_WRITE";
    case ErrorCode::ZoneBoundary: return "ZONE_BOUNDARY";
    case ErrorCode::ZoneInaccessible: return "ZONE_INACCESSIBLE";
    case ErrorCode::TooManyOpen: return "TOO_MANY_OPEN";
    case ErrorCode::InvalidTransition: return "INVALID_TRANSITION";
    case ErrorCode::NotF2fs: return "NOT_F2FS";
    case ErrorCode::NoCheckpoint: return "NO_CHECKPOINT";
    case ErrorCode::Unallocated: return "UNALLOCATED";
    case ErrorCode::Config: return "CONFIG";
  }
  return "UNKNOWN";
}

}  // namespace zlens

namespace zlens::text {

namespace {
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
}  // namespace

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::optional<uint64_t> parse_u64(std::string_view token) {
  int base = 10;
  if (token.size() > 2 && token[0] == '0' && (token[1] == 'x' || token[1] == 'X')) {
    token.remove_prefix(2);
    base = 16;
  }
  if (token.empty()) return std::nullopt;
  uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value, base);
  if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

std::optional<uint64_t> parse_size(std::string_view token) {
  static constexpr std::pair<std::string_view, uint64_t> kSuffixes[] = {
      {"KiB", 1ULL << 10}, {"MiB", 1ULL << 20}, {"GiB", 1ULL << 30}, {"TiB", 1ULL << 40}, {"B", 1}};
  if (token.starts_with("0x") || token.starts_with("0X")) return parse_u64(token);
  for (auto [suffix, mult] : kSuffixes) {
    if (token.size() > suffix.size() && token.ends_with(suffix)) {
      auto v = parse_u64(token.substr(0, token.size() - suffix.size()));
      if (!v || *v > UINT64_MAX / mult) return std::nullopt;
      return *v * mult;
    }
  }
  return parse_u64(token);
}

std::optional<double> parse_double(std::string_view token) {
  if (token.empty()) return std::nullopt;
  std::string buf(token);
  char* end = nullptr;
  double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size()) return std::nullopt;
  return v;
}

std::map<std::string, std::string> read_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    auto eq = sv.find('=');
    if (eq == std::string_view::npos) throw ParseError(lineno, "expected key=value");
    std::string key(trim(sv.substr(0, eq)));
    std::string value(trim(sv.substr(eq + 1)));
    if (key.empty()) throw ParseError(lineno, "empty key");
    if (!kv.emplace(key, value).second) throw ParseError(lineno, "duplicate key '" + key + "'");
  }
  return kv;
}

std::string format_bytes(uint64_t bytes) {
  static constexpr const char* kUnits[] = {"B", "KiB", "MiB", "GiB", "TiB"};
  int unit = 0;
  uint64_t v = bytes;
  while (unit < 4 && v >= 1024 && v % 1024 == 0) {
    v /= 1024;
    ++unit;
  }
  return std::to_string(v) + kUnits[unit];
}

}  // namespace zlens::text
