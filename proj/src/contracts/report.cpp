#include <bit>
#include <cmath>
#include <fstream>

#include <fmt/core.h>

#include "zlens/contracts.hpp"
#include "zlens/text.hpp"

namespace zlens::contracts {

std::string_view to_string(Rule rule) {
  switch (rule) {
    case Rule::R1RequestScale: return "R1_REQUEST_SCALE";
    case Rule::R2GroupingHotnessMix: return "R2_GROUPING_HOTNESS_MIX";
    case Rule::R3GroupingGcReclass: return "R3_GROUPING_GC_RECLASS";
    case Rule::R4LifetimeSkew: return "R4_LIFETIME_SKEW";
    case Rule::R5LocalityFragmentation: return "R5_LOCALITY_FRAGMENTATION";
  }
  return "?";
}

std::string_view to_string(Severity severity) {
  switch (severity) {
    case Severity::Info: return "INFO";
    case Severity::Warn: return "WARN";
    case Severity::Violation: return "VIOLATION";
  }
  return "?";
}

void validate(const Thresholds& t) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::Config, "threshold " + what); };
  if (!std::has_single_bit(t.large_io_threshold) || t.large_io_threshold < 4096 ||
      t.large_io_threshold > 16 * 1024 * 1024)
    fail(fmt::format("large_io_threshold={} must be a power of two between 4KiB and 16MiB", t.large_io_threshold));
  if (!(t.min_large_fraction >= 0.0 && t.min_large_fraction <= 1.0))
    fail("min_large_fraction must lie in [0, 1]");
  if (!(t.hole_fraction >= 0.0 && t.hole_fraction <= 1.0)) fail("hole_fraction must lie in [0, 1]");
  if (!(t.warn_ratio > 0.0 && t.warn_ratio <= 1.0)) fail("warn_ratio must lie in (0, 1]");
  if (!(t.skew_factor > 0.0) || !std::isfinite(t.skew_factor)) fail("skew_factor must be positive");
  if (t.small_tail_blocks == 0) fail("small_tail_blocks must be positive");
  if (t.sync_epoch_pages == 0) fail("sync_epoch_pages must be positive");
}

Thresholds parse_thresholds(std::istream& in) {
  Thresholds t;
  for (const auto& [key, value] : text::read_key_values(in)) {
    auto need_u64 = [&](auto parse) {
      auto v = parse(value);
      if (!v) throw Error(ErrorCode::Config, fmt::format("threshold {}: bad value '{}'", key, value));
      return *v;
    };
    auto need_double = [&] {
      auto v = text::parse_double(value);
      if (!v) throw Error(ErrorCode::Config, fmt::format("threshold {}: bad value '{}'", key, value));
      return *v;
    };
    if (key == "large_io_threshold") t.large_io_threshold = need_u64(text::parse_size);
    else if (key == "min_large_fraction") t.min_large_fraction = need_double();
    else if (key == "small_tail_blocks") t.small_tail_blocks = need_u64(text::parse_u64);
    else if (key == "sync_epoch_pages") t.sync_epoch_pages = need_u64(text::parse_u64);
    else if (key == "skew_factor") t.skew_factor = need_double();
    else if (key == "frag_threshold") t.frag_threshold = need_u64(text::parse_u64);
    else if (key == "hole_fraction") t.hole_fraction = need_double();
    else if (key == "warn_ratio") t.warn_ratio = need_double();
    else throw Error(ErrorCode::Config, fmt::format("unknown threshold '{}'", key));
  }
  validate(t);
  return t;
}

Thresholds load_thresholds(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open thresholds " + path);
  return parse_thresholds(in);
}

void write_thresholds(std::ostream& out, const Thresholds& t) {
  out << "large_io_threshold=" << t.large_io_threshold << '\n'
      << "min_large_fraction=" << fmt::format("{}", t.min_large_fraction) << '\n'
      << "small_tail_blocks=" << t.small_tail_blocks << '\n'
      << "sync_epoch_pages=" << t.sync_epoch_pages << '\n'
      << "skew_factor=" << fmt::format("{}", t.skew_factor) << '\n'
      << "frag_threshold=" << t.frag_threshold << '\n'
      << "hole_fraction=" << fmt::format("{}", t.hole_fraction) << '\n'
      << "warn_ratio=" << fmt::format("{}", t.warn_ratio) << '\n';
}

void CheckResult::append(CheckResult other) {
  for (auto& r : other.reports) reports.push_back(std::move(r));
  for (auto& n : other.notices) notices.push_back(std::move(n));
}

bool CheckResult::has_violation() const {
  for (const auto& r : reports)
    if (r.severity == Severity::Violation) return true;
  return false;
}

std::size_t CheckResult::count(Rule rule, std::optional<Severity> severity) const {
  std::size_t n = 0;
  for (const auto& r : reports)
    if (r.rule == rule && (!severity || r.severity == *severity)) ++n;
  return n;
}

std::string to_json_line(const ViolationReport& r) {
  nlohmann::ordered_json j;
  j["rule"] = to_string(r.rule);
  j["severity"] = to_string(r.severity);
  j["subject"] = r.subject;
  if (r.pattern) j["pattern"] = *r.pattern;
  if (!r.colocated.empty()) j["colocated"] = r.colocated;
  j["metrics"] = r.metrics;
  j["evidence"] = r.evidence;
  if (r.ts_range) j["ts_range"] = {r.ts_range->first, r.ts_range->second};
  return j.dump();
}

std::string to_json_line(const Notice& n) {
  nlohmann::ordered_json j;
  j["notice"] = n.scope;
  j["message"] = n.message;
  return j.dump();
}

void write_reports(std::ostream& out, const CheckResult& result) {
  for (const auto& r : result.reports) out << to_json_line(r) << '\n';
  for (const auto& n : result.notices) out << to_json_line(n) << '\n';
}

void write_summary(std::ostream& out, const CheckResult& result) {
  std::size_t by_sev[3] = {0, 0, 0};
  for (const auto& r : result.reports) ++by_sev[static_cast<std::size_t>(r.severity)];
  out << fmt::format("{} report(s): {} VIOLATION, {} WARN, {} INFO\n", result.reports.size(), by_sev[2], by_sev[1],
                     by_sev[0]);
  for (const auto& r : result.reports) {
    out << fmt::format("  [{}] {} {}", to_string(r.severity), to_string(r.rule), r.subject);
    if (r.pattern) out << " pattern=" << *r.pattern;
    if (!r.colocated.empty()) {
      out << " colocated=";
      for (std::size_t i = 0; i < r.colocated.size(); ++i) out << (i ? "," : "") << r.colocated[i];
    }
    out << '\n';
    if (!r.evidence.empty()) out << "      " << r.evidence.front() << '\n';
  }
  for (const auto& n : result.notices) out << fmt::format("  note ({}): {}\n", n.scope, n.message);
}

}  // namespace zlens::contracts
