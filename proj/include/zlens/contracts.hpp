#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "zlens/extent_map.hpp"
#include "zlens/f2fs.hpp"
#include "zlens/snapshot.hpp"
#include "zlens/trace.hpp"
#include "zlens/zone_model.hpp"

namespace zlens::contracts {

enum class Rule : uint8_t {
  R1RequestScale,
  R2GroupingHotnessMix,
  R3GroupingGcReclass,
  R4LifetimeSkew,
  R5LocalityFragmentation,
};

enum class Severity : uint8_t { Info, Warn, Violation };

std::string_view to_string(Rule rule);
std::string_view to_string(Severity severity);

/// Checker configuration. Only the 16-page sync threshold has an external
/// source (F2FS); the other defaults are ours.
struct Thresholds {
  uint64_t large_io_threshold = 128 * 1024;  // power of two, 4KiB..16MiB
  double min_large_fraction = 0.5;
  uint64_t small_tail_blocks = 16;
  uint64_t sync_epoch_pages = 16;
  double skew_factor = 5.0;
  uint64_t frag_threshold = 8;
  double hole_fraction = 0.10;
  double warn_ratio = 0.8;  // WARN band starts at this fraction of a limit

  bool operator==(const Thresholds&) const = default;
};

/// key=value file; missing keys keep their defaults, unknown keys and
/// out-of-range values throw Error(Config).
Thresholds parse_thresholds(std::istream& in);
Thresholds load_thresholds(const std::string& path);
void write_thresholds(std::ostream& out, const Thresholds& t);
void validate(const Thresholds& t);

struct ViolationReport {
  Rule rule = Rule::R1RequestScale;
  Severity severity = Severity::Info;
  std::string subject;                      // "device", "file <id>", "zone <n>", "segment <n>"
  std::optional<std::string> pattern;       // R2: FOOTER
  std::vector<std::string> colocated;       // R3 co-location: files sharing the segment
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  std::vector<std::string> evidence;        // citations of concrete input records
  std::optional<std::pair<uint64_t, uint64_t>> ts_range;
};

/// Input-availability remark that is not itself a finding.
struct Notice {
  std::string scope;  // rule id or "input"
  std::string message;
};

struct CheckResult {
  std::vector<ViolationReport> reports;
  std::vector<Notice> notices;

  void append(CheckResult other);
  bool has_violation() const;
  std::size_t count(Rule rule, std::optional<Severity> severity = std::nullopt) const;
};

/// R1: fraction of written bytes carried by requests >= large_io_threshold.
/// Events, when given, supply citations of individual small writes.
CheckResult check_request_scale(const trace::ZoneActivity& activity, const Thresholds& t,
                                std::span<const trace::TraceEvent> events = {});

/// R2: files whose extents span two or more hotness classes. A lone
/// trailing minority slice of at most small_tail_blocks is annotated
/// FOOTER when the trace shows it was written in its own sync epoch.
CheckResult check_grouping(const f2fs::SegmapReport& segmap, bool have_segments, const Thresholds& t,
                           std::optional<std::span<const trace::TraceEvent>> events = std::nullopt);

/// R3: slices moved between consecutive snapshots whose hotness became
/// COLD_*; plus co-location of previously differently classified files.
CheckResult check_gc_reclassification(const SnapshotSeries& series, const zns::ZoneGeometry& geometry,
                                      const Thresholds& t);

/// R4: zones whose reset count exceeds skew_factor x the median over
/// zones reset at least once.
CheckResult check_lifetime(const trace::ZoneActivity& activity, const Thresholds& t);

/// R5: physical discontinuities and logical hole fraction per file.
CheckResult check_locality(const extent::FileMaps& maps, const zns::ZoneGeometry& geometry, const Thresholds& t);

/// Median of the sample (mean of the two middle values when even).
double median(std::vector<uint64_t> values);

std::string to_json_line(const ViolationReport& report);
std::string to_json_line(const Notice& notice);
/// One JSON line per report, then one per notice.
void write_reports(std::ostream& out, const CheckResult& result);
void write_summary(std::ostream& out, const CheckResult& result);

}  // namespace zlens::contracts
