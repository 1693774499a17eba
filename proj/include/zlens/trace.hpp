#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zlens/trace_event.hpp"
#include "zlens/zone_model.hpp"

namespace zlens::trace {

// ---------------------------------------------------------------------------
// Canonical trace format
//
// One JSON object per line with the fields ts_ns, layer, op, addr, len, zone
// and attrs (string -> string). Fields that do not apply are omitted. Lines
// that are blank or start with '#' are ignored.
//
// Raw kernel records may carry op tokens such as REQ_OP_ZONE_RESET or
// DRV_OUT; those are decoded through classify_passthrough() during ingest,
// with the zone-send action taken from attrs["zsa"].
// ---------------------------------------------------------------------------

struct IngestOptions {
  uint64_t skew_tolerance_ns = 1'000'000;
};

std::vector<TraceEvent> ingest(std::istream& in, const zns::ZoneGeometry& geometry, const IngestOptions& options = {});

std::string to_json_line(const TraceEvent& event);
void write_trace(std::ostream& out, std::span<const TraceEvent> events);

/// NVMe Zone Send Action codes.
enum class ZoneSendAction : uint8_t {
  Close = 0x01,
  Finish = 0x02,
  Open = 0x03,
  Reset = 0x04,
  Offline = 0x05,
};

/// Maps a raw driver op token (plus the zone-send action for passthrough
/// DRV_OUT records) to a canonical op. Unknown action codes yield
/// UnknownZoneAction; an unknown op token yields nullopt.
std::optional<Op> classify_passthrough(std::string_view raw_op, std::optional<std::string_view> action = std::nullopt);

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

/// log2 buckets 4KiB .. 16MiB, plus underflow (< 4KiB) and overflow (>= 32MiB).
/// Bucket k (1 <= k <= 13) holds sizes in [4KiB * 2^(k-1), 4KiB * 2^k).
inline constexpr std::size_t kHistogramBuckets = 15;
std::size_t histogram_bucket(uint64_t len);
/// Lower bound of a bucket in bytes (0 for underflow).
uint64_t bucket_floor(std::size_t bucket);
std::string bucket_label(std::size_t bucket);

using Histogram = std::array<uint64_t, kHistogramBuckets>;

struct OpenInterval {
  uint64_t begin_ns = 0;
  std::optional<uint64_t> end_ns;  // nullopt: still open at end of trace
  Op end_op = Op::Reset;

  bool operator==(const OpenInterval&) const = default;
};

struct ZoneCounters {
  std::array<uint64_t, kOpCount> op_counts{};
  uint64_t bytes_written = 0;
  uint64_t bytes_read = 0;
  uint64_t reset_count = 0;
  Histogram size_histogram{};       // counts of data ops by size
  Histogram write_bytes_by_size{};  // write+append bytes by request size
  std::vector<OpenInterval> open_intervals;

  uint64_t count(Op op) const { return op_counts[static_cast<std::size_t>(op)]; }
  bool same_counters(const ZoneCounters& other) const;
  bool operator==(const ZoneCounters&) const = default;
};

struct ZoneActivity {
  std::vector<ZoneCounters> zones;
  std::array<uint64_t, kOpCount> unzoned_counts{};  // APP/FS events
  uint64_t unknown_zone_actions = 0;

  /// Folds another partial aggregate in. Counters add; open-interval lists
  /// are concatenated and re-sorted by begin time.
  void merge(const ZoneActivity& other);

  Histogram total_size_histogram() const;
  Histogram total_write_bytes_by_size() const;
  uint64_t total_bytes_written() const;
  std::vector<uint64_t> reset_counts() const;
  std::size_t max_concurrent_open() const;

  bool same_counters(const ZoneActivity& other) const;
};

/// Pure fold over the events. Open intervals are derived from the event
/// order, so they are only meaningful when `events` is a complete, ordered
/// stream.
ZoneActivity aggregate(std::span<const TraceEvent> events, const zns::ZoneGeometry& geometry);

/// Per-window aggregates keyed by floor(ts_ns / window_ns).
std::map<uint64_t, ZoneActivity> aggregate_windows(std::span<const TraceEvent> events,
                                                   const zns::ZoneGeometry& geometry, uint64_t window_ns);

void write_zone_csv(std::ostream& out, const ZoneActivity& activity);
void write_histogram_csv(std::ostream& out, const ZoneActivity& activity);
void write_window_csv(std::ostream& out, const std::map<uint64_t, ZoneActivity>& windows);

}  // namespace zlens::trace
