#include <algorithm>
#include <bit>

#include "zlens/text.hpp"
#include "zlens/trace.hpp"

namespace zlens::trace {

std::size_t histogram_bucket(uint64_t len) {
  constexpr uint64_t kMin = 4 * 1024;
  if (len < kMin) return 0;
  std::size_t k = static_cast<std::size_t>(std::bit_width(len / kMin));  // 1 for [4KiB, 8KiB)
  return std::min(k, kHistogramBuckets - 1);
}

uint64_t bucket_floor(std::size_t bucket) { return bucket == 0 ? 0 : (uint64_t{4096} << (bucket - 1)); }

std::string bucket_label(std::size_t bucket) {
  if (bucket == 0) return "<4KiB";
  if (bucket == kHistogramBuckets - 1) return ">=32MiB";
  return text::format_bytes(bucket_floor(bucket));
}

bool ZoneCounters::same_counters(const ZoneCounters& o) const {
  return op_counts == o.op_counts && bytes_written == o.bytes_written && bytes_read == o.bytes_read &&
         reset_count == o.reset_count && size_histogram == o.size_histogram &&
         write_bytes_by_size == o.write_bytes_by_size;
}

void ZoneActivity::merge(const ZoneActivity& other) {
  if (zones.size() < other.zones.size()) zones.resize(other.zones.size());
  for (std::size_t z = 0; z < other.zones.size(); ++z) {
    auto& dst = zones[z];
    const auto& src = other.zones[z];
    for (std::size_t i = 0; i < kOpCount; ++i) dst.op_counts[i] += src.op_counts[i];
    dst.bytes_written += src.bytes_written;
    dst.bytes_read += src.bytes_read;
    dst.reset_count += src.reset_count;
    for (std::size_t b = 0; b < kHistogramBuckets; ++b) {
      dst.size_histogram[b] += src.size_histogram[b];
      dst.write_bytes_by_size[b] += src.write_bytes_by_size[b];
    }
    dst.open_intervals.insert(dst.open_intervals.end(), src.open_intervals.begin(), src.open_intervals.end());
    std::stable_sort(dst.open_intervals.begin(), dst.open_intervals.end(),
                     [](const OpenInterval& a, const OpenInterval& b) { return a.begin_ns < b.begin_ns; });
  }
  for (std::size_t i = 0; i < kOpCount; ++i) unzoned_counts[i] += other.unzoned_counts[i];
  unknown_zone_actions += other.unknown_zone_actions;
}

Histogram ZoneActivity::total_size_histogram() const {
  Histogram h{};
  for (const auto& z : zones)
    for (std::size_t b = 0; b < kHistogramBuckets; ++b) h[b] += z.size_histogram[b];
  return h;
}

Histogram ZoneActivity::total_write_bytes_by_size() const {
  Histogram h{};
  for (const auto& z : zones)
    for (std::size_t b = 0; b < kHistogramBuckets; ++b) h[b] += z.write_bytes_by_size[b];
  return h;
}

uint64_t ZoneActivity::total_bytes_written() const {
  uint64_t n = 0;
  for (const auto& z : zones) n += z.bytes_written;
  return n;
}

std::vector<uint64_t> ZoneActivity::reset_counts() const {
  std::vector<uint64_t> out;
  out.reserve(zones.size());
  for (const auto& z : zones) out.push_back(z.reset_count);
  return out;
}

std::size_t ZoneActivity::max_concurrent_open() const {
  // (time, delta); closes sort before opens at equal time.
  std::vector<std::pair<uint64_t, int>> edges;
  for (const auto& z : zones) {
    for (const auto& iv : z.open_intervals) {
      edges.emplace_back(iv.begin_ns, +1);
      if (iv.end_ns) edges.emplace_back(*iv.end_ns, -1);
    }
  }
  std::sort(edges.begin(), edges.end());
  long cur = 0, best = 0;
  for (auto [t, d] : edges) {
    cur += d;
    best = std::max(best, cur);
  }
  return static_cast<std::size_t>(best);
}

bool ZoneActivity::same_counters(const ZoneActivity& o) const {
  if (zones.size() != o.zones.size() || unzoned_counts != o.unzoned_counts ||
      unknown_zone_actions != o.unknown_zone_actions)
    return false;
  for (std::size_t z = 0; z < zones.size(); ++z)
    if (!zones[z].same_counters(o.zones[z])) return false;
  return true;
}

namespace {

struct IntervalTracker {
  std::optional<uint64_t> open_since;
  uint64_t filled = 0;
};

void count_event(ZoneActivity& act, const TraceEvent& ev) {
  const auto op_index = static_cast<std::size_t>(ev.op);
  if (ev.op == Op::UnknownZoneAction) ++act.unknown_zone_actions;
  if (ev.layer != Layer::Dev || !ev.zone) {
    ++act.unzoned_counts[op_index];
    return;
  }
  auto& z = act.zones.at(*ev.zone);
  ++z.op_counts[op_index];
  if (is_data_op(ev.op)) {
    const uint64_t len = ev.len.value_or(0);
    const std::size_t bucket = histogram_bucket(len);
    ++z.size_histogram[bucket];
    if (ev.op == Op::Read) {
      z.bytes_read += len;
    } else {
      z.bytes_written += len;
      z.write_bytes_by_size[bucket] += len;
    }
  } else if (ev.op == Op::Reset) {
    ++z.reset_count;
  }
}

}  // namespace

ZoneActivity aggregate(std::span<const TraceEvent> events, const zns::ZoneGeometry& geometry) {
  ZoneActivity act;
  act.zones.resize(geometry.nr_zones);
  std::vector<IntervalTracker> trackers(geometry.nr_zones);

  for (const auto& ev : events) {
    count_event(act, ev);
    if (ev.layer != Layer::Dev || !ev.zone) continue;

    auto& tr = trackers[*ev.zone];
    auto& intervals = act.zones[*ev.zone].open_intervals;
    auto close_interval = [&](Op why) {
      if (tr.open_since) intervals.push_back({*tr.open_since, ev.ts_ns, why});
      tr.open_since.reset();
    };
    switch (ev.op) {
      case Op::Open:
        if (!tr.open_since) tr.open_since = ev.ts_ns;
        break;
      case Op::Write:
      case Op::Append:
        if (!tr.open_since) tr.open_since = ev.ts_ns;
        tr.filled += ev.len.value_or(0);
        if (tr.filled >= geometry.zone_capacity) close_interval(ev.op);
        break;
      case Op::Finish:
        close_interval(Op::Finish);
        tr.filled = geometry.zone_capacity;
        break;
      case Op::Reset:
        close_interval(Op::Reset);
        tr.filled = 0;
        break;
      default:
        break;
    }
  }
  for (std::size_t z = 0; z < trackers.size(); ++z)
    if (trackers[z].open_since) act.zones[z].open_intervals.push_back({*trackers[z].open_since, std::nullopt, Op::Reset});
  return act;
}

std::map<uint64_t, ZoneActivity> aggregate_windows(std::span<const TraceEvent> events,
                                                   const zns::ZoneGeometry& geometry, uint64_t window_ns) {
  std::map<uint64_t, ZoneActivity> windows;
  if (window_ns == 0) return windows;
  std::size_t begin = 0;
  while (begin < events.size()) {
    const uint64_t w = events[begin].ts_ns / window_ns;
    std::size_t end = begin;
    while (end < events.size() && events[end].ts_ns / window_ns == w) ++end;
    windows[w].merge(aggregate(events.subspan(begin, end - begin), geometry));
    begin = end;
  }
  return windows;
}

void write_zone_csv(std::ostream& out, const ZoneActivity& act) {
  out << "zone,reads,writes,appends,resets,opens,closes,finishes,offlines,unknown_actions,bytes_written,bytes_read\n";
  for (std::size_t z = 0; z < act.zones.size(); ++z) {
    const auto& c = act.zones[z];
    out << z << ',' << c.count(Op::Read) << ',' << c.count(Op::Write) << ',' << c.count(Op::Append) << ','
        << c.reset_count << ',' << c.count(Op::Open) << ',' << c.count(Op::Close) << ',' << c.count(Op::Finish) << ','
        << c.count(Op::Offline) << ',' << c.count(Op::UnknownZoneAction) << ',' << c.bytes_written << ','
        << c.bytes_read << '\n';
  }
}

void write_histogram_csv(std::ostream& out, const ZoneActivity& act) {
  auto counts = act.total_size_histogram();
  auto wbytes = act.total_write_bytes_by_size();
  out << "bucket,floor_bytes,count,write_bytes\n";
  for (std::size_t b = 0; b < kHistogramBuckets; ++b)
    out << bucket_label(b) << ',' << bucket_floor(b) << ',' << counts[b] << ',' << wbytes[b] << '\n';
}

void write_window_csv(std::ostream& out, const std::map<uint64_t, ZoneActivity>& windows) {
  out << "window,zone,reads,writes,appends,resets,bytes_written,bytes_read\n";
  for (const auto& [w, act] : windows) {
    for (std::size_t z = 0; z < act.zones.size(); ++z) {
      const auto& c = act.zones[z];
      uint64_t total = 0;
      for (auto n : c.op_counts) total += n;
      if (total == 0) continue;
      out << w << ',' << z << ',' << c.count(Op::Read) << ',' << c.count(Op::Write) << ',' << c.count(Op::Append)
          << ',' << c.reset_count << ',' << c.bytes_written << ',' << c.bytes_read << '\n';
    }
  }
}

}  // namespace zlens::trace
