#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/core.h>

#include "zlens/contracts.hpp"
#include "zlens/text.hpp"

namespace zlens::contracts {

using trace::Layer;
using trace::Op;
using trace::TraceEvent;

namespace {

constexpr std::size_t kMaxCitations = 3;
constexpr uint64_t kPage = 4096;

std::string cite(const TraceEvent& ev) {
  std::string s = fmt::format("event ts={} {} {}", ev.ts_ns, trace::to_string(ev.layer), trace::to_string(ev.op));
  if (ev.zone) s += fmt::format(" zone={}", *ev.zone);
  if (ev.addr) s += fmt::format(" addr={:#x}", *ev.addr);
  if (ev.len) s += fmt::format(" len={}", *ev.len);
  for (const auto& [k, v] : ev.attrs) s += fmt::format(" {}={}", k, v);
  return s;
}

std::string cite(const extent::Extent& e) {
  return fmt::format("extent {} logical={} physical={:#x} len={}", e.file_id, e.logical_offset, e.physical_start,
                     e.length);
}

std::string cite(const f2fs::SegmentSlice& s) {
  return fmt::format("slice {} logical={} physical={:#x} len={} segment={} zone={} hotness={}", s.file_id,
                     s.logical_offset, s.physical_start, s.length, s.segment, s.zone,
                     s.hotness ? f2fs::to_string(*s.hotness) : "UNKNOWN");
}

// Severity of `value` against an upper limit: above the limit is a
// violation, above warn_ratio x limit a warning.
std::optional<Severity> grade_above(double value, double limit, double warn_ratio) {
  if (value > limit) return Severity::Violation;
  if (value > warn_ratio * limit) return Severity::Warn;
  return std::nullopt;
}

std::string zone_ranges(const std::vector<uint64_t>& zones) {
  std::string out;
  for (std::size_t i = 0; i < zones.size();) {
    std::size_t j = i;
    while (j + 1 < zones.size() && zones[j + 1] == zones[j] + 1) ++j;
    if (!out.empty()) out += ',';
    out += j == i ? std::to_string(zones[i]) : fmt::format("{}-{}", zones[i], zones[j]);
    i = j + 1;
  }
  return out;
}

}  // namespace

double median(std::vector<uint64_t> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  if (n % 2 == 1) return static_cast<double>(values[n / 2]);
  return (static_cast<double>(values[n / 2 - 1]) + static_cast<double>(values[n / 2])) / 2.0;
}

// ---------------------------------------------------------------------------
// R1
// ---------------------------------------------------------------------------

CheckResult check_request_scale(const trace::ZoneActivity& activity, const Thresholds& t,
                                std::span<const TraceEvent> events) {
  CheckResult result;
  const auto hist = activity.total_write_bytes_by_size();
  uint64_t total = 0, large = 0;
  for (std::size_t b = 0; b < hist.size(); ++b) {
    total += hist[b];
    if (trace::bucket_floor(b) >= t.large_io_threshold) large += hist[b];
  }
  if (total == 0) {
    result.notices.push_back({std::string(to_string(Rule::R1RequestScale)), "no write activity"});
    return result;
  }
  const double fraction = static_cast<double>(large) / static_cast<double>(total);
  if (fraction >= t.min_large_fraction) return result;

  ViolationReport r;
  r.rule = Rule::R1RequestScale;
  r.severity = fraction < t.warn_ratio * t.min_large_fraction ? Severity::Violation : Severity::Warn;
  r.subject = "device";
  r.metrics["large_fraction"] = fraction;
  r.metrics["large_io_threshold"] = t.large_io_threshold;
  r.metrics["bytes_written"] = total;
  r.metrics["large_bytes"] = large;
  auto& h = r.metrics["write_bytes_by_size"] = nlohmann::ordered_json::object();
  for (std::size_t b = 0; b < hist.size(); ++b)
    if (hist[b]) h[trace::bucket_label(b)] = hist[b];

  std::optional<std::pair<uint64_t, uint64_t>> range;
  for (const auto& ev : events) {
    if (ev.layer != Layer::Dev || (ev.op != Op::Write && ev.op != Op::Append) || !ev.len) continue;
    if (*ev.len >= t.large_io_threshold) continue;
    if (r.evidence.size() < kMaxCitations) r.evidence.push_back(cite(ev));
    range = range ? std::pair{std::min(range->first, ev.ts_ns), std::max(range->second, ev.ts_ns)}
                  : std::pair{ev.ts_ns, ev.ts_ns};
  }
  r.ts_range = range;
  if (r.evidence.empty())
    for (std::size_t b = 0; b < hist.size() && r.evidence.size() < kMaxCitations; ++b)
      if (hist[b] && trace::bucket_floor(b) < t.large_io_threshold)
        r.evidence.push_back(fmt::format("histogram bucket {}: {} bytes written", trace::bucket_label(b), hist[b]));
  result.reports.push_back(std::move(r));
  return result;
}

// ---------------------------------------------------------------------------
// R2
// ---------------------------------------------------------------------------

namespace {

struct FooterTest {
  bool footer = false;
  std::vector<std::string> evidence;
  std::optional<std::pair<uint64_t, uint64_t>> epoch;
  uint64_t epoch_pages = 0;
};

// The lone minority slice, when it is the logically last slice and small.
const f2fs::SegmentSlice* trailing_minority(const f2fs::FileHotness& f, const Thresholds& t) {
  if (f.distinct_classes() != 2 || f.slices.empty()) return nullptr;
  const auto& last = f.slices.back();
  if (!last.hotness || f.classes.at(*last.hotness) != 1) return nullptr;
  for (std::size_t i = 0; i + 1 < f.slices.size(); ++i)
    if (f.slices[i].hotness == last.hotness) return nullptr;
  if (last.length > t.small_tail_blocks * kPage) return nullptr;
  return &last;
}

std::optional<uint64_t> attr_u64(const TraceEvent& ev, const char* key) {
  auto it = ev.attrs.find(key);
  if (it == ev.attrs.end()) return std::nullopt;
  return text::parse_u64(it->second);
}

bool is_file_event(const TraceEvent& ev, Op op, const std::string& file) {
  if (ev.layer != Layer::Fs || ev.op != op) return false;
  auto it = ev.attrs.find("file");
  return it != ev.attrs.end() && it->second == file;
}

FooterTest footer_epoch(const std::string& file, const f2fs::SegmentSlice& tail, std::span<const TraceEvent> events,
                        const Thresholds& t) {
  FooterTest out;
  const uint64_t lo = tail.logical_offset, hi = tail.logical_offset + tail.length;
  const TraceEvent* tail_write = nullptr;
  for (const auto& ev : events) {
    if (!is_file_event(ev, Op::Write, file) || !ev.len) continue;
    auto off = attr_u64(ev, "offset");
    if (off && *off < hi && lo < *off + *ev.len) tail_write = &ev;
  }
  if (!tail_write) return out;

  uint64_t begin = 0;
  std::optional<uint64_t> end;
  const TraceEvent* opening = nullptr;
  const TraceEvent* closing = nullptr;
  for (const auto& ev : events) {
    if (!is_file_event(ev, Op::Fsync, file)) continue;
    if (ev.ts_ns < tail_write->ts_ns) {
      begin = ev.ts_ns;
      opening = &ev;
    } else if (!end) {
      end = ev.ts_ns;
      closing = &ev;
    }
  }
  if (!opening) return out;  // no sync separates the tail from earlier writes

  for (const auto& ev : events) {
    if (!is_file_event(ev, Op::Write, file) || !ev.len) continue;
    if (ev.ts_ns > begin && (!end || ev.ts_ns <= *end)) out.epoch_pages += (*ev.len + kPage - 1) / kPage;
  }
  out.epoch = std::pair{begin, end.value_or(tail_write->ts_ns)};
  out.footer = out.epoch_pages < t.sync_epoch_pages;
  out.evidence.push_back(cite(*opening));
  out.evidence.push_back(cite(*tail_write));
  if (closing) out.evidence.push_back(cite(*closing));
  return out;
}

}  // namespace

CheckResult check_grouping(const f2fs::SegmapReport& segmap, bool have_segments, const Thresholds& t,
                           std::optional<std::span<const TraceEvent>> events) {
  CheckResult result;
  const std::string rule(to_string(Rule::R2GroupingHotnessMix));
  if (!have_segments) {
    result.notices.push_back({rule, "insufficient input: no segment hotness data, R2 suppressed"});
    return result;
  }
  bool tail_without_trace = false;
  for (const auto& f : segmap.files) {
    if (f.distinct_classes() < 2) continue;
    ViolationReport r;
    r.rule = Rule::R2GroupingHotnessMix;
    r.severity = Severity::Violation;
    r.subject = "file " + f.file_id;
    auto& classes = r.metrics["classes"] = nlohmann::ordered_json::object();
    for (const auto& [h, n] : f.classes) classes[std::string(f2fs::to_string(h))] = n;
    auto& bytes = r.metrics["bytes"] = nlohmann::ordered_json::object();
    for (const auto& [h, n] : f.bytes) bytes[std::string(f2fs::to_string(h))] = n;

    // One citation per class touched, so the mix is re-checkable.
    std::set<f2fs::Hotness> cited;
    for (const auto& s : f.slices)
      if (s.hotness && cited.insert(*s.hotness).second) r.evidence.push_back(cite(s));

    if (const auto* tail = trailing_minority(f, t)) {
      r.metrics["tail_blocks"] = (tail->length + kPage - 1) / kPage;
      if (events) {
        auto ft = footer_epoch(f.file_id, *tail, *events, t);
        if (ft.epoch) {
          r.metrics["tail_epoch_pages"] = ft.epoch_pages;
          r.ts_range = ft.epoch;
        }
        if (ft.footer) r.pattern = "FOOTER";
        for (auto& e : ft.evidence) r.evidence.push_back(std::move(e));
      } else {
        tail_without_trace = true;
      }
    }
    result.reports.push_back(std::move(r));
  }
  if (tail_without_trace)
    result.notices.push_back({rule, "no trace given: small trailing slices were not tested for the FOOTER pattern"});
  return result;
}

// ---------------------------------------------------------------------------
// R3
// ---------------------------------------------------------------------------

namespace {

struct Move {
  std::string file;
  uint64_t bytes = 0;
  uint64_t logical_lo = UINT64_MAX, logical_hi = 0;
  const f2fs::SegmentSlice* before = nullptr;
  const f2fs::SegmentSlice* after = nullptr;
};

std::string where(const f2fs::SegmentSlice& s) {
  return fmt::format("zone {} segment {} {}", s.zone, s.segment, s.hotness ? f2fs::to_string(*s.hotness) : "UNKNOWN");
}

}  // namespace

CheckResult check_gc_reclassification(const SnapshotSeries& series, const zns::ZoneGeometry& geometry,
                                      const Thresholds&) {
  CheckResult result;
  const std::string rule(to_string(Rule::R3GroupingGcReclass));
  if (series.snapshots.size() < 2) {
    result.notices.push_back({rule, "insufficient input: at least two snapshots are needed"});
    return result;
  }
  validate_series(series);

  for (std::size_t k = 1; k < series.snapshots.size(); ++k) {
    const auto& a = series.snapshots[k - 1];
    const auto& b = series.snapshots[k];
    if (a.segments.empty() || b.segments.empty()) {
      result.notices.push_back({rule, fmt::format("snapshots ts={} and ts={}: segment hotness missing, skipped", a.ts,
                                                  b.ts)});
      continue;
    }
    const auto ra = f2fs::segmap(a.maps, a.segments, geometry, series.main_start);
    const auto rb = f2fs::segmap(b.maps, b.segments, geometry, series.main_start);

    std::size_t only_a = 0, only_b = 0;
    for (const auto& f : ra.files) only_a += rb.file(f.file_id) == nullptr;
    for (const auto& f : rb.files) only_b += ra.file(f.file_id) == nullptr;
    if (only_a || only_b)
      result.notices.push_back({rule, fmt::format("snapshots ts={} and ts={}: compared on the common files ({} only "
                                                  "before, {} only after)",
                                                  a.ts, b.ts, only_a, only_b)});

    // (file, before segment, after segment) -> moved bytes
    std::map<std::tuple<std::string, uint64_t, uint64_t>, Move> moves;
    for (const auto& fa : ra.files) {
      const auto* fb = rb.file(fa.file_id);
      if (!fb) continue;
      std::size_t i = 0, j = 0;
      while (i < fa.slices.size() && j < fb->slices.size()) {
        const auto& sa = fa.slices[i];
        const auto& sb = fb->slices[j];
        const uint64_t lo = std::max(sa.logical_offset, sb.logical_offset);
        const uint64_t hi = std::min(sa.logical_offset + sa.length, sb.logical_offset + sb.length);
        if (lo < hi) {
          const uint64_t pa = sa.physical_start + (lo - sa.logical_offset);
          const uint64_t pb = sb.physical_start + (lo - sb.logical_offset);
          if (pa != pb && sa.hotness && sb.hotness && f2fs::is_cold(*sb.hotness) && *sa.hotness != *sb.hotness) {
            auto& m = moves[{fa.file_id, sa.segment, sb.segment}];
            m.file = fa.file_id;
            m.bytes += hi - lo;
            m.logical_lo = std::min(m.logical_lo, lo);
            m.logical_hi = std::max(m.logical_hi, hi);
            if (!m.before) m.before = &sa;
            if (!m.after) m.after = &sb;
          }
        }
        if (sa.logical_offset + sa.length <= sb.logical_offset + sb.length) ++i;
        else ++j;
      }
    }

    std::map<uint64_t, std::map<std::string, f2fs::Hotness>> landed;  // after segment -> file -> previous class
    for (const auto& [key, m] : moves) {
      ViolationReport r;
      r.rule = Rule::R3GroupingGcReclass;
      r.severity = Severity::Warn;
      r.subject = "file " + m.file;
      r.metrics["bytes_moved"] = m.bytes;
      r.metrics["before"] = {{"zone", m.before->zone},
                             {"segment", m.before->segment},
                             {"hotness", f2fs::to_string(*m.before->hotness)}};
      r.metrics["after"] = {{"zone", m.after->zone},
                            {"segment", m.after->segment},
                            {"hotness", f2fs::to_string(*m.after->hotness)}};
      r.evidence.push_back(fmt::format("snapshot ts={}: {} logical [{}, {}) at {}", a.ts, m.file, m.logical_lo,
                                       m.logical_hi, where(*m.before)));
      r.evidence.push_back(fmt::format("snapshot ts={}: {} logical [{}, {}) at {}", b.ts, m.file, m.logical_lo,
                                       m.logical_hi, where(*m.after)));
      r.ts_range = std::pair{a.ts, b.ts};
      landed[m.after->segment].emplace(m.file, *m.before->hotness);
      result.reports.push_back(std::move(r));
    }

    for (const auto& [segment, files] : landed) {
      std::set<f2fs::Hotness> previous;
      for (const auto& [file, h] : files) previous.insert(h);
      if (files.size() < 2 || previous.size() < 2) continue;
      ViolationReport r;
      r.rule = Rule::R3GroupingGcReclass;
      r.severity = Severity::Violation;
      r.subject = fmt::format("segment {}", segment);
      auto& prev = r.metrics["previous_hotness"] = nlohmann::ordered_json::object();
      for (const auto& [file, h] : files) {
        r.colocated.push_back(file);
        prev[file] = f2fs::to_string(h);
      }
      for (const auto& [key, m] : moves)
        if (m.after->segment == segment)
          r.evidence.push_back(fmt::format("snapshot ts={}: {} moved from {} to {}", b.ts, m.file, where(*m.before),
                                           where(*m.after)));
      r.metrics["zone"] = f2fs::segment_start(series.main_start, segment) / geometry.zone_size;
      r.ts_range = std::pair{a.ts, b.ts};
      result.reports.push_back(std::move(r));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// R4
// ---------------------------------------------------------------------------

CheckResult check_lifetime(const trace::ZoneActivity& activity, const Thresholds& t) {
  CheckResult result;
  const auto counts = activity.reset_counts();
  std::vector<uint64_t> nonzero, never;
  uint64_t total = 0;
  for (std::size_t z = 0; z < counts.size(); ++z) {
    total += counts[z];
    if (counts[z]) nonzero.push_back(counts[z]);
    else never.push_back(z);
  }

  auto info = [&](std::string subject, std::string evidence) {
    ViolationReport r;
    r.rule = Rule::R4LifetimeSkew;
    r.severity = Severity::Info;
    r.subject = std::move(subject);
    r.evidence.push_back(std::move(evidence));
    return r;
  };

  if (total == 0) {
    auto r = info("device", fmt::format("zones {}: reset_count=0", counts.empty() ? "-" : zone_ranges(never)));
    r.metrics["message"] = "no reset activity";
    result.reports.push_back(std::move(r));
    return result;
  }

  const double med = median(nonzero);
  double mean = static_cast<double>(total) / static_cast<double>(counts.size());
  double var = 0.0;
  for (auto c : counts) var += (static_cast<double>(c) - mean) * (static_cast<double>(c) - mean);
  var /= static_cast<double>(counts.size());
  const double cv = mean > 0 ? std::sqrt(var) / mean : 0.0;
  const double limit = t.skew_factor * med;

  for (std::size_t z = 0; z < counts.size(); ++z) {
    auto sev = grade_above(static_cast<double>(counts[z]), limit, t.warn_ratio);
    if (!sev) continue;
    ViolationReport r;
    r.rule = Rule::R4LifetimeSkew;
    r.severity = *sev;
    r.subject = fmt::format("zone {}", z);
    r.metrics["reset_count"] = counts[z];
    r.metrics["median"] = med;
    r.metrics["limit"] = limit;
    r.metrics["ratio"] = static_cast<double>(counts[z]) / med;
    r.metrics["min"] = *std::min_element(counts.begin(), counts.end());
    r.metrics["max"] = *std::max_element(counts.begin(), counts.end());
    r.metrics["cv"] = cv;
    r.evidence.push_back(fmt::format("zone {}: reset_count={} ({} RESET events)", z, counts[z],
                                     activity.zones[z].count(Op::Reset)));
    result.reports.push_back(std::move(r));
  }
  if (!never.empty()) {
    auto r = info("zones never reset", fmt::format("zones {}: reset_count=0", zone_ranges(never)));
    r.metrics["zones"] = never.size();
    result.reports.push_back(std::move(r));
  }
  return result;
}

// ---------------------------------------------------------------------------
// R5
// ---------------------------------------------------------------------------

CheckResult check_locality(const extent::FileMaps& maps, const zns::ZoneGeometry& geometry, const Thresholds& t) {
  CheckResult result;
  for (const auto& m : maps) {
    const auto s = extent::file_stats(m, geometry);
    const double hole_frac =
        s.file_size ? static_cast<double>(s.hole_bytes) / static_cast<double>(s.file_size) : 0.0;
    auto by_frag = grade_above(static_cast<double>(s.discontinuities), static_cast<double>(t.frag_threshold),
                               t.warn_ratio);
    auto by_holes = grade_above(hole_frac, t.hole_fraction, t.warn_ratio);
    if (!by_frag && !by_holes) continue;

    ViolationReport r;
    r.rule = Rule::R5LocalityFragmentation;
    r.severity = std::max(by_frag.value_or(Severity::Info), by_holes.value_or(Severity::Info));
    r.subject = "file " + m.file_id;
    r.metrics["discontinuities"] = s.discontinuities;
    r.metrics["hole_count"] = s.hole_count;
    r.metrics["hole_bytes"] = s.hole_bytes;
    r.metrics["hole_fraction"] = hole_frac;
    r.metrics["file_size"] = s.file_size;
    r.metrics["extents"] = s.extent_count;

    std::size_t cited = 0;
    for (std::size_t i = 1; i < m.extents.size() && cited < kMaxCitations; ++i)
      if (m.extents[i - 1].physical_end() != m.extents[i].physical_start) {
        r.evidence.push_back(cite(m.extents[i - 1]) + " -> " + cite(m.extents[i]));
        ++cited;
      }
    uint64_t covered = 0;
    cited = 0;
    for (const auto& e : m.extents) {
      if (e.logical_offset > covered && cited < kMaxCitations) {
        r.evidence.push_back(fmt::format("hole {} logical [{}, {})", m.file_id, covered, e.logical_offset));
        ++cited;
      }
      covered = std::max(covered, e.logical_end());
    }
    if (s.file_size > covered && cited < kMaxCitations)
      r.evidence.push_back(fmt::format("hole {} logical [{}, {})", m.file_id, covered, s.file_size));
    result.reports.push_back(std::move(r));
  }
  return result;
}

}  // namespace zlens::contracts
