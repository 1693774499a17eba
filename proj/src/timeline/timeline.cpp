#include "zlens/timeline.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <unordered_map>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "zlens/text.hpp"

namespace zlens::timeline {

using trace::Layer;
using trace::Op;

std::string_view to_string(LinkType type) { return type == LinkType::Pair ? "PAIR" : "SUPERSEDED_BY"; }

std::string TimelineEntry::kind_name() const {
  return kind == Kind::Placement ? "PLACEMENT" : std::string(trace::to_string(op));
}

namespace {

std::string join(const std::vector<std::string>& v, std::string_view sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

std::string join_zones(const std::set<uint64_t>& zones) {
  std::string out = "{";
  bool first = true;
  for (auto z : zones) {
    if (!first) out += ',';
    out += std::to_string(z);
    first = false;
  }
  return out + "}";
}

TimelineEntry from_event(const trace::TraceEvent& ev, std::size_t index) {
  TimelineEntry e;
  e.ts_ns = ev.ts_ns;
  e.lane = ev.layer;
  e.op = ev.op;
  e.source = index;
  if (ev.zone) e.zones.push_back(*ev.zone);
  if (auto it = ev.attrs.find("files"); it != ev.attrs.end())
    for (auto& f : text::split(it->second, ','))
      if (auto t = text::trim(f); !t.empty()) e.files.emplace_back(t);
  if (e.files.empty())
    if (auto it = ev.attrs.find("file"); it != ev.attrs.end()) e.files.push_back(it->second);
  if (auto it = ev.attrs.find("cid"); it != ev.attrs.end()) e.cid = it->second;
  if (auto it = ev.attrs.find("level"); it != ev.attrs.end())
    if (auto v = text::parse_u64(it->second)) e.level = static_cast<int>(*v);
  if (auto it = ev.attrs.find("trivial"); it != ev.attrs.end()) e.trivial = it->second == "1" || it->second == "true";

  std::string label(trace::to_string(ev.op));
  if (e.cid) label += " cid=" + *e.cid;
  if (e.level) label += fmt::format(" L{}", *e.level);
  if (!e.files.empty()) label += " [" + join(e.files) + "]";
  if (ev.zone) label += fmt::format(" zone {}", *ev.zone);
  if (ev.len) label += " " + text::format_bytes(*ev.len);
  if (e.trivial) label += " (trivial)";
  e.label = std::move(label);
  return e;
}

struct Placement {
  std::set<uint64_t> zones;
  std::map<f2fs::Hotness, uint64_t> hotness;
};

std::map<std::string, Placement> placements(const Snapshot& s, const zns::ZoneGeometry& g, uint64_t main_start) {
  std::map<std::string, Placement> out;
  for (const auto& m : s.maps) {
    auto& p = out[m.file_id];
    for (const auto& e : m.extents) {
      if (e.unwritten()) continue;
      for (uint64_t z = e.physical_start / g.zone_size; z <= (e.physical_end() - 1) / g.zone_size; ++z)
        p.zones.insert(z);
    }
  }
  if (!s.segments.empty()) {
    auto report = f2fs::segmap(s.maps, s.segments, g, main_start);
    for (const auto& f : report.files) out[f.file_id].hotness = f.classes;
  }
  return out;
}

std::string format_hotness(const std::map<f2fs::Hotness, uint64_t>& h) {
  std::vector<std::string> parts;
  for (const auto& [k, n] : h) parts.push_back(fmt::format("{}:{}", f2fs::to_string(k), n));
  return "{" + join(parts) + "}";
}

}  // namespace

std::vector<TimelineEntry> diff_snapshots(const Snapshot& a, const Snapshot& b, const zns::ZoneGeometry& geometry,
                                          uint64_t main_start) {
  const auto pa = placements(a, geometry, main_start);
  const auto pb = placements(b, geometry, main_start);
  std::vector<std::string> order;
  for (const auto& m : b.maps) order.push_back(m.file_id);
  for (const auto& m : a.maps)
    if (!pb.contains(m.file_id)) order.push_back(m.file_id);

  std::vector<TimelineEntry> out;
  std::set<std::string> done;
  for (const auto& id : order) {
    if (!done.insert(id).second) continue;
    auto ia = pa.find(id);
    auto ib = pb.find(id);
    static const Placement kNone;
    const Placement& before = ia == pa.end() ? kNone : ia->second;
    const Placement& after = ib == pb.end() ? kNone : ib->second;
    const bool zones_changed = before.zones != after.zones;
    const bool hot_changed = before.hotness != after.hotness;
    if (ia != pa.end() && ib != pb.end() && !zones_changed && !hot_changed) continue;

    TimelineEntry e;
    e.ts_ns = b.ts;
    e.lane = Layer::Fs;
    e.kind = Kind::Placement;
    e.files = {id};
    e.zones.assign(after.zones.begin(), after.zones.end());
    std::string label = "PLACEMENT " + id;
    if (ia == pa.end()) label += " appeared";
    else if (ib == pb.end()) label += " removed";
    label += " zones " + join_zones(before.zones) + " -> " + join_zones(after.zones);
    if (hot_changed) label += " hotness " + format_hotness(before.hotness) + " -> " + format_hotness(after.hotness);
    e.label = std::move(label);
    out.push_back(std::move(e));
  }
  return out;
}

Timeline build_timeline(std::span<const trace::TraceEvent> events, const zns::ZoneGeometry& geometry,
                        const SnapshotSeries* series) {
  Timeline tl;
  tl.entries.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) tl.entries.push_back(from_event(events[i], i));
  if (series) {
    validate_series(*series);
    for (std::size_t k = 1; k < series->snapshots.size(); ++k)
      for (auto& e : diff_snapshots(series->snapshots[k - 1], series->snapshots[k], geometry, series->main_start))
        tl.entries.push_back(std::move(e));
  }
  std::stable_sort(tl.entries.begin(), tl.entries.end(),
                   [](const TimelineEntry& a, const TimelineEntry& b) { return a.ts_ns < b.ts_ns; });

  auto& entries = tl.entries;
  auto is_app = [&](std::size_t i, Op op) {
    return entries[i].kind == Kind::Event && entries[i].lane == Layer::App && entries[i].op == op;
  };

  // Pair compactions by correlation id.
  std::unordered_map<std::string, std::size_t> open;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (begin, end)
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& e = entries[i];
    if (is_app(i, Op::CompactionBegin)) {
      if (!e.cid) {
        e.dangling = true;
        tl.warnings.push_back(fmt::format("ts {}: COMPACTION_BEGIN without cid", e.ts_ns));
        continue;
      }
      if (auto it = open.find(*e.cid); it != open.end()) {
        entries[it->second].dangling = true;
        tl.warnings.push_back(fmt::format("ts {}: cid {} reopened before its COMPACTION_END", e.ts_ns, *e.cid));
      }
      open[*e.cid] = i;
    } else if (is_app(i, Op::CompactionEnd)) {
      auto it = e.cid ? open.find(*e.cid) : open.end();
      if (it == open.end()) {
        e.orphan = true;
        tl.warnings.push_back(
            fmt::format("ts {}: COMPACTION_END with unknown cid {}", e.ts_ns, e.cid.value_or("(none)")));
        continue;
      }
      e.links.push_back({LinkType::Pair, it->second});
      pairs.emplace_back(it->second, i);
      open.erase(it);
    }
  }
  std::vector<std::pair<std::string, std::size_t>> still_open(open.begin(), open.end());
  std::sort(still_open.begin(), still_open.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  for (const auto& [cid, idx] : still_open) {
    entries[idx].dangling = true;
    tl.warnings.push_back(fmt::format("ts {}: COMPACTION_BEGIN cid {} never completed", entries[idx].ts_ns, cid));
  }

  // Lineage, one record per output file.
  for (const auto& [b, e] : pairs) {
    const auto& begin = entries[b];
    const auto& end = entries[e];
    if (begin.trivial || end.trivial) continue;
    if (begin.files.empty()) {
      tl.warnings.push_back(fmt::format("cid {}: compaction without input files", *begin.cid));
      continue;
    }
    if (!(begin.ts_ns < end.ts_ns))
      tl.warnings.push_back(fmt::format("cid {}: COMPACTION_END does not follow its BEGIN", *begin.cid));
    for (const auto& out : end.files) {
      if (std::find(begin.files.begin(), begin.files.end(), out) != begin.files.end()) {
        tl.warnings.push_back(fmt::format("cid {}: output {} is also an input; not a lineage edge", *begin.cid, out));
        continue;
      }
      tl.lineage.push_back(CompactionLineage{*begin.cid, out, begin.files, end.level.value_or(begin.level.value_or(0)),
                                             begin.ts_ns, end.ts_ns, b, e});
    }
  }

  // Deletes link to the latest completed compaction (ending at or before
  // the delete) that consumed the file.
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!is_app(i, Op::FileDelete)) continue;
    for (const auto& f : entries[i].files) {
      std::optional<std::size_t> best;
      for (const auto& l : tl.lineage) {
        if (l.ts_end > entries[i].ts_ns || l.end_entry > i) continue;
        if (std::find(l.inputs.begin(), l.inputs.end(), f) == l.inputs.end()) continue;
        if (!best || l.end_entry > *best) best = l.end_entry;
      }
      if (best) {
        Link link{LinkType::SupersededBy, *best};
        if (std::find(entries[i].links.begin(), entries[i].links.end(), link) == entries[i].links.end())
          entries[i].links.push_back(link);
      }
    }
  }
  return tl;
}

std::set<std::pair<std::string, std::string>> Timeline::edges() const {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& l : lineage)
    for (const auto& in : l.inputs) out.emplace(in, l.output);
  return out;
}

std::vector<std::pair<std::string, std::string>> Timeline::delete_links() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : entries) {
    for (const auto& link : e.links) {
      if (link.type != LinkType::SupersededBy) continue;
      const auto& target = entries[link.target];
      for (const auto& f : e.files)
        for (const auto& l : lineage)
          if (l.end_entry == link.target && std::find(l.inputs.begin(), l.inputs.end(), f) != l.inputs.end()) {
            out.emplace_back(f, target.cid.value_or(""));
            break;
          }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool lineage_has_cycle(const Timeline& timeline) {
  std::map<std::string, std::set<std::string>> children;
  for (const auto& [in, out] : timeline.edges()) children[in].insert(out);
  std::map<std::string, int> state;  // 0 new, 1 on stack, 2 done
  std::function<bool(const std::string&)> visit = [&](const std::string& f) {
    int& s = state[f];
    if (s == 1) return true;
    if (s == 2) return false;
    s = 1;
    for (const auto& c : children[f])
      if (visit(c)) return true;
    state[f] = 2;
    return false;
  };
  for (const auto& [f, _] : children)
    if (visit(f)) return true;
  return false;
}

void write_timeline(std::ostream& out, const Timeline& timeline) {
  for (const auto& e : timeline.entries) {
    nlohmann::ordered_json j;
    j["ts_ns"] = e.ts_ns;
    j["lane"] = trace::to_string(e.lane);
    j["kind"] = e.kind_name();
    if (!e.files.empty()) j["files"] = e.files;
    if (!e.zones.empty()) j["zones"] = e.zones;
    j["label"] = e.label;
    if (e.cid) j["cid"] = *e.cid;
    if (e.level) j["level"] = *e.level;
    if (!e.links.empty()) {
      auto& links = j["links"] = nlohmann::ordered_json::array();
      for (const auto& l : e.links) links.push_back({{"type", to_string(l.type)}, {"target", l.target}});
    }
    if (e.trivial) j["trivial"] = true;
    if (e.dangling) j["dangling"] = true;
    if (e.orphan) j["orphan"] = true;
    out << j.dump() << '\n';
  }
}

}  // namespace zlens::timeline
