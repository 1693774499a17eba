#include "zlens/extent_map.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>

#include <fmt/core.h>

#include "zlens/text.hpp"

namespace zlens::extent {

std::string format_flags(uint32_t flags) {
  std::string out;
  auto add = [&](uint32_t bit, const char* name) {
    if ((flags & bit) == 0) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(kLast, "LAST");
  add(kUnwritten, "UNWRITTEN");
  add(kMerged, "MERGED");
  return out.empty() ? "-" : out;
}

namespace {

std::optional<uint32_t> parse_flags(std::string_view token) {
  if (token == "-") return 0u;
  uint32_t flags = 0;
  for (const auto& part : text::split(token, ',')) {
    if (part == "LAST") flags |= kLast;
    else if (part == "UNWRITTEN") flags |= kUnwritten;
    else if (part == "MERGED") flags |= kMerged;
    else return std::nullopt;
  }
  return flags;
}

}  // namespace

FileMaps load_extent_dump(std::istream& in) {
  FileMaps maps;
  std::unordered_map<std::string, std::size_t> index;
  std::map<std::string, uint64_t> sizes;
  std::optional<uint64_t> ts;
  std::string line;
  std::size_t lineno = 0;

  auto map_for = [&](const std::string& id) -> FileMap& {
    auto [it, inserted] = index.emplace(id, maps.size());
    if (inserted) maps.push_back(FileMap{id, 0, {}, 0});
    return maps[it->second];
  };

  while (std::getline(in, line)) {
    ++lineno;
    auto body = text::trim(line);
    if (body.empty()) continue;
    if (body.starts_with("#@")) {
      auto f = text::split_ws(body.substr(2));
      if (!f.empty() && f[0] == "size") {
        auto n = f.size() == 3 ? text::parse_size(f[2]) : std::nullopt;
        if (!n) throw ParseError(lineno, "expected '#@size <file_id> <bytes>'");
        sizes[std::string(f[1])] = *n;
        map_for(std::string(f[1]));
      } else if (!f.empty() && f[0] == "ts") {
        auto n = f.size() == 2 ? text::parse_u64(f[1]) : std::nullopt;
        if (!n) throw ParseError(lineno, "expected '#@ts <value>'");
        ts = *n;
      } else {
        throw ParseError(lineno, "unknown pragma");
      }
      continue;
    }
    if (body.front() == '#') continue;

    auto f = text::split_ws(body);
    if (f.size() != 5) throw ParseError(lineno, "expected 'file_id logical_offset physical_start length flags'");
    Extent e;
    e.file_id = std::string(f[0]);
    auto lo = text::parse_size(f[1]);
    auto ps = text::parse_size(f[2]);
    auto len = text::parse_size(f[3]);
    auto flags = parse_flags(f[4]);
    if (!lo || !ps || !len) throw ParseError(lineno, "offsets and length must be unsigned integers");
    if (!flags) throw ParseError(lineno, fmt::format("bad flags '{}'", f[4]));
    if (*len == 0) throw ParseError(lineno, "extent length must be > 0");
    e.logical_offset = *lo;
    e.physical_start = *ps;
    e.length = *len;
    e.flags = *flags;
    map_for(e.file_id).extents.push_back(std::move(e));
  }

  for (auto& m : maps) {
    std::stable_sort(m.extents.begin(), m.extents.end(),
                     [](const Extent& a, const Extent& b) { return a.logical_offset < b.logical_offset; });
    for (std::size_t i = 1; i < m.extents.size(); ++i) {
      const auto& prev = m.extents[i - 1];
      const auto& cur = m.extents[i];
      if (prev.logical_offset == cur.logical_offset)
        throw Error(ErrorCode::Integrity,
                    fmt::format("file {}: duplicate extent at logical offset {}", m.file_id, cur.logical_offset));
      if (prev.logical_end() > cur.logical_offset)
        throw Error(ErrorCode::Integrity, fmt::format("file {}: extents [{}, {}) and [{}, {}) overlap", m.file_id,
                                                      prev.logical_offset, prev.logical_end(), cur.logical_offset,
                                                      cur.logical_end()));
    }
    uint64_t end = m.extents.empty() ? 0 : m.extents.back().logical_end();
    if (auto it = sizes.find(m.file_id); it != sizes.end()) {
      if (it->second < end)
        throw Error(ErrorCode::Integrity,
                    fmt::format("file {}: extents reach {} beyond declared size {}", m.file_id, end, it->second));
      m.file_size = it->second;
    } else {
      m.file_size = end;
    }
    m.snapshot_ts = ts.value_or(0);
  }
  return maps;
}

FileMaps load_extent_dump_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open extent dump " + path);
  return load_extent_dump(in);
}

void write_extent_dump(std::ostream& out, const FileMaps& maps) {
  if (!maps.empty() && maps.front().snapshot_ts != 0) out << "#@ts " << maps.front().snapshot_ts << '\n';
  for (const auto& m : maps) {
    out << "#@size " << m.file_id << ' ' << m.file_size << '\n';
    for (const auto& e : m.extents)
      out << e.file_id << ' ' << e.logical_offset << ' ' << e.physical_start << ' ' << e.length << ' '
          << format_flags(e.flags) << '\n';
  }
}

uint64_t ZonePlacement::total_bytes() const {
  uint64_t n = 0;
  for (const auto& [zone, slices] : zones)
    for (const auto& s : slices) n += s.length;
  return n;
}

ZonePlacement map_to_zones(const zns::ZoneGeometry& geometry, const FileMaps& maps) {
  ZonePlacement placement;
  const uint64_t span = geometry.span();
  for (const auto& m : maps) {
    for (const auto& e : m.extents) {
      if (e.unwritten()) continue;
      if (e.physical_start >= span || e.length > span - e.physical_start)
        throw Error(ErrorCode::Range,
                    fmt::format("file {}: extent at logical {} (physical [{:#x}, {:#x})) outside device span {:#x}",
                                m.file_id, e.logical_offset, e.physical_start, e.physical_end(), span));
      uint64_t phys = e.physical_start;
      uint64_t logical = e.logical_offset;
      uint64_t remaining = e.length;
      while (remaining > 0) {
        uint64_t zone = phys / geometry.zone_size;
        uint64_t zone_end = (zone + 1) * geometry.zone_size;
        uint64_t take = std::min(remaining, zone_end - phys);
        placement.zones[zone].push_back(Slice{m.file_id, logical, phys, take});
        phys += take;
        logical += take;
        remaining -= take;
      }
    }
  }
  return placement;
}

FileMaps placement_to_maps(const ZonePlacement& placement) {
  FileMaps maps;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& [zone, slices] : placement.zones) {
    for (const auto& s : slices) {
      auto [it, inserted] = index.emplace(s.file_id, maps.size());
      if (inserted) maps.push_back(FileMap{s.file_id, 0, {}, 0});
      auto& m = maps[it->second];
      m.extents.push_back(Extent{s.file_id, s.logical_offset, s.physical_start, s.length, 0});
      m.file_size = std::max(m.file_size, s.logical_offset + s.length);
    }
  }
  for (auto& m : maps)
    std::sort(m.extents.begin(), m.extents.end(),
              [](const Extent& a, const Extent& b) { return a.logical_offset < b.logical_offset; });
  return maps;
}

void write_placement_csv(std::ostream& out, const ZonePlacement& placement) {
  out << "zone,file_id,logical_offset,length\n";
  for (const auto& [zone, slices] : placement.zones)
    for (const auto& s : slices) out << zone << ',' << s.file_id << ',' << s.logical_offset << ',' << s.length << '\n';
}

uint64_t nearest_rank(std::span<const uint64_t> sorted, unsigned percent) {
  if (sorted.empty()) return 0;
  // rank = ceil(p/100 * N), clamped to [1, N]
  std::size_t n = sorted.size();
  std::size_t rank = (static_cast<std::size_t>(percent) * n + 99) / 100;
  rank = std::clamp<std::size_t>(rank, 1, n);
  return sorted[rank - 1];
}

FileStats file_stats(const FileMap& map, const zns::ZoneGeometry& geometry) {
  FileStats s;
  s.file_id = map.file_id;
  s.file_size = map.file_size;
  s.extent_count = map.extents.size();
  if (map.extents.empty()) {
    if (map.file_size > 0) {
      s.hole_count = 1;
      s.hole_bytes = map.file_size;
    }
    return s;
  }

  std::vector<uint64_t> lengths;
  lengths.reserve(map.extents.size());
  uint64_t total = 0;
  for (const auto& e : map.extents) {
    lengths.push_back(e.length);
    total += e.length;
  }
  std::sort(lengths.begin(), lengths.end());
  s.len_min = lengths.front();
  s.len_max = lengths.back();
  s.len_mean = static_cast<double>(total) / static_cast<double>(lengths.size());
  s.len_p50 = nearest_rank(lengths, 50);
  s.len_p90 = nearest_rank(lengths, 90);
  s.len_p99 = nearest_rank(lengths, 99);

  uint64_t covered_to = 0;
  const Extent* prev = nullptr;
  std::set<uint64_t> zones;
  for (const auto& e : map.extents) {
    if (e.logical_offset > covered_to) {
      ++s.hole_count;
      s.hole_bytes += e.logical_offset - covered_to;
    }
    covered_to = std::max(covered_to, e.logical_end());
    if (prev && prev->physical_end() != e.physical_start) ++s.discontinuities;
    prev = &e;
    if (!e.unwritten() && e.length > 0) {
      uint64_t first = e.physical_start / geometry.zone_size;
      uint64_t last = (e.physical_end() - 1) / geometry.zone_size;
      for (uint64_t z = first; z <= last; ++z) zones.insert(z);
    }
  }
  if (map.file_size > covered_to) {
    ++s.hole_count;
    s.hole_bytes += map.file_size - covered_to;
  }
  s.zones_spanned = zones.size();
  return s;
}

void write_stats_csv(std::ostream& out, std::span<const FileStats> stats) {
  out << "file_id,file_size,extents,len_min,len_max,len_mean,len_p50,len_p90,len_p99,holes,hole_bytes,"
         "discontinuities,zones_spanned\n";
  for (const auto& s : stats)
    out << fmt::format("{},{},{},{},{},{:.2f},{},{},{},{},{},{},{}\n", s.file_id, s.file_size, s.extent_count,
                       s.len_min, s.len_max, s.len_mean, s.len_p50, s.len_p90, s.len_p99, s.hole_count, s.hole_bytes,
                       s.discontinuities, s.zones_spanned);
}

void write_stats_report(std::ostream& out, std::span<const FileStats> stats, const ZonePlacement& placement) {
  out << fmt::format("{:<24} {:>12} {:>7} {:>10} {:>10} {:>10} {:>6} {:>10} {:>6} {:>6}\n", "file", "size", "extents",
                     "min", "p50", "max", "holes", "hole_bytes", "disc", "zones");
  for (const auto& s : stats)
    out << fmt::format("{:<24} {:>12} {:>7} {:>10} {:>10} {:>10} {:>6} {:>10} {:>6} {:>6}\n", s.file_id, s.file_size,
                       s.extent_count, s.len_min, s.len_p50, s.len_max, s.hole_count, s.hole_bytes,
                       s.discontinuities, s.zones_spanned);
  out << "\nzone placement\n";
  for (const auto& [zone, slices] : placement.zones) {
    std::set<std::string> files;
    uint64_t bytes = 0;
    for (const auto& sl : slices) {
      files.insert(sl.file_id);
      bytes += sl.length;
    }
    out << fmt::format("  zone {:>5}: {:>12} bytes, {} slice(s), {} file(s)\n", zone, bytes, slices.size(),
                       files.size());
  }
}

}  // namespace zlens::extent
