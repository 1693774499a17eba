#include "zlens/snapshot.hpp"

#include <filesystem>
#include <fstream>

#include <fmt/core.h>

#include "zlens/text.hpp"

namespace zlens {

SnapshotSeries load_snapshot_series(const std::string& path, const zns::ZoneGeometry& geometry) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open snapshot series " + path);
  const auto dir = std::filesystem::path(path).parent_path();
  auto resolve = [&](std::string_view p) { return (dir / std::filesystem::path(p)).string(); };

  SnapshotSeries series;
  struct Pending {
    uint64_t ts;
    std::string dump;
    std::string segments;
    std::size_t line;
  };
  std::vector<Pending> lines;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = text::trim(line);
    if (body.empty()) continue;
    if (body.starts_with("#@main_start")) {
      auto f = text::split_ws(body);
      auto v = f.size() == 2 ? text::parse_size(f[1]) : std::nullopt;
      if (!v) throw ParseError(lineno, "expected '#@main_start <bytes>'");
      series.main_start = *v;
      continue;
    }
    if (body.front() == '#') continue;
    auto f = text::split_ws(body);
    if (f.size() != 3) throw ParseError(lineno, "expected '<ts> <extent-dump> <segment-info|->'");
    auto ts = text::parse_u64(f[0]);
    if (!ts) throw ParseError(lineno, "timestamp must be an unsigned integer");
    if (!lines.empty() && *ts <= lines.back().ts)
      throw ParseError(lineno, fmt::format("timestamp {} does not follow {}", *ts, lines.back().ts));
    lines.push_back({*ts, std::string(f[1]), std::string(f[2]), lineno});
  }

  for (const auto& p : lines) {
    Snapshot s;
    s.ts = p.ts;
    s.maps = extent::load_extent_dump_file(resolve(p.dump));
    if (p.segments != "-") s.segments = f2fs::load_segment_info_file(resolve(p.segments), geometry, series.main_start);
    series.snapshots.push_back(std::move(s));
  }
  return series;
}

void validate_series(const SnapshotSeries& series) {
  for (std::size_t i = 1; i < series.snapshots.size(); ++i)
    if (series.snapshots[i].ts <= series.snapshots[i - 1].ts)
      throw Error(ErrorCode::Integrity, fmt::format("snapshot {} at ts {} does not follow ts {}", i,
                                                    series.snapshots[i].ts, series.snapshots[i - 1].ts));
}

}  // namespace zlens
