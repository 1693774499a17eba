#include <algorithm>
#include <fstream>
#include <unordered_map>

#include <fmt/core.h>

#include "zlens/f2fs.hpp"
#include "zlens/text.hpp"

namespace zlens::f2fs {

namespace {

constexpr std::array<std::string_view, 6> kHotnessNames = {"HOT_DATA", "WARM_DATA", "COLD_DATA",
                                                           "HOT_NODE", "WARM_NODE", "COLD_NODE"};

}  // namespace

std::string_view to_string(Hotness h) { return kHotnessNames[static_cast<std::size_t>(h)]; }

std::optional<Hotness> parse_hotness(std::string_view token) {
  for (std::size_t i = 0; i < kHotnessNames.size(); ++i)
    if (kHotnessNames[i] == token) return static_cast<Hotness>(i);
  return std::nullopt;
}

std::vector<SegmentRecord> load_segment_info(std::istream& in, const zns::ZoneGeometry& geometry,
                                             uint64_t main_start) {
  std::vector<SegmentRecord> out;
  std::unordered_map<uint64_t, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto f = text::split_ws(body);
    if (f.size() != 3) throw ParseError(lineno, "expected '<segment_index> <hotness> <valid_blocks>'");
    auto index = text::parse_u64(f[0]);
    auto valid = text::parse_u64(f[2]);
    if (!index || !valid) throw ParseError(lineno, "segment index and valid block count must be unsigned integers");
    auto hot = parse_hotness(f[1]);
    if (!hot) throw ParseError(lineno, fmt::format("unknown hotness token '{}'", f[1]));
    if (*valid > kBlocksPerSegment)
      throw ParseError(lineno, fmt::format("{} valid blocks exceeds {} blocks per segment", *valid, kBlocksPerSegment));
    if (!seen.emplace(*index, out.size()).second)
      throw ParseError(lineno, fmt::format("segment {} listed twice", *index));
    const uint64_t start = segment_start(main_start, *index);
    if (start >= geometry.span())
      throw Error(ErrorCode::Range, fmt::format("line {}: segment {} starts at {:#x}, outside device span {:#x}",
                                                lineno, *index, start, geometry.span()));
    out.push_back(SegmentRecord{*index, *hot, static_cast<uint32_t>(*valid), start / geometry.zone_size});
  }
  return out;
}

std::vector<SegmentRecord> load_segment_info_file(const std::string& path, const zns::ZoneGeometry& geometry,
                                                  uint64_t main_start) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open segment info " + path);
  return load_segment_info(in, geometry, main_start);
}

void write_segment_info(std::ostream& out, std::span<const SegmentRecord> segments) {
  for (const auto& s : segments) out << s.index << ' ' << to_string(s.hotness) << ' ' << s.valid_blocks << '\n';
}

const FileHotness* SegmapReport::file(const std::string& id) const {
  for (const auto& f : files)
    if (f.file_id == id) return &f;
  return nullptr;
}

SegmapReport segmap(const extent::FileMaps& maps, std::span<const SegmentRecord> segments,
                    const zns::ZoneGeometry& geometry, uint64_t main_start) {
  SegmapReport report;
  std::unordered_map<uint64_t, std::size_t> by_index;
  for (const auto& rec : segments) {
    by_index.emplace(rec.index, report.segments.size());
    report.segments.push_back(SegmentSummary{rec, 0, {}});
  }
  const uint64_t span = geometry.span();

  for (const auto& m : maps) {
    FileHotness fh;
    fh.file_id = m.file_id;
    for (const auto& e : m.extents) {
      if (e.unwritten()) continue;
      uint64_t phys = e.physical_start;
      uint64_t logical = e.logical_offset;
      uint64_t end = e.physical_end();
      auto exclude = [&](uint64_t from, uint64_t to, const char* why) {
        report.exclusions.push_back(Exclusion{m.file_id, logical + (from - phys), from, to - from, why});
      };
      if (phys < main_start) {
        uint64_t cut = std::min(end, main_start);
        exclude(phys, cut, "before main area");
        logical += cut - phys;
        phys = cut;
      }
      if (end > span) {
        uint64_t cut = std::max(phys, span);
        if (cut < end) exclude(cut, end, "beyond device span");
        end = cut;
      }
      while (phys < end) {
        const uint64_t seg = (phys - main_start) / kSegmentBytes;
        const uint64_t take = std::min(end, segment_start(main_start, seg + 1)) - phys;
        SegmentSlice s{m.file_id, logical, phys, take, seg, phys / geometry.zone_size, std::nullopt};
        if (auto it = by_index.find(seg); it != by_index.end()) {
          auto& summary = report.segments[it->second];
          s.hotness = summary.record.hotness;
          ++summary.extent_slices;
          summary.files.insert(m.file_id);
          ++fh.classes[*s.hotness];
          fh.bytes[*s.hotness] += take;
        } else {
          ++report.unclassified_slices;
        }
        fh.slices.push_back(std::move(s));
        phys += take;
        logical += take;
      }
    }
    report.files.push_back(std::move(fh));
  }
  return report;
}

void write_segmap_segments_csv(std::ostream& out, const SegmapReport& report) {
  out << "segment,hotness,valid_blocks,zone,extent_slices,files\n";
  for (const auto& s : report.segments) {
    std::string files;
    for (const auto& f : s.files) {
      if (!files.empty()) files += ';';
      files += f;
    }
    out << fmt::format("{},{},{},{},{},{}\n", s.record.index, to_string(s.record.hotness), s.record.valid_blocks,
                       s.record.zone, s.extent_slices, files);
  }
}

void write_segmap_files_csv(std::ostream& out, const SegmapReport& report) {
  out << "file_id,slices";
  for (auto h : kAllHotness) out << ',' << to_string(h);
  out << ",unclassified\n";
  for (const auto& f : report.files) {
    uint64_t classified = 0;
    out << f.file_id << ',' << f.slices.size();
    for (auto h : kAllHotness) {
      auto it = f.classes.find(h);
      uint64_t n = it == f.classes.end() ? 0 : it->second;
      classified += n;
      out << ',' << n;
    }
    out << ',' << f.slices.size() - classified << '\n';
  }
}

}  // namespace zlens::f2fs
