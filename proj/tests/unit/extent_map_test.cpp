#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "zlens/extent_map.hpp"

using namespace zlens;
using namespace zlens::extent;
using zlens::zns::KiB;
using zlens::zns::MiB;
using zlens::zns::ZoneGeometry;

namespace {

FileMaps parse(const std::string& text) {
  std::istringstream in(text);
  return load_extent_dump(in);
}

std::vector<std::pair<uint64_t, Slice>> flatten(const ZonePlacement& p) {
  std::vector<std::pair<uint64_t, Slice>> out;
  for (const auto& [z, slices] : p.zones)
    for (const auto& s : slices) out.emplace_back(z, s);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first, a.second.file_id, a.second.logical_offset) <
           std::tie(b.first, b.second.file_id, b.second.logical_offset);
  });
  return out;
}

}  // namespace

TEST(ExtentDump, SingleExtent) {
  auto maps = parse("# file logical physical length flags\nA 0 2MiB 1MiB LAST\n");
  ASSERT_EQ(maps.size(), 1u);
  ASSERT_EQ(maps[0].extents.size(), 1u);
  EXPECT_EQ(maps[0].extents[0].physical_start, 2 * MiB);
  EXPECT_EQ(maps[0].extents[0].flags, kLast);
  EXPECT_EQ(maps[0].file_size, 1 * MiB);
}

TEST(ExtentDump, EmptyDump) { EXPECT_TRUE(parse("# nothing\n\n").empty()); }

TEST(ExtentDump, SortsAndKeepsFileOrder) {
  auto maps = parse("b 8192 0 4096 -\na 0 0 4096 -\nb 0 4096 4096 MERGED\n#@size b 16384\n#@ts 77\n");
  ASSERT_EQ(maps.size(), 2u);
  EXPECT_EQ(maps[0].file_id, "b");
  EXPECT_EQ(maps[0].extents[0].logical_offset, 0u);
  EXPECT_EQ(maps[0].file_size, 16384u);
  EXPECT_EQ(maps[0].snapshot_ts, 77u);

  std::ostringstream out;
  write_extent_dump(out, maps);
  EXPECT_EQ(parse(out.str()), maps);
}

TEST(ExtentDump, Errors) {
  try {
    parse("a 0 0 4096 -\na 0 0\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse("a 0 0 0 -\n"), ParseError);
  EXPECT_THROW(parse("a 0 0 4096 BOGUS\n"), ParseError);
  try {
    parse("a 0 0 4096 -\na 0 8192 4096 -\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Integrity);
  }
  try {
    parse("a 0 0 8192 -\na 4096 8192 4096 -\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Integrity);
  }
}

TEST(MapToZones, SplitsAtBoundary) {
  auto g = ZoneGeometry::uniform(1 * MiB, 4);
  auto maps = parse("A 0 512KiB 1MiB -\n");
  auto p = map_to_zones(g, maps);
  ASSERT_EQ(p.zones.size(), 2u);
  EXPECT_EQ(p.zones.at(0), (std::vector<Slice>{{"A", 0, 512 * KiB, 512 * KiB}}));
  EXPECT_EQ(p.zones.at(1), (std::vector<Slice>{{"A", 512 * KiB, 1 * MiB, 512 * KiB}}));
}

TEST(MapToZones, WholeZoneUnsplit) {
  auto g = ZoneGeometry::uniform(1 * MiB, 4);
  auto p = map_to_zones(g, parse("A 0 2MiB 1MiB -\n"));
  ASSERT_EQ(p.zones.size(), 1u);
  EXPECT_EQ(p.zones.at(2).size(), 1u);
}

TEST(MapToZones, UnwrittenExcludedAndRangeError) {
  auto g = ZoneGeometry::uniform(1 * MiB, 4);
  auto p = map_to_zones(g, parse("A 0 0 4096 UNWRITTEN\nA 4096 4096 4096 -\n"));
  EXPECT_EQ(p.total_bytes(), 4096u);
  try {
    map_to_zones(g, parse("big 0 3MiB 2MiB -\n"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Range);
    EXPECT_NE(std::string(e.what()).find("big"), std::string::npos);
  }
}

TEST(MapToZones, BruteForceOracleAndFixedPoint) {
  std::mt19937_64 rng(2024);
  for (int round = 0; round < 20; ++round) {
    auto g = oracle::random_geometry(rng);
    auto maps = oracle::random_extents(g, 50, rng);
    auto p = map_to_zones(g, maps);

    std::map<uint64_t, uint64_t> got;
    for (const auto& [z, slices] : p.zones)
      for (const auto& s : slices) {
        got[z] += s.length;
        ASSERT_GE(s.physical_start, g.zone_start(z));
        ASSERT_LE(s.physical_start + s.length, g.zone_start(z) + g.zone_size);
      }
    EXPECT_EQ(got, oracle::per_block_zone_bytes(g, maps));

    uint64_t extent_total = 0;
    for (const auto& m : maps)
      for (const auto& e : m.extents) extent_total += e.length;
    EXPECT_EQ(p.total_bytes(), extent_total);

    auto again = map_to_zones(g, placement_to_maps(p));
    EXPECT_EQ(flatten(again), flatten(p));
  }
}

TEST(FileStats, SingleExtentWholeFile) {
  auto g = ZoneGeometry::uniform(1 * MiB, 8);
  auto s = file_stats(parse("A 0 512KiB 1MiB -\n")[0], g);
  EXPECT_EQ(s.hole_count, 0u);
  EXPECT_EQ(s.discontinuities, 0u);
  EXPECT_EQ(s.zones_spanned, 2u);
  EXPECT_EQ(s.len_min, 1 * MiB);
  EXPECT_EQ(s.len_p99, 1 * MiB);
}

TEST(FileStats, OneHole) {
  auto g = ZoneGeometry::uniform(1 * MiB, 8);
  auto s = file_stats(parse("A 0 0 4KiB -\nA 8KiB 4KiB 4KiB -\n#@size A 12KiB\n")[0], g);
  EXPECT_EQ(s.hole_count, 1u);
  EXPECT_EQ(s.hole_bytes, 4 * KiB);
  EXPECT_EQ(s.discontinuities, 0u);  // physically adjacent
}

TEST(FileStats, TrailingHoleAndEmptyFile) {
  auto g = ZoneGeometry::uniform(1 * MiB, 8);
  auto s = file_stats(parse("A 0 0 4KiB -\nA 4KiB 64KiB 4KiB -\n#@size A 16KiB\n")[0], g);
  EXPECT_EQ(s.hole_count, 1u);
  EXPECT_EQ(s.hole_bytes, 8 * KiB);
  EXPECT_EQ(s.discontinuities, 1u);

  FileMap empty{"e", 0, {}, 0};
  EXPECT_EQ(file_stats(empty, g), (FileStats{"e"}));
}

TEST(FileStats, PercentilesMatchCountingOracle) {
  std::mt19937_64 rng(5);
  auto g = ZoneGeometry::uniform(64 * MiB, 64);
  for (int round = 0; round < 200; ++round) {
    FileMap m{"r", 0, {}, 0};
    std::vector<uint64_t> lengths;
    uint64_t logical = 0, phys = 0;
    std::size_t n = 1 + rng() % 120;
    for (std::size_t i = 0; i < n; ++i) {
      uint64_t len = (1 + rng() % 300) * 4096;
      m.extents.push_back({"r", logical, phys, len, 0});
      lengths.push_back(len);
      logical += len + (rng() % 4 == 0 ? 4096 : 0);
      phys += len + (rng() % 3 == 0 ? 8192 : 0);
    }
    m.file_size = logical;
    auto s = file_stats(m, g);
    EXPECT_EQ(s.len_p50, oracle::percentile_by_counting(lengths, 50));
    EXPECT_EQ(s.len_p90, oracle::percentile_by_counting(lengths, 90));
    EXPECT_EQ(s.len_p99, oracle::percentile_by_counting(lengths, 99));
    EXPECT_EQ(s.len_min, *std::min_element(lengths.begin(), lengths.end()));
    EXPECT_EQ(s.len_max, *std::max_element(lengths.begin(), lengths.end()));
  }
}

// zones_spanned >= ceil(bytes / zone_size) for physically contiguous files.
TEST(FileStats, ZonesSpannedLowerBound) {
  std::mt19937_64 rng(8);
  auto g = ZoneGeometry::uniform(1 * MiB, 256);
  for (int round = 0; round < 500; ++round) {
    FileMap m{"c", 0, {}, 0};
    uint64_t phys = (rng() % 1024) * 4096;
    uint64_t logical = 0;
    std::size_t n = 1 + rng() % 10;
    for (std::size_t i = 0; i < n; ++i) {
      uint64_t len = (1 + rng() % 700) * 4096;
      m.extents.push_back({"c", logical, phys, len, 0});
      logical += len;
      phys += len;
    }
    m.file_size = logical;
    auto s = file_stats(m, g);
    EXPECT_EQ(s.discontinuities, 0u);
    EXPECT_GE(s.zones_spanned, (logical + g.zone_size - 1) / g.zone_size);
  }
}
