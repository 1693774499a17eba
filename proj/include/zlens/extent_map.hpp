#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "zlens/zone_model.hpp"

namespace zlens::extent {

enum ExtentFlag : uint32_t {
  kLast = 1u << 0,
  kUnwritten = 1u << 1,
  kMerged = 1u << 2,
};

struct Extent {
  std::string file_id;
  uint64_t logical_offset = 0;
  uint64_t physical_start = 0;
  uint64_t length = 0;
  uint32_t flags = 0;

  uint64_t logical_end() const { return logical_offset + length; }
  uint64_t physical_end() const { return physical_start + length; }
  bool unwritten() const { return (flags & kUnwritten) != 0; }

  bool operator==(const Extent&) const = default;
};

struct FileMap {
  std::string file_id;
  uint64_t file_size = 0;
  std::vector<Extent> extents;  // sorted by logical_offset
  uint64_t snapshot_ts = 0;

  bool operator==(const FileMap&) const = default;
};

using FileMaps = std::vector<FileMap>;

// ---------------------------------------------------------------------------
// Extent dump format, one extent per line:
//
//   <file_id> <logical_offset> <physical_start> <length> <flags>
//
// flags is `-` or a comma list of LAST, UNWRITTEN, MERGED. Numbers are bytes
// (decimal, 0x-hex, or with a KiB/MiB/GiB suffix). `#` starts a comment.
// Two comment-shaped pragmas carry metadata that extent records cannot:
//
//   #@size <file_id> <bytes>   file size (default: end of the last extent)
//   #@ts <value>               capture timestamp for every map in the dump
// ---------------------------------------------------------------------------

/// Parses a dump. Files keep their order of first appearance.
/// Malformed lines raise ParseError; duplicate or overlapping logical
/// ranges within a file raise Error(Integrity).
FileMaps load_extent_dump(std::istream& in);
FileMaps load_extent_dump_file(const std::string& path);
void write_extent_dump(std::ostream& out, const FileMaps& maps);

std::string format_flags(uint32_t flags);

/// One piece of an extent that lies inside a single zone.
struct Slice {
  std::string file_id;
  uint64_t logical_offset = 0;
  uint64_t physical_start = 0;
  uint64_t length = 0;

  bool operator==(const Slice&) const = default;
};

struct ZonePlacement {
  std::map<uint64_t, std::vector<Slice>> zones;

  uint64_t total_bytes() const;
  bool operator==(const ZonePlacement&) const = default;
};

/// Splits written extents at zone boundaries. UNWRITTEN extents are skipped.
/// Throws Error(Range) naming the file and extent when one leaves the
/// device span.
ZonePlacement map_to_zones(const zns::ZoneGeometry& geometry, const FileMaps& maps);

/// Turns placement slices back into FileMaps (one extent per slice).
FileMaps placement_to_maps(const ZonePlacement& placement);

void write_placement_csv(std::ostream& out, const ZonePlacement& placement);

struct FileStats {
  std::string file_id;
  uint64_t file_size = 0;
  uint64_t extent_count = 0;
  uint64_t len_min = 0;
  uint64_t len_max = 0;
  double len_mean = 0.0;
  uint64_t len_p50 = 0;
  uint64_t len_p90 = 0;
  uint64_t len_p99 = 0;
  uint64_t hole_count = 0;
  uint64_t hole_bytes = 0;
  uint64_t discontinuities = 0;
  uint64_t zones_spanned = 0;

  bool operator==(const FileStats&) const = default;
};

/// Nearest-rank percentile of an ascending-sorted sample; 0 for empty.
uint64_t nearest_rank(std::span<const uint64_t> sorted, unsigned percent);

FileStats file_stats(const FileMap& map, const zns::ZoneGeometry& geometry);

void write_stats_csv(std::ostream& out, std::span<const FileStats> stats);
void write_stats_report(std::ostream& out, std::span<const FileStats> stats, const ZonePlacement& placement);

}  // namespace zlens::extent
