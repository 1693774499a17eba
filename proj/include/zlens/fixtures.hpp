#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "zlens/extent_map.hpp"
#include "zlens/f2fs.hpp"
#include "zlens/snapshot.hpp"
#include "zlens/trace.hpp"
#include "zlens/zone_model.hpp"

// Deterministic desk-scale inputs. Each generator also returns the ground
// truth it was built to.
namespace zlens::fixtures {

/// 64 zones x 64MiB; zone 2 takes a warm-node-like reset storm (40 resets)
/// while the rest cycle 3-5 times and four zones are never reset.
struct ResetSkew {
  zns::ZoneGeometry geometry;
  std::vector<trace::TraceEvent> events;
  std::vector<uint64_t> expected_resets;  // per zone
};
ResetSkew reset_skew();

/// Device and F2FS layout shared by the placement fixtures: 32 zones of
/// 8MiB, main area at 16MiB (so zone = 2 + segment / 4).
zns::ZoneGeometry placement_geometry();
inline constexpr uint64_t kPlacementMainStart = 16 * zns::MiB;

struct GroupingCase {
  zns::ZoneGeometry geometry;
  uint64_t main_start = kPlacementMainStart;
  extent::FileMaps maps;
  std::vector<f2fs::SegmentRecord> segments;
  std::vector<trace::TraceEvent> events;  // FS writes/fsyncs plus DEV writes
};

/// SSTable written as 4MiB of WARM_DATA, fsync, then a 4KiB footer that
/// F2FS placed in a HOT_DATA segment, fsync.
GroupingCase sstable_footer();
/// Same write pattern with the footer kept in the file's WARM_DATA segment.
GroupingCase sstable_clean();

/// Two snapshots: a HOT_DATA file and a WARM_DATA file relocated by GC into
/// the same COLD_DATA segment; a third file does not move.
struct GcCase {
  zns::ZoneGeometry geometry;
  SnapshotSeries series;
  std::vector<std::string> moved;  // sorted
};
GcCase gc_reclassification();

/// Bulk placement change: `files` files, of which `moved` relocate.
struct MoveCase {
  zns::ZoneGeometry geometry;
  Snapshot before;
  Snapshot after;
  std::set<std::string> moved;
};
MoveCase bulk_moves(std::size_t files, std::size_t moved, uint64_t seed);

/// APP-level compaction stream with its lineage DAG and delete links.
struct CompactionCase {
  zns::ZoneGeometry geometry;
  std::vector<trace::TraceEvent> events;
  std::set<std::pair<std::string, std::string>> edges;           // (input, output)
  std::vector<std::pair<std::string, std::string>> delete_links;  // (file, cid), sorted
};

/// flush -> 31; (31,33,34) -> 37; (37,35,38) -> {41,42}; inputs deleted
/// after each compaction; one trivial promotion of 36.
CompactionCase lsm_compactions();

/// k compactions with overlapping lifetimes.
CompactionCase random_compactions(std::size_t k, uint64_t seed);

/// Writes every fixture under `dir` and returns the relative paths written.
std::vector<std::string> write_all(const std::filesystem::path& dir);

}  // namespace zlens::fixtures
