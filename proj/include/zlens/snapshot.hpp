#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zlens/extent_map.hpp"
#include "zlens/f2fs.hpp"
#include "zlens/zone_model.hpp"

namespace zlens {

/// One capture of file placement and segment hotness.
struct Snapshot {
  uint64_t ts = 0;
  extent::FileMaps maps;
  std::vector<f2fs::SegmentRecord> segments;  // may be empty
};

struct SnapshotSeries {
  uint64_t main_start = 0;  // byte address of the F2FS main area
  std::vector<Snapshot> snapshots;  // strictly increasing ts
};

// ---------------------------------------------------------------------------
// Series file, one capture per line:
//
//   <ts> <extent-dump> <segment-info | ->
//
// Paths are relative to the series file. `#@main_start <bytes>` sets the
// main-area start used to place segments (default 0).
// ---------------------------------------------------------------------------

SnapshotSeries load_snapshot_series(const std::string& path, const zns::ZoneGeometry& geometry);

/// Throws Error(Integrity) unless timestamps strictly increase.
void validate_series(const SnapshotSeries& series);

}  // namespace zlens
