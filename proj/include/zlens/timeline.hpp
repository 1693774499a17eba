#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "zlens/snapshot.hpp"
#include "zlens/trace.hpp"
#include "zlens/zone_model.hpp"

namespace zlens::timeline {

// APP events are read from the canonical trace with these attrs:
//   files  comma list of file ids (inputs on COMPACTION_BEGIN, outputs on
//          COMPACTION_END, the created/deleted file otherwise)
//   level  LSM level
//   cid    correlation id pairing COMPACTION_BEGIN with COMPACTION_END
//   trivial=1 marks a trivial promotion (a move without rewrite)

enum class Kind : uint8_t { Event, Placement };

enum class LinkType : uint8_t {
  Pair,          // COMPACTION_END -> its COMPACTION_BEGIN
  SupersededBy,  // FILE_DELETE -> COMPACTION_END that consumed the file
};

std::string_view to_string(LinkType type);

struct Link {
  LinkType type = LinkType::Pair;
  std::size_t target = 0;  // index into Timeline::entries

  bool operator==(const Link&) const = default;
};

struct TimelineEntry {
  uint64_t ts_ns = 0;
  trace::Layer lane = trace::Layer::App;
  Kind kind = Kind::Event;
  trace::Op op = trace::Op::Flush;  // meaningful for Kind::Event
  std::vector<std::string> files;
  std::vector<uint64_t> zones;
  std::string label;
  std::vector<Link> links;
  std::optional<std::string> cid;
  std::optional<int> level;
  bool trivial = false;
  bool dangling = false;  // COMPACTION_BEGIN never closed
  bool orphan = false;    // COMPACTION_END with an unknown cid
  std::optional<std::size_t> source;  // index in the input event sequence

  std::string kind_name() const;
};

struct CompactionLineage {
  std::string cid;
  std::string output;
  std::vector<std::string> inputs;
  int level = 0;
  uint64_t ts_begin = 0;
  uint64_t ts_end = 0;
  std::size_t begin_entry = 0;
  std::size_t end_entry = 0;

  bool operator==(const CompactionLineage&) const = default;
};

struct Timeline {
  std::vector<TimelineEntry> entries;     // ordered by ts, stable
  std::vector<CompactionLineage> lineage;  // one per (compaction, output file); trivial moves excluded
  std::vector<std::string> warnings;

  /// (input, output) pairs of the lineage DAG.
  std::set<std::pair<std::string, std::string>> edges() const;
  /// File id -> cid of the compaction its delete entry links to.
  std::vector<std::pair<std::string, std::string>> delete_links() const;
};

/// One PLACEMENT entry per file whose zone set or hotness multiset differs
/// between the snapshots (including files present in only one).
std::vector<TimelineEntry> diff_snapshots(const Snapshot& a, const Snapshot& b, const zns::ZoneGeometry& geometry,
                                          uint64_t main_start);

Timeline build_timeline(std::span<const trace::TraceEvent> events, const zns::ZoneGeometry& geometry,
                        const SnapshotSeries* series = nullptr);

/// True when some file is its own ancestor in the lineage.
bool lineage_has_cycle(const Timeline& timeline);

/// One JSON line per entry (ts_ns, lane, kind, files, zones, label, links, flags).
void write_timeline(std::ostream& out, const Timeline& timeline);

}  // namespace zlens::timeline
