#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "zlens/error.hpp"
#include "zlens/trace_event.hpp"

namespace zlens::zns {

inline constexpr uint64_t KiB = 1024;
inline constexpr uint64_t MiB = 1024 * KiB;
inline constexpr uint64_t GiB = 1024 * MiB;

/// Shape of a zoned device. All quantities are bytes except the counts.
struct ZoneGeometry {
  uint64_t block_size = 4 * KiB;
  uint64_t zone_size = 0;
  uint64_t zone_capacity = 0;
  uint64_t nr_zones = 0;
  std::optional<uint32_t> max_open_zones;  // nullopt == unlimited

  uint64_t span() const { return nr_zones * zone_size; }
  uint64_t zone_start(uint64_t zone) const { return zone * zone_size; }

  /// Throws Error(Config) when a geometry invariant does not hold.
  void validate() const;

  /// Convenience constructor with capacity == size and 4KiB blocks.
  static ZoneGeometry uniform(uint64_t zone_size, uint64_t nr_zones, uint64_t block_size = 4 * KiB);

  bool operator==(const ZoneGeometry&) const = default;
};

/// Reads the key=value geometry file. zone_capacity defaults to zone_size,
/// block_size to 4096, max_open_zones to unlimited ("0" or "unlimited").
/// Sizes accept plain bytes or a KiB/MiB/GiB suffix.
ZoneGeometry parse_geometry(std::istream& in);
ZoneGeometry load_geometry(const std::string& path);
void write_geometry(std::ostream& out, const ZoneGeometry& geometry);

/// Zone ordinal holding `addr`; throws Error(Range) outside the device span.
uint64_t addr_to_zone(const ZoneGeometry& geometry, uint64_t addr);

enum class ZoneCondition : uint8_t {
  Empty,
  ImplicitOpen,
  ExplicitOpen,
  Closed,
  Full,
  ReadOnly,
  Offline,
};

inline constexpr std::array kAllConditions = {
    ZoneCondition::Empty,  ZoneCondition::ImplicitOpen, ZoneCondition::ExplicitOpen,
    ZoneCondition::Closed, ZoneCondition::Full,         ZoneCondition::ReadOnly,
    ZoneCondition::Offline,
};

std::string_view to_string(ZoneCondition condition);

constexpr bool is_open(ZoneCondition c) {
  return c == ZoneCondition::ImplicitOpen || c == ZoneCondition::ExplicitOpen;
}

struct ZoneState {
  uint64_t index = 0;
  uint64_t start = 0;
  uint64_t write_pointer = 0;
  ZoneCondition condition = ZoneCondition::Empty;
  uint64_t reset_count = 0;

  bool operator==(const ZoneState&) const = default;
};

enum class CommandOp : uint8_t { Write, Append, Read, Reset, Open, Close, Finish };

inline constexpr std::array kAllCommandOps = {
    CommandOp::Write, CommandOp::Append, CommandOp::Read,  CommandOp::Reset,
    CommandOp::Open,  CommandOp::Close,  CommandOp::Finish,
};

std::string_view to_string(CommandOp op);
std::optional<CommandOp> parse_command_op(std::string_view token);

/// One host command. `target` is a byte address for write and read and a
/// zone index for everything else; `len` is only meaningful for data ops.
struct Command {
  uint64_t ts = 0;
  CommandOp op = CommandOp::Read;
  uint64_t target = 0;
  uint64_t len = 0;

  bool operator==(const Command&) const = default;
};

using WorkloadScript = std::vector<Command>;

/// Line format `<ts> <op> <zone|addr> <len>`; `#` comments allowed.
/// Timestamps must be strictly increasing.
WorkloadScript parse_script(std::istream& in);
void write_script(std::ostream& out, const WorkloadScript& script);

struct DeviceState {
  ZoneGeometry geometry;
  std::vector<ZoneState> zones;

  static DeviceState fresh(const ZoneGeometry& geometry);

  uint64_t open_zone_count() const;

  /// Device-initiated transitions (media failure); not reachable through
  /// host commands.
  void mark_read_only(uint64_t zone);
  void mark_offline(uint64_t zone);

  bool operator==(const DeviceState&) const = default;
};

struct Transition {
  DeviceState next;
  std::optional<uint64_t> assigned_addr;  // set for append
};

/// Pure transition: returns the successor state, throws Error with one of
/// the zone-machine codes when the command is rejected.
Transition apply(const DeviceState& state, const Command& command);

/// In-place form of apply(); leaves `state` untouched when it throws.
std::optional<uint64_t> apply_in_place(DeviceState& state, const Command& command);

/// Counters the simulator keeps for itself while it runs a script. They are
/// maintained independently from trace aggregation so the two can be
/// compared.
struct SimCounters {
  std::vector<std::array<uint64_t, trace::kOpCount>> op_counts;
  std::vector<uint64_t> bytes_written;
  std::vector<uint64_t> bytes_read;
  std::vector<uint64_t> resets;
};

struct SimulationResult {
  DeviceState final_state;
  std::vector<trace::TraceEvent> events;
  SimCounters counters;
};

class ScriptError : public Error {
 public:
  ScriptError(std::size_t command_index, const Error& cause);

  std::size_t command_index() const noexcept { return index_; }
  ErrorCode cause() const noexcept { return cause_; }

 private:
  std::size_t index_;
  ErrorCode cause_;
};

/// Runs every command through apply(); the first rejected command aborts
/// with ScriptError naming its index.
SimulationResult run_script(const ZoneGeometry& geometry, const WorkloadScript& script);

/// Deterministic generator of always-valid scripts.
WorkloadScript random_valid_script(const ZoneGeometry& geometry, std::size_t length, uint64_t seed);

}  // namespace zlens::zns
