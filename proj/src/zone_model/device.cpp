#include <fmt/core.h>

#include "zlens/zone_model.hpp"

namespace zlens::zns {

std::string_view to_string(ZoneCondition condition) {
  switch (condition) {
    case ZoneCondition::Empty: return "EMPTY";
    case ZoneCondition::ImplicitOpen: return "IMPLICIT_OPEN";
    case ZoneCondition::ExplicitOpen: return "EXPLICIT_OPEN";
    case ZoneCondition::Closed: return "CLOSED";
    case ZoneCondition::Full: return "FULL";
    case ZoneCondition::ReadOnly: return "READ_ONLY";
    case ZoneCondition::Offline: return "OFFLINE";
  }
  return "?";
}

std::string_view to_string(CommandOp op) {
  switch (op) {
    case CommandOp::Write: return "write";
    case CommandOp::Append: return "append";
    case CommandOp::Read: return "read";
    case CommandOp::Reset: return "reset";
    case CommandOp::Open: return "open";
    case CommandOp::Close: return "close";
    case CommandOp::Finish: return "finish";
  }
  return "?";
}

std::optional<CommandOp> parse_command_op(std::string_view token) {
  for (auto op : kAllCommandOps)
    if (to_string(op) == token) return op;
  return std::nullopt;
}

DeviceState DeviceState::fresh(const ZoneGeometry& geometry) {
  geometry.validate();
  DeviceState s;
  s.geometry = geometry;
  s.zones.reserve(geometry.nr_zones);
  for (uint64_t i = 0; i < geometry.nr_zones; ++i) {
    uint64_t start = geometry.zone_start(i);
    s.zones.push_back(ZoneState{i, start, start, ZoneCondition::Empty, 0});
  }
  return s;
}

uint64_t DeviceState::open_zone_count() const {
  uint64_t n = 0;
  for (const auto& z : zones) n += is_open(z.condition) ? 1 : 0;
  return n;
}

void DeviceState::mark_read_only(uint64_t zone) { zones.at(zone).condition = ZoneCondition::ReadOnly; }

void DeviceState::mark_offline(uint64_t zone) { zones.at(zone).condition = ZoneCondition::Offline; }

namespace {

[[noreturn]] void reject(ErrorCode code, const ZoneState& z, const Command& c, std::string_view why) {
  throw Error(code, fmt::format("{} on zone {} ({}, wp={:#x}): {}", to_string(c.op), z.index,
                                to_string(z.condition), z.write_pointer, why));
}

ZoneState& zone_for_index(DeviceState& s, const Command& c) {
  if (c.target >= s.zones.size())
    throw Error(ErrorCode::Range,
                fmt::format("{}: zone {} does not exist (device has {})", to_string(c.op), c.target, s.zones.size()));
  return s.zones[c.target];
}

ZoneState& zone_for_addr(DeviceState& s, const Command& c) {
  return s.zones[addr_to_zone(s.geometry, c.target)];
}

bool accessible(ZoneCondition c) { return c != ZoneCondition::ReadOnly && c != ZoneCondition::Offline; }

// Transition to an open condition, consuming an open-zone slot when the
// zone was not already open.
void open_zone(DeviceState& s, ZoneState& z, const Command& c, ZoneCondition target) {
  if (!is_open(z.condition) && s.geometry.max_open_zones && s.open_zone_count() >= *s.geometry.max_open_zones)
    reject(ErrorCode::TooManyOpen, z, c, fmt::format("limit of {} open zones reached", *s.geometry.max_open_zones));
  z.condition = target;
}

// Shared write/append path once the target address is fixed.
void write_at_pointer(DeviceState& s, ZoneState& z, const Command& c) {
  const uint64_t end = z.start + s.geometry.zone_capacity;
  if (c.len == 0 || c.len % s.geometry.block_size != 0)
    reject(ErrorCode::UnalignedWrite, z, c, fmt::format("length {} is not a positive block multiple", c.len));
  if (z.write_pointer + c.len > end)
    reject(ErrorCode::ZoneBoundary, z, c,
           fmt::format("{} bytes exceed remaining capacity {}", c.len, end - z.write_pointer));
  if (!is_open(z.condition)) open_zone(s, z, c, ZoneCondition::ImplicitOpen);
  z.write_pointer += c.len;
  if (z.write_pointer == end) z.condition = ZoneCondition::Full;
}

}  // namespace

std::optional<uint64_t> apply_in_place(DeviceState& s, const Command& c) {
  switch (c.op) {
    case CommandOp::Write: {
      ZoneState& z = zone_for_addr(s, c);
      ZoneState saved = z;
      if (!accessible(z.condition)) reject(ErrorCode::ZoneInaccessible, z, c, "zone not writable");
      if (z.condition == ZoneCondition::Full) reject(ErrorCode::ZoneBoundary, z, c, "zone is full");
      if (c.target != z.write_pointer)
        reject(ErrorCode::UnalignedWrite, z, c, fmt::format("write at {:#x} is not at the write pointer", c.target));
      try {
        write_at_pointer(s, z, c);
      } catch (...) {
        z = saved;
        throw;
      }
      return std::nullopt;
    }
    case CommandOp::Append: {
      ZoneState& z = zone_for_index(s, c);
      if (!accessible(z.condition)) reject(ErrorCode::ZoneInaccessible, z, c, "zone not writable");
      if (z.condition == ZoneCondition::Full) reject(ErrorCode::ZoneBoundary, z, c, "zone is full");
      ZoneState saved = z;
      uint64_t assigned = z.write_pointer;
      try {
        write_at_pointer(s, z, c);
      } catch (...) {
        z = saved;
        throw;
      }
      return assigned;
    }
    case CommandOp::Read: {
      ZoneState& z = zone_for_addr(s, c);
      if (c.len > s.geometry.span() - c.target)
        throw Error(ErrorCode::Range, fmt::format("read [{:#x}, +{}) leaves the device span", c.target, c.len));
      if (z.condition == ZoneCondition::Offline) reject(ErrorCode::ZoneInaccessible, z, c, "zone is offline");
      return std::nullopt;
    }
    case CommandOp::Reset: {
      ZoneState& z = zone_for_index(s, c);
      if (!accessible(z.condition)) reject(ErrorCode::ZoneInaccessible, z, c, "zone cannot be reset");
      z.condition = ZoneCondition::Empty;
      z.write_pointer = z.start;
      ++z.reset_count;
      return std::nullopt;
    }
    case CommandOp::Open: {
      ZoneState& z = zone_for_index(s, c);
      if (!accessible(z.condition)) reject(ErrorCode::ZoneInaccessible, z, c, "zone cannot be opened");
      if (z.condition == ZoneCondition::Full) reject(ErrorCode::InvalidTransition, z, c, "full zone cannot be opened");
      open_zone(s, z, c, ZoneCondition::ExplicitOpen);
      return std::nullopt;
    }
    case CommandOp::Close: {
      ZoneState& z = zone_for_index(s, c);
      if (!accessible(z.condition)) reject(ErrorCode::ZoneInaccessible, z, c, "zone cannot be closed");
      if (z.condition == ZoneCondition::Empty || z.condition == ZoneCondition::Full)
        reject(ErrorCode::InvalidTransition, z, c, "only open zones can be closed");
      if (is_open(z.condition))
        z.condition = z.write_pointer == z.start ? ZoneCondition::Empty : ZoneCondition::Closed;
      return std::nullopt;
    }
    case CommandOp::Finish: {
      ZoneState& z = zone_for_index(s, c);
      if (!accessible(z.condition)) reject(ErrorCode::ZoneInaccessible, z, c, "zone cannot be finished");
      z.condition = ZoneCondition::Full;
      z.write_pointer = z.start + s.geometry.zone_capacity;
      return std::nullopt;
    }
  }
  throw Error(ErrorCode::Parse, "unknown command");
}

Transition apply(const DeviceState& state, const Command& command) {
  Transition t{state, std::nullopt};
  t.assigned_addr = apply_in_place(t.next, command);
  return t;
}

}  // namespace zlens::zns
