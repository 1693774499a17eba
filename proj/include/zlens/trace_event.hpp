#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace zlens::trace {

enum class Layer : uint8_t { App, Fs, Dev };

// OFFLINE and UNKNOWN_ZONE_ACTION come only out of passthrough decoding.
enum class Op : uint8_t {
  Read,
  Write,
  Append,
  Reset,
  Open,
  Close,
  Finish,
  Offline,
  UnknownZoneAction,
  Flush,
  CompactionBegin,
  CompactionEnd,
  FileCreate,
  FileDelete,
  Fsync,
};

inline constexpr std::size_t kOpCount = 15;

std::string_view to_string(Layer layer);
std::string_view to_string(Op op);
std::optional<Layer> parse_layer(std::string_view token);
std::optional<Op> parse_op(std::string_view token);

constexpr bool is_data_op(Op op) { return op == Op::Read || op == Op::Write || op == Op::Append; }

constexpr bool is_zone_mgmt_op(Op op) {
  return op == Op::Reset || op == Op::Open || op == Op::Close || op == Op::Finish ||
         op == Op::Offline || op == Op::UnknownZoneAction;
}

struct TraceEvent {
  uint64_t ts_ns = 0;
  Layer layer = Layer::Dev;
  Op op = Op::Read;
  std::optional<uint64_t> addr;
  std::optional<uint64_t> len;
  std::optional<uint64_t> zone;
  std::map<std::string, std::string> attrs;

  bool operator==(const TraceEvent&) const = default;
};

}  // namespace zlens::trace
