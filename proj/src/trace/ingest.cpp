#include <algorithm>
#include <cctype>
#include <string>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "zlens/text.hpp"
#include "zlens/trace.hpp"

namespace zlens::trace {

namespace {

constexpr std::array<std::string_view, kOpCount> kOpNames = {
    "READ",  "WRITE", "APPEND",          "RESET",          "OPEN",        "CLOSE",       "FINISH", "OFFLINE",
    "UNKNOWN_ZONE_ACTION", "FLUSH", "COMPACTION_BEGIN", "COMPACTION_END", "FILE_CREATE", "FILE_DELETE", "FSYNC",
};

using json = nlohmann::json;

uint64_t require_u64(const json& v, std::string_view field, std::size_t lineno) {
  if (!v.is_number_unsigned()) throw ParseError(lineno, fmt::format("field '{}' must be an unsigned integer", field));
  return v.get<uint64_t>();
}

}  // namespace

std::string_view to_string(Layer layer) {
  switch (layer) {
    case Layer::App: return "APP";
    case Layer::Fs: return "FS";
    case Layer::Dev: return "DEV";
  }
  return "?";
}

std::string_view to_string(Op op) { return kOpNames[static_cast<std::size_t>(op)]; }

std::optional<Layer> parse_layer(std::string_view token) {
  if (token == "APP") return Layer::App;
  if (token == "FS") return Layer::Fs;
  if (token == "DEV") return Layer::Dev;
  return std::nullopt;
}

std::optional<Op> parse_op(std::string_view token) {
  for (std::size_t i = 0; i < kOpNames.size(); ++i)
    if (kOpNames[i] == token) return static_cast<Op>(i);
  return std::nullopt;
}

std::optional<Op> classify_passthrough(std::string_view raw_op, std::optional<std::string_view> action) {
  static constexpr std::pair<std::string_view, Op> kDirect[] = {
      {"REQ_OP_READ", Op::Read},         {"REQ_OP_WRITE", Op::Write},        {"REQ_OP_ZONE_APPEND", Op::Append},
      {"REQ_OP_ZONE_RESET", Op::Reset},  {"REQ_OP_ZONE_OPEN", Op::Open},     {"REQ_OP_ZONE_CLOSE", Op::Close},
      {"REQ_OP_ZONE_FINISH", Op::Finish},
  };
  if (raw_op == "DRV_OUT" || raw_op == "REQ_OP_DRV_OUT") {
    if (!action) return Op::UnknownZoneAction;
    std::string lowered;
    for (char c : *action) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    static constexpr std::pair<std::string_view, Op> kNamed[] = {
        {"close", Op::Close}, {"finish", Op::Finish}, {"open", Op::Open}, {"reset", Op::Reset}, {"offline", Op::Offline},
    };
    for (auto [name, op] : kNamed)
      if (lowered == name) return op;
    auto code = text::parse_u64(lowered);
    if (!code) return Op::UnknownZoneAction;
    switch (static_cast<ZoneSendAction>(*code)) {
      case ZoneSendAction::Close: return Op::Close;
      case ZoneSendAction::Finish: return Op::Finish;
      case ZoneSendAction::Open: return Op::Open;
      case ZoneSendAction::Reset: return Op::Reset;
      case ZoneSendAction::Offline: return Op::Offline;
    }
    return Op::UnknownZoneAction;
  }
  for (auto [name, op] : kDirect)
    if (raw_op == name) return op;
  return parse_op(raw_op);
}

std::vector<TraceEvent> ingest(std::istream& in, const zns::ZoneGeometry& geometry, const IngestOptions& options) {
  std::vector<TraceEvent> events;
  std::string line;
  std::size_t lineno = 0;
  uint64_t max_ts = 0;
  bool reorder = false;

  while (std::getline(in, line)) {
    ++lineno;
    auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;

    json j;
    try {
      j = json::parse(body);
    } catch (const json::parse_error& e) {
      throw ParseError(lineno, std::string("malformed record: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(lineno, "record must be an object");

    TraceEvent ev;
    bool has_ts = false, has_layer = false, has_op = false;
    std::string raw_op;
    for (auto& [key, value] : j.items()) {
      if (key == "ts_ns") {
        ev.ts_ns = require_u64(value, key, lineno);
        has_ts = true;
      } else if (key == "layer") {
        auto l = value.is_string() ? parse_layer(value.get<std::string>()) : std::nullopt;
        if (!l) throw ParseError(lineno, "field 'layer' must be APP, FS or DEV");
        ev.layer = *l;
        has_layer = true;
      } else if (key == "op") {
        if (!value.is_string()) throw ParseError(lineno, "field 'op' must be a string");
        raw_op = value.get<std::string>();
        has_op = true;
      } else if (key == "addr") {
        ev.addr = require_u64(value, key, lineno);
      } else if (key == "len") {
        ev.len = require_u64(value, key, lineno);
      } else if (key == "zone") {
        ev.zone = require_u64(value, key, lineno);
      } else if (key == "attrs") {
        if (!value.is_object()) throw ParseError(lineno, "field 'attrs' must be an object");
        for (auto& [ak, av] : value.items()) {
          if (!av.is_string()) throw ParseError(lineno, fmt::format("attrs.{} must be a string", ak));
          ev.attrs.emplace(ak, av.get<std::string>());
        }
      } else {
        throw ParseError(lineno, fmt::format("unknown field '{}'", key));
      }
    }
    if (!has_ts || !has_layer || !has_op) throw ParseError(lineno, "ts_ns, layer and op are required");

    std::optional<std::string_view> action;
    if (auto it = ev.attrs.find("zsa"); it != ev.attrs.end()) action = it->second;
    auto op = classify_passthrough(raw_op, action);
    if (!op) throw ParseError(lineno, fmt::format("unknown op '{}'", raw_op));
    ev.op = *op;

    if (ev.layer == Layer::Dev) {
      if (is_data_op(ev.op)) {
        if (!ev.addr || !ev.len) throw ParseError(lineno, "device data ops need addr and len");
        if (*ev.addr >= geometry.span() || *ev.len > geometry.span() - *ev.addr)
          throw Error(ErrorCode::Range, fmt::format("line {}: [{:#x}, +{}) outside device span {}", lineno,
                                                    *ev.addr, *ev.len, geometry.span()));
      } else if (is_zone_mgmt_op(ev.op)) {
        if (!ev.zone && !ev.addr) throw ParseError(lineno, "zone management ops need zone or addr");
        if (ev.addr && *ev.addr >= geometry.span())
          throw Error(ErrorCode::Range, fmt::format("line {}: address {:#x} outside device span", lineno, *ev.addr));
      } else {
        throw ParseError(lineno, fmt::format("op {} is not a device op", to_string(ev.op)));
      }
      if (ev.addr) {
        uint64_t derived = *ev.addr / geometry.zone_size;
        if (ev.zone && *ev.zone != derived)
          throw Error(ErrorCode::Integrity, fmt::format("line {}: zone {} disagrees with address {:#x} (zone {})",
                                                        lineno, *ev.zone, *ev.addr, derived));
        ev.zone = derived;
      }
      if (*ev.zone >= geometry.nr_zones)
        throw Error(ErrorCode::Range, fmt::format("line {}: zone {} outside device ({} zones)", lineno, *ev.zone,
                                                  geometry.nr_zones));
    } else if (ev.addr || ev.zone) {
      throw ParseError(lineno, fmt::format("{} events carry no addr or zone", to_string(ev.layer)));
    }

    if (!events.empty()) {
      if (ev.ts_ns + options.skew_tolerance_ns < max_ts)
        throw ParseError(lineno, fmt::format("timestamp {} precedes {} by more than the {} ns tolerance", ev.ts_ns,
                                             max_ts, options.skew_tolerance_ns));
      if (ev.ts_ns < max_ts) reorder = true;
    }
    max_ts = std::max(max_ts, ev.ts_ns);
    events.push_back(std::move(ev));
  }

  if (reorder)
    std::stable_sort(events.begin(), events.end(),
                     [](const TraceEvent& a, const TraceEvent& b) { return a.ts_ns < b.ts_ns; });
  return events;
}

std::string to_json_line(const TraceEvent& ev) {
  nlohmann::ordered_json j;
  j["ts_ns"] = ev.ts_ns;
  j["layer"] = to_string(ev.layer);
  j["op"] = to_string(ev.op);
  if (ev.addr) j["addr"] = *ev.addr;
  if (ev.len) j["len"] = *ev.len;
  if (ev.zone) j["zone"] = *ev.zone;
  if (!ev.attrs.empty()) j["attrs"] = ev.attrs;
  return j.dump();
}

void write_trace(std::ostream& out, std::span<const TraceEvent> events) {
  for (const auto& ev : events) out << to_json_line(ev) << '\n';
}

}  // namespace zlens::trace
