#include <random>
#include <string>

#include <fmt/core.h>

#include "zlens/text.hpp"
#include "zlens/zone_model.hpp"

namespace zlens::zns {

WorkloadScript parse_script(std::istream& in) {
  WorkloadScript script;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto f = text::split_ws(body);
    if (f.size() != 3 && f.size() != 4) throw ParseError(lineno, "expected '<ts> <op> <zone|addr> [<len>]'");
    Command c;
    auto ts = text::parse_u64(f[0]);
    auto op = parse_command_op(f[1]);
    auto target = text::parse_size(f[2]);
    if (!ts) throw ParseError(lineno, fmt::format("bad timestamp '{}'", f[0]));
    if (!op) throw ParseError(lineno, fmt::format("unknown op '{}'", f[1]));
    if (!target) throw ParseError(lineno, fmt::format("bad zone/address '{}'", f[2]));
    c.ts = *ts;
    c.op = *op;
    c.target = *target;
    if (f.size() == 4) {
      auto len = text::parse_size(f[3]);
      if (!len) throw ParseError(lineno, fmt::format("bad length '{}'", f[3]));
      c.len = *len;
    }
    if (!script.empty() && c.ts <= script.back().ts)
      throw ParseError(lineno, fmt::format("timestamp {} not after {}", c.ts, script.back().ts));
    script.push_back(c);
  }
  return script;
}

void write_script(std::ostream& out, const WorkloadScript& script) {
  for (const auto& c : script) out << c.ts << ' ' << to_string(c.op) << ' ' << c.target << ' ' << c.len << '\n';
}

ScriptError::ScriptError(std::size_t command_index, const Error& cause)
    : Error(cause.code(), fmt::format("command #{}: {}", command_index, cause.what())),
      index_(command_index),
      cause_(cause.code()) {}

namespace {

trace::Op trace_op(CommandOp op) {
  switch (op) {
    case CommandOp::Write: return trace::Op::Write;
    case CommandOp::Append: return trace::Op::Append;
    case CommandOp::Read: return trace::Op::Read;
    case CommandOp::Reset: return trace::Op::Reset;
    case CommandOp::Open: return trace::Op::Open;
    case CommandOp::Close: return trace::Op::Close;
    case CommandOp::Finish: return trace::Op::Finish;
  }
  return trace::Op::Read;
}

}  // namespace

SimulationResult run_script(const ZoneGeometry& geometry, const WorkloadScript& script) {
  SimulationResult r;
  r.final_state = DeviceState::fresh(geometry);
  const auto n = geometry.nr_zones;
  r.counters.op_counts.assign(n, {});
  r.counters.bytes_written.assign(n, 0);
  r.counters.bytes_read.assign(n, 0);
  r.counters.resets.assign(n, 0);
  r.events.reserve(script.size());

  for (std::size_t i = 0; i < script.size(); ++i) {
    const Command& c = script[i];
    std::optional<uint64_t> assigned;
    try {
      assigned = apply_in_place(r.final_state, c);
    } catch (const Error& e) {
      throw ScriptError(i, e);
    }

    trace::TraceEvent ev;
    ev.ts_ns = c.ts;
    ev.layer = trace::Layer::Dev;
    ev.op = trace_op(c.op);
    uint64_t zone = 0;
    switch (c.op) {
      case CommandOp::Write:
      case CommandOp::Read:
        zone = c.target / geometry.zone_size;
        ev.addr = c.target;
        ev.len = c.len;
        break;
      case CommandOp::Append:
        zone = c.target;
        ev.addr = *assigned;
        ev.len = c.len;
        break;
      default:
        zone = c.target;
        break;
    }
    ev.zone = zone;
    r.events.push_back(std::move(ev));

    auto& counts = r.counters.op_counts[zone];
    ++counts[static_cast<std::size_t>(trace_op(c.op))];
    if (c.op == CommandOp::Write || c.op == CommandOp::Append) r.counters.bytes_written[zone] += c.len;
    if (c.op == CommandOp::Read) r.counters.bytes_read[zone] += c.len;
    if (c.op == CommandOp::Reset) ++r.counters.resets[zone];
  }
  return r;
}

WorkloadScript random_valid_script(const ZoneGeometry& geometry, std::size_t length, uint64_t seed) {
  // Raw engine output only: distribution objects are not portable across
  // standard libraries and fixtures must be byte-stable.
  std::mt19937_64 rng(seed);
  auto below = [&](uint64_t n) { return n == 0 ? 0 : rng() % n; };

  DeviceState state = DeviceState::fresh(geometry);
  WorkloadScript script;
  script.reserve(length);
  uint64_t ts = 0;
  const uint64_t bs = geometry.block_size;
  const uint64_t cap_blocks = geometry.zone_capacity / bs;

  auto pick_len = [&](uint64_t max_blocks) {
    // Mostly small I/O with an occasional large request to populate the
    // upper histogram buckets.
    uint64_t limit = below(8) == 0 ? max_blocks : std::min<uint64_t>(max_blocks, 64);
    return (1 + below(limit)) * bs;
  };

  while (script.size() < length) {
    ts += 1 + below(1000);
    uint64_t zi = below(geometry.nr_zones);
    const ZoneState& z = state.zones[zi];
    uint64_t roll = below(100);
    Command c{ts, CommandOp::Reset, zi, 0};
    uint64_t remaining = (z.start + geometry.zone_capacity - z.write_pointer) / bs;
    if (roll < 35 && remaining > 0) {
      c = {ts, CommandOp::Write, z.write_pointer, pick_len(remaining)};
    } else if (roll < 60 && remaining > 0) {
      c = {ts, CommandOp::Append, zi, pick_len(remaining)};
    } else if (roll < 75) {
      uint64_t off = below(cap_blocks);
      uint64_t max_len = std::min<uint64_t>(cap_blocks - off, 256);
      c = {ts, CommandOp::Read, z.start + off * bs, (1 + below(max_len)) * bs};
    } else if (roll < 82) {
      c = {ts, CommandOp::Open, zi, 0};
    } else if (roll < 90) {
      c = {ts, CommandOp::Close, zi, 0};
    } else if (roll < 94) {
      c = {ts, CommandOp::Finish, zi, 0};
    }
    try {
      apply_in_place(state, c);
    } catch (const Error&) {
      // Fallbacks that are valid in every host-reachable condition.
      c = {ts, CommandOp::Reset, zi, 0};
      apply_in_place(state, c);
    }
    script.push_back(c);
  }
  return script;
}

}  // namespace zlens::zns
