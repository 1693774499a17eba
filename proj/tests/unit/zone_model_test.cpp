#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "zlens/zone_model.hpp"
#include "zns_table.hpp"

using namespace zlens;
using namespace zlens::zns;

namespace {

ErrorCode code_of(const DeviceState& s, const Command& c) {
  try {
    apply(s, c);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "command was accepted";
  return ErrorCode::Parse;
}

}  // namespace

TEST(Geometry, AddrToZoneOneMiBZones) {
  auto g = ZoneGeometry::uniform(1 * MiB, 8);
  EXPECT_EQ(addr_to_zone(g, 0), 0u);
  EXPECT_EQ(addr_to_zone(g, 1 * MiB - 1), 0u);
  EXPECT_EQ(addr_to_zone(g, 1 * MiB), 1u);
}

TEST(Geometry, LastByteOfLastZone) {
  auto g = ZoneGeometry::uniform(64 * MiB, 64);
  EXPECT_EQ(g.span(), 4 * GiB);
  EXPECT_EQ(addr_to_zone(g, 4 * GiB - 1), 63u);
}

TEST(Geometry, OutOfRangeNamesSpan) {
  auto g = ZoneGeometry::uniform(1 * MiB, 4);
  try {
    addr_to_zone(g, 4 * MiB);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Range);
    EXPECT_NE(std::string(e.what()).find("4194304"), std::string::npos);
  }
}

TEST(Geometry, BruteForceEveryBlock) {
  ZoneGeometry g;
  g.block_size = 4 * KiB;
  g.zone_size = 96 * KiB;
  g.zone_capacity = 64 * KiB;
  g.nr_zones = 7;
  g.validate();
  for (uint64_t addr = 0; addr < g.span(); addr += g.block_size) {
    uint64_t z = addr_to_zone(g, addr);
    EXPECT_LE(g.zone_start(z), addr);
    EXPECT_LT(addr, g.zone_start(z) + g.zone_size);
  }
}

TEST(Geometry, ParseDefaultsAndValidation) {
  std::istringstream in("zone_size=64MiB\nnr_zones=64\n");
  auto g = parse_geometry(in);
  EXPECT_EQ(g.block_size, 4096u);
  EXPECT_EQ(g.zone_capacity, 64 * MiB);
  EXPECT_FALSE(g.max_open_zones.has_value());

  std::istringstream bad("zone_size=64MiB\nzone_capacity=128MiB\nnr_zones=2\n");
  EXPECT_THROW(parse_geometry(bad), Error);
  std::istringstream unknown("zone_size=1MiB\nnr_zones=2\ncolour=blue\n");
  EXPECT_THROW(parse_geometry(unknown), Error);

  std::ostringstream out;
  write_geometry(out, g);
  std::istringstream back(out.str());
  EXPECT_EQ(parse_geometry(back), g);
}

TEST(Device, AppendOnEmptyReturnsZoneStart) {
  auto s = DeviceState::fresh(ZoneGeometry::uniform(1 * MiB, 4));
  auto t = apply(s, {1, CommandOp::Append, 2, 8 * KiB});
  ASSERT_TRUE(t.assigned_addr);
  EXPECT_EQ(*t.assigned_addr, 2 * MiB);
  EXPECT_EQ(t.next.zones[2].write_pointer, 2 * MiB + 8 * KiB);
  EXPECT_EQ(t.next.zones[2].condition, ZoneCondition::ImplicitOpen);
  // The input value is untouched.
  EXPECT_EQ(s.zones[2].write_pointer, 2 * MiB);
}

TEST(Device, WritePastCapacityIsZoneBoundary) {
  auto g = ZoneGeometry::uniform(1 * MiB, 2);
  auto s = DeviceState::fresh(g);
  s = apply(s, {1, CommandOp::Write, 0, 1 * MiB - 4 * KiB}).next;
  EXPECT_EQ(code_of(s, {2, CommandOp::Write, 1 * MiB - 4 * KiB, 8 * KiB}), ErrorCode::ZoneBoundary);
}

TEST(Device, ResetFullZone) {
  auto s = DeviceState::fresh(ZoneGeometry::uniform(1 * MiB, 2));
  s = apply(s, {1, CommandOp::Finish, 1, 0}).next;
  ASSERT_EQ(s.zones[1].condition, ZoneCondition::Full);
  s = apply(s, {2, CommandOp::Reset, 1, 0}).next;
  EXPECT_EQ(s.zones[1].condition, ZoneCondition::Empty);
  EXPECT_EQ(s.zones[1].write_pointer, 1 * MiB);
  EXPECT_EQ(s.zones[1].reset_count, 1u);
}

TEST(Device, UnalignedWrite) {
  auto s = DeviceState::fresh(ZoneGeometry::uniform(1 * MiB, 2));
  EXPECT_EQ(code_of(s, {1, CommandOp::Write, 4 * KiB, 4 * KiB}), ErrorCode::UnalignedWrite);
}

TEST(Device, MaxOpenZones) {
  auto g = ZoneGeometry::uniform(1 * MiB, 4);
  g.max_open_zones = 2;
  auto s = DeviceState::fresh(g);
  s = apply(s, {1, CommandOp::Open, 0, 0}).next;
  s = apply(s, {2, CommandOp::Append, 1, 4 * KiB}).next;
  EXPECT_EQ(code_of(s, {3, CommandOp::Append, 2, 4 * KiB}), ErrorCode::TooManyOpen);
  // Already-open zones do not need another slot.
  EXPECT_NO_THROW(apply(s, {3, CommandOp::Append, 1, 4 * KiB}));
  s = apply(s, {4, CommandOp::Close, 1, 0}).next;
  EXPECT_EQ(s.zones[1].condition, ZoneCondition::Closed);
  EXPECT_NO_THROW(apply(s, {5, CommandOp::Open, 2, 0}));
}

TEST(Device, InaccessibleZones) {
  auto s = DeviceState::fresh(ZoneGeometry::uniform(1 * MiB, 2));
  s.mark_read_only(0);
  s.mark_offline(1);
  EXPECT_EQ(code_of(s, {1, CommandOp::Append, 0, 4 * KiB}), ErrorCode::ZoneInaccessible);
  EXPECT_EQ(code_of(s, {1, CommandOp::Reset, 0, 0}), ErrorCode::ZoneInaccessible);
  EXPECT_NO_THROW(apply(s, {1, CommandOp::Read, 0, 4 * KiB}));
  EXPECT_EQ(code_of(s, {1, CommandOp::Read, 1 * MiB, 4 * KiB}), ErrorCode::ZoneInaccessible);
}

TEST(Script, ParseRejectsNonIncreasingTimestamps) {
  std::istringstream ok("# comment\n1 append 0 4096\n2 reset 0\n");
  auto script = parse_script(ok);
  ASSERT_EQ(script.size(), 2u);
  EXPECT_EQ(script[1].op, CommandOp::Reset);

  std::istringstream bad("5 append 0 4096\n5 reset 0 0\n");
  try {
    parse_script(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Script, ThreeResetsOnZoneTwo) {
  auto g = ZoneGeometry::uniform(1 * MiB, 4);
  WorkloadScript script = {{1, CommandOp::Reset, 2, 0}, {2, CommandOp::Reset, 2, 0}, {3, CommandOp::Reset, 2, 0}};
  auto r = run_script(g, script);
  EXPECT_EQ(r.final_state.zones[2].reset_count, 3u);
  EXPECT_EQ(r.counters.resets[2], 3u);
  EXPECT_EQ(r.events.size(), 3u);
}

TEST(Script, ErrorNamesCommandIndex) {
  auto g = ZoneGeometry::uniform(1 * MiB, 4);
  WorkloadScript script = {{1, CommandOp::Append, 0, 4 * KiB}, {2, CommandOp::Write, 0, 4 * KiB}};
  try {
    run_script(g, script);
    FAIL();
  } catch (const ScriptError& e) {
    EXPECT_EQ(e.command_index(), 1u);
    EXPECT_EQ(e.cause(), ErrorCode::UnalignedWrite);
  }
}

// Randomized state-machine test: arbitrary (possibly invalid) commands,
// checking the invariants after every accepted one.
TEST(Device, RandomizedInvariants) {
  ZoneGeometry g;
  g.zone_size = 256 * KiB;
  g.zone_capacity = 192 * KiB;
  g.nr_zones = 6;
  g.max_open_zones = 3;
  std::mt19937_64 rng(42);
  for (int round = 0; round < 20; ++round) {
    auto s = DeviceState::fresh(g);
    // Accepted data writes per zone since the last reset, in order.
    std::vector<std::vector<std::pair<uint64_t, uint64_t>>> writes(g.nr_zones);
    for (int i = 0; i < 2000; ++i) {
      Command c;
      c.ts = static_cast<uint64_t>(i + 1);
      c.op = kAllCommandOps[rng() % kAllCommandOps.size()];
      uint64_t zone = rng() % g.nr_zones;
      uint64_t blocks = 1 + rng() % 20;
      c.len = blocks * g.block_size;
      if (c.op == CommandOp::Write || c.op == CommandOp::Read) {
        // Half the time aim at the write pointer.
        c.target = (rng() % 2) ? s.zones[zone].write_pointer : g.zone_start(zone) + (rng() % 48) * g.block_size;
        if (c.target >= g.span()) c.target = g.zone_start(zone);
      } else {
        c.target = zone;
      }
      DeviceState before = s;
      std::optional<uint64_t> assigned;
      try {
        assigned = apply_in_place(s, c);
      } catch (const Error&) {
        ASSERT_EQ(s, before) << "rejected command mutated state";
        continue;
      }
      for (std::size_t z = 0; z < g.nr_zones; ++z) {
        const auto& zs = s.zones[z];
        const auto& bz = before.zones[z];
        ASSERT_NE(std::find(kAllConditions.begin(), kAllConditions.end(), zs.condition), kAllConditions.end());
        if (zs.condition == ZoneCondition::Empty) ASSERT_EQ(zs.write_pointer, zs.start);
        if (zs.condition == ZoneCondition::Full) ASSERT_EQ(zs.write_pointer, zs.start + g.zone_capacity);
        ASSERT_GE(zs.write_pointer, zs.start);
        ASSERT_LE(zs.write_pointer, zs.start + g.zone_capacity);
        ASSERT_GE(zs.reset_count, bz.reset_count);
        bool reset_here = c.op == CommandOp::Reset && c.target == z;
        ASSERT_EQ(zs.reset_count, bz.reset_count + (reset_here ? 1 : 0));
        if (!reset_here) ASSERT_GE(zs.write_pointer, bz.write_pointer);
      }
      ASSERT_TRUE(!g.max_open_zones || s.open_zone_count() <= *g.max_open_zones);
      if (c.op == CommandOp::Reset) writes[c.target].clear();
      if (c.op == CommandOp::Finish) writes[c.target].clear();
      if (c.op == CommandOp::Write) writes[c.target / g.zone_size].emplace_back(c.target, c.len);
      if (c.op == CommandOp::Append) writes[c.target].emplace_back(*assigned, c.len);
    }
    // Sequential-write invariant: gap-free from zone start since last reset.
    for (std::size_t z = 0; z < g.nr_zones; ++z) {
      uint64_t expect = g.zone_start(z);
      if (s.zones[z].condition == ZoneCondition::Full && writes[z].empty()) continue;
      for (auto [addr, len] : writes[z]) {
        ASSERT_EQ(addr, expect);
        expect += len;
      }
    }
  }
}

TEST(Script, RandomValidScriptsAlwaysRun) {
  auto g = ZoneGeometry::uniform(1 * MiB, 16);
  g.max_open_zones = 4;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    auto script = random_valid_script(g, 2000, seed);
    ASSERT_EQ(script.size(), 2000u);
    EXPECT_NO_THROW(run_script(g, script));
    std::ostringstream out;
    write_script(out, script);
    std::istringstream in(out.str());
    EXPECT_EQ(parse_script(in), script);
  }
}

TEST(Device, TransitionTableMatchesOracle) {
  for (bool saturate : {false, true})
    for (auto s : oracle::kAllStarts)
      for (auto c : oracle::kAllCmds) EXPECT_EQ(oracle::check_row(s, c, saturate), "");
}
