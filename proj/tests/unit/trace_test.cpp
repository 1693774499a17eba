#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "zlens/trace.hpp"

using namespace zlens;
using namespace zlens::trace;
using zlens::zns::KiB;
using zlens::zns::MiB;
using zlens::zns::ZoneGeometry;

namespace {

std::vector<TraceEvent> ingest_text(const std::string& text, const ZoneGeometry& g, IngestOptions opts = {}) {
  std::istringstream in(text);
  return ingest(in, g, opts);
}

ZoneGeometry fig_geometry() { return ZoneGeometry::uniform(64 * MiB, 64); }

}  // namespace

TEST(Ingest, ResetRecord) {
  auto ev = ingest_text(R"({"ts_ns":10,"layer":"DEV","op":"RESET","zone":2})", fig_geometry());
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].op, Op::Reset);
  EXPECT_EQ(*ev[0].zone, 2u);
}

TEST(Ingest, ZoneDerivedFromAddress) {
  auto ev = ingest_text(R"({"ts_ns":20,"layer":"DEV","op":"WRITE","addr":67108864,"len":8192})", fig_geometry());
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(*ev[0].zone, 1u);
}

TEST(Ingest, SchemaErrorsCarryLineNumbers) {
  auto g = fig_geometry();
  const char* cases[] = {
      R"({"ts_ns":1,"layer":"DEV","op":"WRITE","addr":0})",             // missing len
      R"({"ts_ns":1,"layer":"XYZ","op":"WRITE","addr":0,"len":4096})",  // bad layer
      R"({"ts_ns":1,"layer":"APP","op":"FLUSH","addr":0})",             // APP with addr
      R"({"ts_ns":1,"layer":"DEV","op":"FROB","zone":0})",              // unknown op
      R"({"ts_ns":1,"layer":"DEV","op":"RESET","zone":0,"extra":1})",   // unknown field
      R"(not json)",
  };
  for (const char* c : cases) {
    try {
      ingest_text(std::string("# header\n") + c, g);
      ADD_FAILURE() << c;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), 2u) << c;
    }
  }
}

TEST(Ingest, RangeAndIntegrityErrors) {
  auto g = fig_geometry();
  try {
    ingest_text(R"({"ts_ns":1,"layer":"DEV","op":"WRITE","addr":4294967296,"len":4096})", g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Range);
  }
  try {
    ingest_text(R"({"ts_ns":1,"layer":"DEV","op":"WRITE","addr":0,"len":4096,"zone":3})", g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Integrity);
  }
}

TEST(Ingest, SkewWithinToleranceIsResorted) {
  auto g = fig_geometry();
  std::string text =
      R"({"ts_ns":2000000,"layer":"DEV","op":"RESET","zone":1})"
      "\n"
      R"({"ts_ns":1500000,"layer":"APP","op":"FLUSH","attrs":{"files":"31"}})"
      "\n"
      R"({"ts_ns":1500000,"layer":"DEV","op":"RESET","zone":2})"
      "\n";
  auto ev = ingest_text(text, g);
  ASSERT_EQ(ev.size(), 3u);
  EXPECT_EQ(ev[0].op, Op::Flush);
  EXPECT_EQ(*ev[1].zone, 2u);  // stable among equal timestamps
  EXPECT_EQ(*ev[2].zone, 1u);

  std::string late =
      R"({"ts_ns":5000000,"layer":"DEV","op":"RESET","zone":1})"
      "\n"
      R"({"ts_ns":3000000,"layer":"DEV","op":"RESET","zone":2})"
      "\n";
  EXPECT_THROW(ingest_text(late, g), ParseError);
  EXPECT_NO_THROW(ingest_text(late, g, IngestOptions{3'000'000}));
}

TEST(Passthrough, Classification) {
  EXPECT_EQ(classify_passthrough("DRV_OUT", "reset"), Op::Reset);
  EXPECT_EQ(classify_passthrough("DRV_OUT", "0x04"), Op::Reset);
  EXPECT_EQ(classify_passthrough("DRV_OUT", "finish"), Op::Finish);
  EXPECT_EQ(classify_passthrough("DRV_OUT", "0x02"), Op::Finish);
  EXPECT_EQ(classify_passthrough("DRV_OUT", "0x01"), Op::Close);
  EXPECT_EQ(classify_passthrough("DRV_OUT", "0x03"), Op::Open);
  EXPECT_EQ(classify_passthrough("DRV_OUT", "0x05"), Op::Offline);
  EXPECT_EQ(classify_passthrough("DRV_OUT", "0xEE"), Op::UnknownZoneAction);
  EXPECT_EQ(classify_passthrough("REQ_OP_ZONE_RESET"), Op::Reset);
  EXPECT_EQ(classify_passthrough("REQ_OP_WRITE"), Op::Write);
  EXPECT_EQ(classify_passthrough("WRITE"), Op::Write);
  EXPECT_EQ(classify_passthrough("BOGUS"), std::nullopt);
}

TEST(Passthrough, UnknownActionRetainedAndCounted) {
  auto g = fig_geometry();
  std::string text =
      R"({"ts_ns":1,"layer":"DEV","op":"DRV_OUT","zone":4,"attrs":{"zsa":"0xEE"}})"
      "\n"
      R"({"ts_ns":2,"layer":"DEV","op":"DRV_OUT","zone":4,"attrs":{"zsa":"0x04"}})"
      "\n";
  auto ev = ingest_text(text, g);
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_EQ(ev[0].op, Op::UnknownZoneAction);
  EXPECT_EQ(ev[0].attrs.at("zsa"), "0xEE");
  auto act = aggregate(ev, g);
  EXPECT_EQ(act.unknown_zone_actions, 1u);
  EXPECT_EQ(act.zones[4].reset_count, 1u);
}

TEST(Histogram, Buckets) {
  EXPECT_EQ(histogram_bucket(512), 0u);
  EXPECT_EQ(histogram_bucket(4 * KiB), 1u);
  EXPECT_EQ(histogram_bucket(8 * KiB - 1), 1u);
  EXPECT_EQ(histogram_bucket(8 * KiB), 2u);
  EXPECT_EQ(histogram_bucket(128 * KiB), 6u);
  EXPECT_EQ(histogram_bucket(16 * MiB), 13u);
  EXPECT_EQ(histogram_bucket(32 * MiB), 14u);
  EXPECT_EQ(bucket_floor(6), 128 * KiB);
  EXPECT_EQ(bucket_label(13), "16MiB");
}

TEST(Aggregate, ResetCounting) {
  auto g = fig_geometry();
  std::vector<TraceEvent> ev;
  for (uint64_t z : {2, 2, 2, 5}) ev.push_back({ev.size(), Layer::Dev, Op::Reset, std::nullopt, std::nullopt, z, {}});
  auto act = aggregate(ev, g);
  for (std::size_t z = 0; z < g.nr_zones; ++z) {
    uint64_t want = z == 2 ? 3 : z == 5 ? 1 : 0;
    EXPECT_EQ(act.zones[z].reset_count, want) << z;
  }
}

TEST(Aggregate, HistogramFourAndEightKiB) {
  auto g = fig_geometry();
  std::vector<TraceEvent> ev = {
      {1, Layer::Dev, Op::Write, 0, 4 * KiB, 0, {}},
      {2, Layer::Dev, Op::Write, 4 * KiB, 8 * KiB, 0, {}},
  };
  auto act = aggregate(ev, g);
  EXPECT_EQ(act.zones[0].size_histogram[histogram_bucket(4 * KiB)], 1u);
  EXPECT_EQ(act.zones[0].size_histogram[histogram_bucket(8 * KiB)], 1u);
  EXPECT_EQ(act.zones[0].bytes_written, 12 * KiB);
  ASSERT_EQ(act.zones[0].open_intervals.size(), 1u);
  EXPECT_FALSE(act.zones[0].open_intervals[0].end_ns);
}

TEST(Aggregate, OpenIntervals) {
  auto g = ZoneGeometry::uniform(1 * MiB, 4);
  std::vector<TraceEvent> ev = {
      {1, Layer::Dev, Op::Open, std::nullopt, std::nullopt, 0, {}},
      {2, Layer::Dev, Op::Write, 1 * MiB, 1 * MiB, 1, {}},  // fills zone 1
      {3, Layer::Dev, Op::Append, 0, 4 * KiB, 0, {}},
      {3, Layer::Dev, Op::Write, 2 * MiB, 4 * KiB, 2, {}},
      {4, Layer::Dev, Op::Finish, std::nullopt, std::nullopt, 0, {}},
      {5, Layer::Dev, Op::Reset, std::nullopt, std::nullopt, 1, {}},
  };
  auto act = aggregate(ev, g);
  ASSERT_EQ(act.zones[0].open_intervals.size(), 1u);
  EXPECT_EQ(act.zones[0].open_intervals[0], (OpenInterval{1, 4, Op::Finish}));
  ASSERT_EQ(act.zones[1].open_intervals.size(), 1u);
  EXPECT_EQ(act.zones[1].open_intervals[0], (OpenInterval{2, 2, Op::Write}));
  // Zone 1 was open for zero time; zones 0 and 2 overlap on [3, 4].
  EXPECT_EQ(act.max_concurrent_open(), 2u);
}

// Property: count conservation, histogram totals, merge over random
// partitions.
TEST(Aggregate, ConservationAndMergeProperties) {
  auto g = ZoneGeometry::uniform(1 * MiB, 16);
  auto sim = zns::run_script(g, zns::random_valid_script(g, 3000, 7));
  auto whole = aggregate(sim.events, g);

  std::array<uint64_t, kOpCount> by_op{};
  for (const auto& e : sim.events) ++by_op[static_cast<std::size_t>(e.op)];
  for (std::size_t op = 0; op < kOpCount; ++op) {
    uint64_t sum = 0;
    for (const auto& z : whole.zones) sum += z.op_counts[op];
    EXPECT_EQ(sum, by_op[op]) << to_string(static_cast<Op>(op));
  }
  for (const auto& z : whole.zones) {
    uint64_t hist = 0;
    for (auto n : z.size_histogram) hist += n;
    EXPECT_EQ(hist, z.count(Op::Read) + z.count(Op::Write) + z.count(Op::Append));
    EXPECT_EQ(z.reset_count, z.count(Op::Reset));
  }

  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<TraceEvent> a, b;
    for (const auto& e : sim.events) (rng() % 2 ? a : b).push_back(e);
    auto ab = aggregate(a, g);
    ab.merge(aggregate(b, g));
    auto ba = aggregate(b, g);
    ba.merge(aggregate(a, g));
    EXPECT_TRUE(ab.same_counters(whole));
    EXPECT_TRUE(ba.same_counters(whole));
  }
}

TEST(Aggregate, WindowsSumToWhole) {
  auto g = ZoneGeometry::uniform(1 * MiB, 8);
  auto sim = zns::run_script(g, zns::random_valid_script(g, 1000, 3));
  auto whole = aggregate(sim.events, g);
  auto windows = aggregate_windows(sim.events, g, 50'000);
  EXPECT_GT(windows.size(), 1u);
  ZoneActivity sum;
  for (const auto& [w, act] : windows) sum.merge(act);
  EXPECT_TRUE(sum.same_counters(whole));
}

TEST(RoundTrip, SimulatorStreamIngestedLosslessly) {
  auto g = ZoneGeometry::uniform(1 * MiB, 32);
  auto sim = zns::run_script(g, zns::random_valid_script(g, 10'000, 11));
  std::ostringstream out;
  write_trace(out, sim.events);
  std::istringstream in(out.str());
  auto back = ingest(in, g);
  ASSERT_EQ(back.size(), sim.events.size());
  EXPECT_TRUE(back == sim.events);

  auto act = aggregate(back, g);
  for (std::size_t z = 0; z < g.nr_zones; ++z) {
    EXPECT_EQ(act.zones[z].op_counts, sim.counters.op_counts[z]);
    EXPECT_EQ(act.zones[z].bytes_written, sim.counters.bytes_written[z]);
    EXPECT_EQ(act.zones[z].bytes_read, sim.counters.bytes_read[z]);
    EXPECT_EQ(act.zones[z].reset_count, sim.counters.resets[z]);
    EXPECT_EQ(act.zones[z].reset_count, sim.final_state.zones[z].reset_count);
  }
}
