#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include "zlens/error.hpp"
#include "zlens/fixtures.hpp"
#include "zlens/render.hpp"
#include "zlens/timeline.hpp"
#include "zlens/trace.hpp"

using namespace zlens;
using namespace zlens::render;

namespace {

std::vector<std::string> all_matches(const std::string& s, const std::string& pattern) {
  std::vector<std::string> out;
  std::regex re(pattern);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it)
    out.push_back((*it)[1].str());
  return out;
}

std::size_t count_of(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

void check_golden(const std::string& name, const std::string& actual) {
  const std::string path = std::string(ZLENS_GOLDEN_DIR) + "/" + name;
  if (std::getenv("UPDATE_GOLDEN")) {
    std::ofstream(path, std::ios::binary) << actual;
    GTEST_SKIP() << "rewrote " << path;
  }
  std::ifstream in(path, std::ios::binary);
  ASSERT_TRUE(in) << "missing golden " << path << " (run with UPDATE_GOLDEN=1)";
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), actual) << "golden mismatch for " << name;
}

trace::ZoneActivity reset_activity() {
  auto f = fixtures::reset_skew();
  return trace::aggregate(f.events, f.geometry);
}

}  // namespace

TEST(RampStep, Boundaries) {
  EXPECT_EQ(ramp_step(0, 10), 0u);
  EXPECT_EQ(ramp_step(1, 9), 0u);
  EXPECT_EQ(ramp_step(2, 9), 1u);
  EXPECT_EQ(ramp_step(9, 9), 8u);
  EXPECT_EQ(ramp_step(250, 100), 8u);
  EXPECT_EQ(ramp_step(UINT64_MAX - 1, UINT64_MAX), 8u);
}

TEST(RampStep, MonotoneInValue) {
  for (uint64_t scale : {1ull, 7ull, 9ull, 40ull, 1000ull})
    for (uint64_t v = 1; v < 2 * scale; ++v) EXPECT_LE(ramp_step(v, scale), ramp_step(v + 1, scale));
}

TEST(Heatmap, AllZeroGridUsesZeroColorOnly) {
  std::vector<uint64_t> zeros(64, 0);
  auto fig = render_heatmap(zeros);
  EXPECT_EQ(count_of(fig.svg, "class=\"cell\""), 64u);
  EXPECT_EQ(count_of(fig.svg, "data-step=\"zero\""), 64u);
  for (auto c : kRamp) EXPECT_EQ(count_of(fig.svg, std::string("fill=\"") + std::string(c) + "\"/></g>"), 0u);
}

TEST(Heatmap, EmptyIsConfigError) {
  std::vector<uint64_t> none;
  try {
    render_heatmap(none);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Config);
  }
}

TEST(Heatmap, HotZoneIsDarkestAndUnique) {
  auto fig = render_heatmap(reset_activity());
  const auto steps = all_matches(fig.svg, "data-step=\"([a-z0-9]+)\"");
  ASSERT_EQ(steps.size(), 64u);
  EXPECT_EQ(steps[2], "8");
  for (std::size_t z = 0; z < steps.size(); ++z)
    if (z != 2) EXPECT_NE(steps[z], "8") << "zone " << z;
  for (std::size_t z = 60; z < 64; ++z) EXPECT_EQ(steps[z], "zero");
}

TEST(Heatmap, FixedScaleClampsColorButNotCsv) {
  std::vector<uint64_t> v = {0, 50, 250};
  auto fig = render_heatmap(v, HeatmapSpec{.columns = 3, .scale = 100});
  const auto steps = all_matches(fig.svg, "data-step=\"([a-z0-9]+)\"");
  EXPECT_EQ(steps, (std::vector<std::string>{"zero", "4", "8"}));
  EXPECT_NE(fig.csv.find("2,250\n"), std::string::npos);
}

TEST(Heatmap, CsvMatchesSvgCells) {
  auto fig = render_heatmap(reset_activity());
  const auto zones = all_matches(fig.svg, "data-zone=\"(\\d+)\"");
  const auto resets = all_matches(fig.svg, "data-resets=\"(\\d+)\"");
  std::istringstream csv(fig.csv);
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "zone,resets");
  std::size_t i = 0;
  for (; std::getline(csv, line); ++i) {
    ASSERT_LT(i, zones.size());
    EXPECT_EQ(line, zones[i] + "," + resets[i]);
  }
  EXPECT_EQ(i, zones.size());

  auto f = fixtures::reset_skew();
  for (std::size_t z = 0; z < zones.size(); ++z) EXPECT_EQ(std::stoull(resets[z]), f.expected_resets[z]);
}

TEST(Heatmap, Golden) { check_golden("reset_heatmap.svg", render_heatmap(reset_activity()).svg); }

TEST(Histogram, BarsMatchCsv) {
  auto fig = render_histogram(reset_activity().total_write_bytes_by_size(), "write bytes by request size", "bytes");
  const auto values = all_matches(fig.svg, "data-value=\"(\\d+)\"");
  ASSERT_EQ(values.size(), trace::kHistogramBuckets);
  std::istringstream csv(fig.csv);
  std::string line;
  std::getline(csv, line);
  for (std::size_t b = 0; std::getline(csv, line); ++b)
    EXPECT_EQ(line.substr(line.rfind(',') + 1), values[b]);
}

TEST(LaneChart, OneGlyphPerEntryAndArcPerEdge) {
  auto c = fixtures::lsm_compactions();
  auto tl = timeline::build_timeline(c.events, c.geometry);
  auto chart = render_timeline(tl);
  EXPECT_EQ(chart.glyphs, tl.entries.size());
  EXPECT_EQ(count_of(chart.svg, "class=\"entry"), tl.entries.size());
  EXPECT_EQ(chart.lineage_arcs, c.edges.size());
  EXPECT_EQ(chart.delete_links, c.delete_links.size());

  std::set<std::pair<std::string, std::string>> drawn;
  const auto from = all_matches(chart.svg, "class=\"lineage\" data-from=\"([^\"]+)\"");
  const auto to = all_matches(chart.svg, "class=\"lineage\" data-from=\"[^\"]+\" data-to=\"([^\"]+)\"");
  ASSERT_EQ(from.size(), to.size());
  for (std::size_t i = 0; i < from.size(); ++i) drawn.emplace(from[i], to[i]);
  EXPECT_EQ(drawn, c.edges);
}

TEST(LaneChart, FilterTrivialHidesOnlyTrivialEntries) {
  auto c = fixtures::lsm_compactions();
  auto tl = timeline::build_timeline(c.events, c.geometry);
  std::size_t trivial = 0;
  for (const auto& e : tl.entries) trivial += e.trivial;
  ASSERT_GT(trivial, 0u);
  auto chart = render_timeline(tl, LaneChartSpec{.filter_trivial = true});
  EXPECT_EQ(chart.glyphs, tl.entries.size() - trivial);
  EXPECT_EQ(chart.lineage_arcs, c.edges.size());
}

TEST(LaneChart, EmptyTimelineDrawsAxesOnly) {
  timeline::Timeline tl;
  auto chart = render_timeline(tl);
  EXPECT_EQ(chart.glyphs, 0u);
  EXPECT_NE(chart.svg.find("class=\"axis\""), std::string::npos);
  EXPECT_EQ(count_of(chart.svg, "class=\"lane\""), 3u);
}

TEST(LaneChart, GlyphsStayInsidePlot) {
  auto c = fixtures::random_compactions(40, 7);
  auto tl = timeline::build_timeline(c.events, c.geometry);
  LaneChartSpec spec{.width = 600};
  auto chart = render_timeline(tl, spec);
  EXPECT_EQ(chart.lineage_arcs, c.edges.size());
  for (const auto& x : all_matches(chart.svg, "<circle cx=\"(-?\\d+)\"")) {
    EXPECT_GE(std::stoi(x), 80);
    EXPECT_LE(std::stoi(x), spec.width - 20);
  }
}

TEST(LaneChart, Deterministic) {
  auto c = fixtures::lsm_compactions();
  auto a = render_timeline(timeline::build_timeline(c.events, c.geometry));
  auto b = render_timeline(timeline::build_timeline(c.events, c.geometry));
  EXPECT_EQ(a.svg, b.svg);
  EXPECT_EQ(a.text, b.text);
}

TEST(LaneChart, Golden) {
  auto c = fixtures::lsm_compactions();
  auto chart = render_timeline(timeline::build_timeline(c.events, c.geometry));
  check_golden("lsm_timeline.svg", chart.svg);
}

TEST(LaneChart, TextGolden) {
  auto c = fixtures::lsm_compactions();
  auto chart = render_timeline(timeline::build_timeline(c.events, c.geometry));
  check_golden("lsm_timeline.txt", chart.text);
}
