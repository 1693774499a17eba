#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "zlens/timeline.hpp"
#include "zlens/trace.hpp"

// SVG/CSV/text emitters. Output depends only on the arguments: integer
// geometry, no clocks, no randomness.
namespace zlens::render {

/// Nine-step sequential ramp, light to dark.
inline constexpr std::array<std::string_view, 9> kRamp = {"#ffffcc", "#ffeda0", "#fed976", "#feb24c", "#fd8d3c",
                                                          "#fc4e2a", "#e31a1c", "#bd0026", "#800026"};
/// Reserved color for cells whose value is exactly zero.
inline constexpr std::string_view kZeroColor = "#4575b4";

/// Ramp step 0..8 for a positive value; values at or above `scale` clamp
/// to the darkest step.
std::size_t ramp_step(uint64_t value, uint64_t scale);

struct HeatmapSpec {
  std::size_t columns = 8;
  std::optional<uint64_t> scale;  // nullopt: the maximum value
  std::string title = "zone resets";
  int cell = 40;
};

struct Figure {
  std::string svg;
  std::string csv;
};

/// Row-major grid from zone 0 at the top left. Throws Error(Config) when
/// there are no cells.
Figure render_heatmap(std::span<const uint64_t> values, const HeatmapSpec& spec = {});
Figure render_heatmap(const trace::ZoneActivity& activity, const HeatmapSpec& spec = {});

/// Bar chart of a size histogram (counts or bytes per bucket).
Figure render_histogram(const trace::Histogram& histogram, std::string_view title, std::string_view unit);

struct LaneChartSpec {
  bool filter_trivial = false;
  int width = 960;
};

struct LaneChart {
  std::string svg;
  std::string text;
  std::size_t glyphs = 0;
  std::size_t lineage_arcs = 0;
  std::size_t delete_links = 0;
};

LaneChart render_timeline(const timeline::Timeline& timeline, const LaneChartSpec& spec = {});

}  // namespace zlens::render
