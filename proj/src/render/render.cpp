#include "zlens/render.hpp"

#include <algorithm>
#include <map>

#include <fmt/core.h>

#include "zlens/error.hpp"

namespace zlens::render {

using timeline::Kind;
using timeline::LinkType;
using trace::Layer;
using trace::Op;

namespace {

std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string svg_open(int width, int height) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"{0}\" height=\"{1}\" fill=\"#ffffff\"/>\n",
      width, height);
}

std::string time_label(uint64_t delta_ns) {
  return fmt::format("+{}.{:03}ms", delta_ns / 1'000'000, (delta_ns % 1'000'000) / 1'000);
}

}  // namespace

std::size_t ramp_step(uint64_t value, uint64_t scale) {
  if (value == 0 || scale == 0) return 0;
  if (value >= scale) return kRamp.size() - 1;
  const auto steps = static_cast<unsigned __int128>(kRamp.size());
  auto idx = static_cast<std::size_t>((steps * value + scale - 1) / scale);
  return std::min(kRamp.size(), idx) - 1;
}

// ---------------------------------------------------------------------------
// Heatmap
// ---------------------------------------------------------------------------

Figure render_heatmap(std::span<const uint64_t> values, const HeatmapSpec& spec) {
  if (values.empty()) throw Error(ErrorCode::Config, "heatmap has no cells (nr_zones == 0)");
  if (spec.columns == 0 || spec.cell < 8) throw Error(ErrorCode::Config, "heatmap needs columns > 0 and cell >= 8");
  const uint64_t scale = spec.scale.value_or(*std::max_element(values.begin(), values.end()));
  const int cols = static_cast<int>(spec.columns);
  const int rows = static_cast<int>((values.size() + spec.columns - 1) / spec.columns);
  const int step = spec.cell + 2;
  const int margin = 20, top = 40;
  const int legend_y = top + rows * step + 16;
  const int width = std::max(2 * margin + cols * step, 2 * margin + 11 * 24 + 60);
  const int height = legend_y + 44;

  Figure fig;
  std::string& s = fig.svg;
  s = svg_open(width, height);
  s += fmt::format("<text x=\"{}\" y=\"24\" font-size=\"14\">{} (scale 0-{})</text>\n", margin, escape(spec.title),
                   scale);
  fig.csv = "zone,resets\n";
  for (std::size_t z = 0; z < values.size(); ++z) {
    const uint64_t v = values[z];
    const int x = margin + static_cast<int>(z % spec.columns) * step;
    const int y = top + static_cast<int>(z / spec.columns) * step;
    const bool zero = v == 0 || scale == 0;
    const std::size_t k = ramp_step(v, scale);
    const std::string_view fill = zero ? kZeroColor : kRamp[k];
    const bool dark_text = !zero && k < 6;
    s += fmt::format(
        "<g class=\"cell\" data-zone=\"{}\" data-resets=\"{}\" data-step=\"{}\">"
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>"
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"{}\">{}</text></g>\n",
        z, v, zero ? "zero" : std::to_string(k), x, y, spec.cell, spec.cell, fill, x + spec.cell / 2,
        y + spec.cell / 2 + 4, dark_text ? "#000000" : "#ffffff", v);
    fig.csv += fmt::format("{},{}\n", z, v);
  }

  // Legend: the zero swatch, then the ramp from 1 to scale.
  s += fmt::format("<g class=\"legend\"><rect x=\"{}\" y=\"{}\" width=\"20\" height=\"14\" fill=\"{}\"/>"
                   "<text x=\"{}\" y=\"{}\">0</text>\n",
                   margin, legend_y, kZeroColor, margin + 24, legend_y + 11);
  const int ramp_x = margin + 48;
  for (std::size_t k = 0; k < kRamp.size(); ++k)
    s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"24\" height=\"14\" fill=\"{}\"/>\n",
                     ramp_x + static_cast<int>(k) * 24, legend_y, kRamp[k]);
  s += fmt::format("<text x=\"{}\" y=\"{}\">1</text><text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text></g>\n",
                   ramp_x, legend_y + 28, ramp_x + 9 * 24, legend_y + 28, scale);
  s += "</svg>\n";
  return fig;
}

Figure render_heatmap(const trace::ZoneActivity& activity, const HeatmapSpec& spec) {
  const auto counts = activity.reset_counts();
  return render_heatmap(counts, spec);
}

// ---------------------------------------------------------------------------
// Histogram
// ---------------------------------------------------------------------------

Figure render_histogram(const trace::Histogram& histogram, std::string_view title, std::string_view unit) {
  const int bar = 40, gap = 6, left = 60, top = 40, plot_h = 200;
  const int n = static_cast<int>(histogram.size());
  const int width = left + n * (bar + gap) + 20;
  const int height = top + plot_h + 50;
  const uint64_t max = *std::max_element(histogram.begin(), histogram.end());

  Figure fig;
  std::string& s = fig.svg;
  s = svg_open(width, height);
  s += fmt::format("<text x=\"{}\" y=\"24\" font-size=\"14\">{} ({}, max {})</text>\n", left, escape(title),
                   escape(unit), max);
  s += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#000000\"/>\n", left, top + plot_h,
                   width - 20);
  fig.csv = "bucket,label,value\n";
  for (int b = 0; b < n; ++b) {
    const uint64_t v = histogram[static_cast<std::size_t>(b)];
    int h = max ? static_cast<int>(static_cast<unsigned __int128>(v) * plot_h / max) : 0;
    if (v > 0 && h == 0) h = 1;
    const int x = left + b * (bar + gap);
    const auto label = trace::bucket_label(static_cast<std::size_t>(b));
    s += fmt::format(
        "<g class=\"bar\" data-bucket=\"{}\" data-value=\"{}\"><rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" "
        "fill=\"#3182bd\"/><text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"9\">{}</text></g>\n",
        b, v, x, top + plot_h - h, bar, h, x + bar / 2, top + plot_h + 14, escape(label));
    fig.csv += fmt::format("{},{},{}\n", b, label, v);
  }
  s += "</svg>\n";
  return fig;
}

// ---------------------------------------------------------------------------
// Lane chart
// ---------------------------------------------------------------------------

namespace {

constexpr int kLeft = 80;
constexpr int kTop = 40;
constexpr int kLaneHeight = 80;

int lane_y(Layer lane) { return kTop + kLaneHeight / 2 + static_cast<int>(lane) * kLaneHeight; }

std::string glyph(const timeline::TimelineEntry& e, int x, int y) {
  if (e.kind == Kind::Placement)
    return fmt::format("<path d=\"M{} {} l6 6 l-6 6 l-6 -6 z\" fill=\"#9467bd\"/>", x, y - 6);
  switch (e.op) {
    case Op::Flush: return fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"6\" fill=\"#1f77b4\"/>", x, y);
    case Op::FileCreate:
      return fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"6\" fill=\"none\" stroke=\"#1f77b4\"/>", x, y);
    case Op::CompactionBegin:
      return fmt::format("<path d=\"M{} {} l10 6 l-10 6 z\" fill=\"#2ca02c\"/>", x - 5, y - 6);
    case Op::CompactionEnd:
      return fmt::format("<path d=\"M{} {} l-10 6 l10 6 z\" fill=\"#d62728\"/>", x + 5, y - 6);
    case Op::FileDelete:
      return fmt::format("<path d=\"M{0} {1} l10 10 M{0} {2} l10 -10\" stroke=\"#e377c2\" stroke-width=\"2\"/>",
                         x - 5, y - 5, y + 5);
    case Op::Fsync:
      return fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#000000\" stroke-width=\"2\"/>",
                         x, y - 8, y + 8);
    case Op::Read:
    case Op::Write:
    case Op::Append:
      return fmt::format("<rect x=\"{}\" y=\"{}\" width=\"6\" height=\"12\" fill=\"#7f7f7f\"/>", x - 3, y - 6);
    default:
      return fmt::format("<rect x=\"{}\" y=\"{}\" width=\"8\" height=\"8\" fill=\"#ff7f0e\"/>", x - 4, y - 4);
  }
}

}  // namespace

LaneChart render_timeline(const timeline::Timeline& tl, const LaneChartSpec& spec) {
  LaneChart chart;
  const auto& entries = tl.entries;
  std::vector<bool> visible(entries.size());
  uint64_t t0 = UINT64_MAX, t1 = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    visible[i] = !(spec.filter_trivial && entries[i].trivial);
    if (!visible[i]) continue;
    t0 = std::min(t0, entries[i].ts_ns);
    t1 = std::max(t1, entries[i].ts_ns);
  }
  if (t0 == UINT64_MAX) t0 = t1 = 0;

  const int plot_w = std::max(100, spec.width - kLeft - 20);
  const int axis_y = kTop + 3 * kLaneHeight + 10;
  const int height = axis_y + 40;
  auto x_of = [&](uint64_t ts) {
    if (t1 == t0) return kLeft;
    return kLeft + static_cast<int>(static_cast<unsigned __int128>(ts - t0) * plot_w / (t1 - t0));
  };

  // Glyph positions; entries sharing a lane and timestamp stack in input order.
  std::vector<std::pair<int, int>> pos(entries.size());
  std::map<std::pair<Layer, uint64_t>, int> stack;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!visible[i]) continue;
    int k = stack[{entries[i].lane, entries[i].ts_ns}]++;
    pos[i] = {x_of(entries[i].ts_ns), lane_y(entries[i].lane) + ((k % 5) - 2) * 8};
  }

  std::string& s = chart.svg;
  s = svg_open(spec.width, height);
  s += fmt::format("<text x=\"{}\" y=\"24\" font-size=\"14\">timeline ({} entries{})</text>\n", kLeft,
                   std::count(visible.begin(), visible.end(), true), spec.filter_trivial ? ", trivial hidden" : "");
  for (Layer lane : {Layer::App, Layer::Fs, Layer::Dev}) {
    const int y = lane_y(lane);
    s += fmt::format(
        "<g class=\"lane\" data-lane=\"{0}\"><line x1=\"{1}\" y1=\"{2}\" x2=\"{3}\" y2=\"{2}\" stroke=\"#dddddd\"/>"
        "<text x=\"10\" y=\"{4}\">{0}</text></g>\n",
        trace::to_string(lane), kLeft, y, kLeft + plot_w, y + 4);
  }
  s += fmt::format("<g class=\"axis\"><line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#000000\"/>\n", kLeft,
                   axis_y, kLeft + plot_w);
  for (int k = 0; k <= 4; ++k) {
    const uint64_t ts = t0 + static_cast<uint64_t>(static_cast<unsigned __int128>(t1 - t0) * k / 4);
    const int x = x_of(ts);
    s += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#000000\"/>"
                     "<text x=\"{0}\" y=\"{3}\" text-anchor=\"middle\">{4}</text>\n",
                     x, axis_y, axis_y + 5, axis_y + 18, time_label(ts - t0));
  }
  s += "</g>\n";

  // Compaction spans.
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!visible[i]) continue;
    for (const auto& l : entries[i].links) {
      if (l.type != LinkType::Pair || !visible[l.target]) continue;
      s += fmt::format("<line class=\"pair\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#2ca02c\" "
                       "stroke-width=\"3\" opacity=\"0.4\"/>\n",
                       pos[l.target].first, pos[l.target].second + 12, pos[i].first, pos[i].second + 12);
    }
  }

  // Lineage arcs, one per (input, output) edge, from the entry that
  // produced the input (or the compaction start when it predates the trace).
  std::size_t arc = 0;
  for (const auto& lin : tl.lineage) {
    for (const auto& in : lin.inputs) {
      std::size_t from = lin.begin_entry;
      for (std::size_t i = lin.begin_entry; i-- > 0;) {
        const auto& e = entries[i];
        if (!visible[i] || e.kind != Kind::Event || e.trivial) continue;
        if (e.op != Op::Flush && e.op != Op::CompactionEnd && e.op != Op::FileCreate) continue;
        if (std::find(e.files.begin(), e.files.end(), in) != e.files.end()) {
          from = i;
          break;
        }
      }
      const auto [x1, y1] = pos[from];
      const auto [x2, y2] = pos[lin.end_entry];
      const int lift = 30 + static_cast<int>(arc % 4) * 8;
      s += fmt::format("<path class=\"lineage\" data-from=\"{}\" data-to=\"{}\" d=\"M{} {} Q{} {} {} {}\" "
                       "fill=\"none\" stroke=\"#555555\"/>\n",
                       escape(in), escape(lin.output), x1, y1, (x1 + x2) / 2, std::min(y1, y2) - lift, x2, y2);
      ++arc;
    }
  }
  chart.lineage_arcs = arc;

  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!visible[i]) continue;
    for (const auto& l : entries[i].links) {
      if (l.type != LinkType::SupersededBy || !visible[l.target]) continue;
      s += fmt::format("<line class=\"delete-link\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#e377c2\" "
                       "stroke-dasharray=\"4 3\"/>\n",
                       pos[i].first, pos[i].second, pos[l.target].first, pos[l.target].second);
      ++chart.delete_links;
    }
  }

  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!visible[i]) continue;
    const auto& e = entries[i];
    std::string cls = "entry";
    if (e.dangling) cls += " dangling";
    if (e.orphan) cls += " orphan";
    s += fmt::format("<g class=\"{}\" data-entry=\"{}\" data-kind=\"{}\" data-ts=\"{}\">{}<title>{}</title></g>\n", cls,
                     i, e.kind_name(), e.ts_ns, glyph(e, pos[i].first, pos[i].second), escape(e.label));
    ++chart.glyphs;
  }
  s += "</svg>\n";

  std::string& t = chart.text;
  t = fmt::format("{:>6} {:>14} {:<4} {:<18} {}\n", "#", "t", "lane", "kind", "label");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!visible[i]) continue;
    const auto& e = entries[i];
    t += fmt::format("{:>6} {:>14} {:<4} {:<18} {}", i, time_label(e.ts_ns - t0), trace::to_string(e.lane),
                     e.kind_name(), e.label);
    for (const auto& l : e.links) t += fmt::format(" [{} #{}]", timeline::to_string(l.type), l.target);
    if (e.dangling) t += " [DANGLING]";
    if (e.orphan) t += " [ORPHAN]";
    t += '\n';
  }
  if (!tl.lineage.empty()) {
    t += "\nlineage\n";
    for (const auto& lin : tl.lineage) {
      std::string inputs;
      for (const auto& in : lin.inputs) inputs += (inputs.empty() ? "" : ",") + in;
      t += fmt::format("  {} <- {} (cid {}, L{})\n", lin.output, inputs, lin.cid, lin.level);
    }
  }
  for (const auto& w : tl.warnings) t += "warning: " + w + '\n';
  return chart;
}

}  // namespace zlens::render
