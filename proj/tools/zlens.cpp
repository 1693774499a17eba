// zlens: command-line front end over the zlens library.
//
// Exit status: 0 clean, 1 input/integrity error, 2 usage error, 3 contract
// violations found (check only).

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "zlens/contracts.hpp"
#include "zlens/error.hpp"
#include "zlens/extent_map.hpp"
#include "zlens/f2fs.hpp"
#include "zlens/fixtures.hpp"
#include "zlens/render.hpp"
#include "zlens/snapshot.hpp"
#include "zlens/text.hpp"
#include "zlens/timeline.hpp"
#include "zlens/trace.hpp"
#include "zlens/zone_model.hpp"

namespace fs = std::filesystem;
using namespace zlens;
using text::format_bytes;
using text::parse_size;
using text::parse_u64;

namespace {

constexpr int kExitIntegrity = 1;
constexpr int kExitUsage = 2;
constexpr int kExitViolation = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every artifact goes through here, so nothing lands outside the run
// directory. The MANIFEST lists what was produced.
class RunDir {
 public:
  explicit RunDir(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

  void write(const std::string& rel, const std::string& content) {
    auto out = open(rel);
    out << content;
  }

  std::ofstream open(const std::string& rel, std::ios::openmode mode = std::ios::out) {
    const fs::path p = fs::path(rel).lexically_normal();
    if (p.is_absolute() || p.empty() || *p.begin() == "..") throw UsageError("artifact path escapes run dir: " + rel);
    fs::create_directories((root_ / p).parent_path());
    std::ofstream out(root_ / p, mode | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + (root_ / p).string());
    artifacts_.insert(p.generic_string());
    return out;
  }

  void adopt(const std::vector<std::string>& rels) { artifacts_.insert(rels.begin(), rels.end()); }

  void finish() {
    std::ofstream out(root_ / "MANIFEST", std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + (root_ / "MANIFEST").string());
    for (const auto& a : artifacts_) out << a << ' ' << fs::file_size(root_ / a) << '\n';
  }

 private:
  fs::path root_;
  std::set<std::string> artifacts_;
};

uint64_t size_arg(const std::string& flag, const std::string& value) {
  auto v = parse_size(value);
  if (!v) throw UsageError(fmt::format("{}: expected a byte size, got '{}'", flag, value));
  return *v;
}

// "100ms", "2s", "1500us", "250000ns" or plain nanoseconds.
uint64_t duration_arg(const std::string& flag, const std::string& value) {
  static const std::pair<std::string_view, uint64_t> kUnits[] = {
      {"ns", 1}, {"us", 1'000}, {"ms", 1'000'000}, {"s", 1'000'000'000}};
  std::string_view v = value;
  uint64_t mult = 1;
  for (auto [suffix, m] : kUnits) {
    if (v.size() > suffix.size() && v.ends_with(suffix) && std::isdigit(static_cast<unsigned char>(v[v.size() - suffix.size() - 1]))) {
      v.remove_suffix(suffix.size());
      mult = m;
      break;
    }
  }
  auto n = parse_u64(v);
  if (!n || *n == 0 || *n > UINT64_MAX / mult) throw UsageError(fmt::format("{}: expected a positive duration, got '{}'", flag, value));
  return *n * mult;
}

std::vector<trace::TraceEvent> load_trace(const std::string& path, const zns::ZoneGeometry& geometry) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open trace " + path);
  auto events = trace::ingest(in, geometry);
  spdlog::info("ingested {} events from {}", events.size(), path);
  return events;
}

uint64_t main_start_from_image(const std::string& path) {
  f2fs::FileImage image(path);
  return f2fs::parse_superblock(image).main_area_start();
}

// ---------------------------------------------------------------------------
// Options
// ---------------------------------------------------------------------------

struct Options {
  std::string out;
  std::string geometry;
  std::string extents;
  std::string segments;
  std::string trace;
  std::string series;
  std::string image;
  std::string manifest;
  std::string thresholds;
  std::string main_start;
  std::string window;
  std::string script;
  std::vector<uint32_t> nids;
  std::vector<std::string> rules;
  std::optional<uint64_t> scale;
  std::size_t columns = 8;
  bool filter_trivial = false;
  int width = 960;
};

CLI::Option* add_out(CLI::App* cmd, Options& o) {
  return cmd->add_option("--out", o.out, "Run directory; every artifact and the MANIFEST are written here")->required();
}

CLI::Option* add_geometry(CLI::App* cmd, Options& o) {
  return cmd->add_option("--geometry", o.geometry, "Device geometry file (key=value)")
      ->required()
      ->check(CLI::ExistingFile);
}

void add_main_start(CLI::App* cmd, Options& o) {
  auto* ms = cmd->add_option("--main-start", o.main_start, "F2FS main-area start in bytes (e.g. 16MiB)");
  auto* img = cmd->add_option("--image", o.image, "F2FS image; the main-area start is read from its superblock")
                  ->check(CLI::ExistingFile);
  ms->excludes(img);
}

uint64_t resolve_main_start(const Options& o) {
  if (!o.image.empty()) return main_start_from_image(o.image);
  if (!o.main_start.empty()) return size_arg("--main-start", o.main_start);
  return 0;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int run_fiemap(const Options& o) {
  const auto geometry = zns::load_geometry(o.geometry);
  const auto maps = extent::load_extent_dump_file(o.extents);
  const auto placement = extent::map_to_zones(geometry, maps);
  std::vector<extent::FileStats> stats;
  for (const auto& m : maps) stats.push_back(extent::file_stats(m, geometry));

  RunDir run(o.out);
  {
    auto out = run.open("stats.csv");
    extent::write_stats_csv(out, stats);
  }
  {
    auto out = run.open("placement.csv");
    extent::write_placement_csv(out, placement);
  }
  std::ostringstream report;
  extent::write_stats_report(report, stats, placement);
  run.write("report.txt", report.str());
  run.finish();
  std::cout << report.str();
  return 0;
}

int run_segmap(const Options& o) {
  const auto geometry = zns::load_geometry(o.geometry);
  const uint64_t main_start = resolve_main_start(o);
  const auto maps = extent::load_extent_dump_file(o.extents);
  const auto segments = f2fs::load_segment_info_file(o.segments, geometry, main_start);
  const auto report = f2fs::segmap(maps, segments, geometry, main_start);

  RunDir run(o.out);
  {
    auto out = run.open("segments.csv");
    f2fs::write_segmap_segments_csv(out, report);
  }
  {
    auto out = run.open("files.csv");
    f2fs::write_segmap_files_csv(out, report);
  }
  std::string excl = "file_id,logical_offset,physical_start,length,reason\n";
  for (const auto& e : report.exclusions)
    excl += fmt::format("{},{},{},{},{}\n", e.file_id, e.logical_offset, e.physical_start, e.length, e.reason);
  run.write("exclusions.csv", excl);
  run.finish();

  std::size_t mixed = 0;
  for (const auto& f : report.files) mixed += f.distinct_classes() > 1;
  std::cout << fmt::format("segments {}  files {}  multi-class files {}  excluded slices {}  unclassified slices {}\n",
                           report.segments.size(), report.files.size(), mixed, report.exclusions.size(),
                           report.unclassified_slices);
  return 0;
}

int run_imap(const Options& o) {
  if (o.nids.empty() && o.manifest.empty()) throw UsageError("imap: give --nid or --manifest");
  const auto geometry = zns::load_geometry(o.geometry);
  f2fs::FileImage image(o.image);
  const auto sb = f2fs::parse_superblock(image);
  if (sb.from_backup) spdlog::warn("primary superblock invalid; using the backup copy");
  const auto cp = f2fs::load_checkpoint(image, sb);
  spdlog::info("checkpoint version {} (pack {})", cp.version, cp.pack);

  std::vector<f2fs::ManifestEntry> expected;
  if (!o.manifest.empty()) {
    std::ifstream in(o.manifest);
    if (!in) throw Error(ErrorCode::Io, "cannot open manifest " + o.manifest);
    expected = f2fs::read_manifest(in);
  }
  std::vector<uint32_t> nids = o.nids;
  for (const auto& e : expected) nids.push_back(e.nid);

  std::string csv = "nid,block_addr,segment,zone,status\n";
  std::string warnings;
  std::vector<std::string> mismatches;
  std::size_t unallocated = 0, stale = 0;
  for (uint32_t nid : nids) {
    f2fs::ManifestEntry got;
    got.nid = nid;
    try {
      auto loc = f2fs::locate_inode(image, sb, cp, geometry, nid);
      got.block_addr = loc.block_addr;
      got.segment = loc.segment;
      got.zone = loc.zone;
      got.status = loc.stale() ? f2fs::NidStatus::Stale : f2fs::NidStatus::Ok;
      csv += fmt::format("{},{},{},{},{}\n", nid, loc.block_addr, loc.segment ? std::to_string(*loc.segment) : "-",
                         loc.zone, loc.stale() ? "STALE_NAT" : "OK");
      if (loc.stale()) {
        ++stale;
        spdlog::warn("{}", *loc.warning);
        warnings += *loc.warning + '\n';
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Unallocated) throw;
      ++unallocated;
      got.status = f2fs::NidStatus::Unallocated;
      csv += fmt::format("{},0,-,-,UNALLOCATED\n", nid);
    }
    auto it = std::find_if(expected.begin(), expected.end(), [&](const auto& m) { return m.nid == nid; });
    if (it != expected.end() && !(got == *it))
      mismatches.push_back(fmt::format("nid {}: manifest says {} at block {}, found {} at block {}", nid,
                                       f2fs::to_string(it->status), it->block_addr, f2fs::to_string(got.status),
                                       got.block_addr));
  }

  RunDir run(o.out);
  run.write("imap.csv", csv);
  run.write("warnings.txt", warnings);
  run.finish();
  std::cout << fmt::format("located {} nids  stale {}  unallocated {}{}\n", nids.size() - unallocated, stale,
                           unallocated, sb.from_backup ? "  (backup superblock)" : "");
  if (!expected.empty()) {
    for (const auto& m : mismatches) std::cerr << "zlens: " << m << '\n';
    std::cout << fmt::format("manifest check: {}/{} nids agree\n", expected.size() - mismatches.size(),
                             expected.size());
    if (!mismatches.empty()) return kExitIntegrity;
  }
  return 0;
}

int run_trace_report(const Options& o) {
  const auto geometry = zns::load_geometry(o.geometry);
  const auto events = load_trace(o.trace, geometry);
  const auto activity = trace::aggregate(events, geometry);

  RunDir run(o.out);
  {
    auto out = run.open("zones.csv");
    trace::write_zone_csv(out, activity);
  }
  {
    auto out = run.open("histogram.csv");
    trace::write_histogram_csv(out, activity);
  }
  if (!o.window.empty()) {
    auto out = run.open("windows.csv");
    trace::write_window_csv(out, trace::aggregate_windows(events, geometry, duration_arg("--window", o.window)));
  }
  render::HeatmapSpec spec;
  spec.columns = o.columns;
  spec.scale = o.scale;
  const auto heat = render::render_heatmap(activity, spec);
  run.write("heatmap.svg", heat.svg);
  run.write("heatmap.csv", heat.csv);
  const auto hist =
      render::render_histogram(activity.total_write_bytes_by_size(), "bytes written by request size", "bytes");
  run.write("write_sizes.svg", hist.svg);
  run.write("write_sizes.csv", hist.csv);
  run.finish();

  const auto resets = activity.reset_counts();
  const auto top = std::max_element(resets.begin(), resets.end());
  std::cout << fmt::format("events {}  bytes written {}  resets {}  max resets {} (zone {})\n", events.size(),
                           format_bytes(activity.total_bytes_written()), std::accumulate(resets.begin(), resets.end(), uint64_t{0}),
                           *top, top - resets.begin());
  return 0;
}

int run_timeline(const Options& o) {
  const auto geometry = zns::load_geometry(o.geometry);
  const auto events = load_trace(o.trace, geometry);
  std::optional<SnapshotSeries> series;
  if (!o.series.empty()) series = load_snapshot_series(o.series, geometry);
  const auto tl = timeline::build_timeline(events, geometry, series ? &*series : nullptr);
  for (const auto& w : tl.warnings) spdlog::warn("{}", w);

  render::LaneChartSpec spec;
  spec.filter_trivial = o.filter_trivial;
  spec.width = o.width;
  const auto chart = render::render_timeline(tl, spec);

  RunDir run(o.out);
  {
    auto out = run.open("timeline.jsonl");
    timeline::write_timeline(out, tl);
  }
  run.write("timeline.svg", chart.svg);
  run.write("timeline.txt", chart.text);
  run.finish();
  std::cout << fmt::format("entries {}  glyphs {}  lineage arcs {}  delete links {}  warnings {}\n",
                           tl.entries.size(), chart.glyphs, chart.lineage_arcs, chart.delete_links,
                           tl.warnings.size());
  return 0;
}

int run_check(const Options& o) {
  using contracts::Rule;
  static const std::pair<std::string_view, Rule> kRules[] = {
      {"R1", Rule::R1RequestScale},       {"R2", Rule::R2GroupingHotnessMix},
      {"R3", Rule::R3GroupingGcReclass},  {"R4", Rule::R4LifetimeSkew},
      {"R5", Rule::R5LocalityFragmentation},
  };
  auto requires_input = [&](Rule r) -> std::pair<bool, std::string_view> {
    switch (r) {
      case Rule::R1RequestScale:
      case Rule::R4LifetimeSkew: return {!o.trace.empty(), "--trace"};
      case Rule::R2GroupingHotnessMix:
      case Rule::R5LocalityFragmentation: return {!o.extents.empty(), "--extents"};
      case Rule::R3GroupingGcReclass: return {!o.series.empty(), "--series"};
    }
    return {false, ""};
  };

  std::set<Rule> selected;
  if (o.rules.empty()) {
    for (auto [name, r] : kRules)
      if (requires_input(r).first) selected.insert(r);
    if (selected.empty()) throw UsageError("check: no inputs; give --trace, --extents or --series");
  } else {
    for (const auto& token : o.rules) {
      auto it = std::find_if(std::begin(kRules), std::end(kRules), [&](const auto& p) {
        return p.first == token || contracts::to_string(p.second) == token;
      });
      if (it == std::end(kRules)) throw UsageError("check: unknown rule '" + token + "'");
      auto [ok, flag] = requires_input(it->second);
      if (!ok) throw UsageError(fmt::format("check: rule {} needs {}", token, flag));
      selected.insert(it->second);
    }
  }

  const auto geometry = zns::load_geometry(o.geometry);
  const auto thresholds = o.thresholds.empty() ? contracts::Thresholds{} : contracts::load_thresholds(o.thresholds);
  std::vector<trace::TraceEvent> events;
  trace::ZoneActivity activity;
  if (!o.trace.empty()) {
    events = load_trace(o.trace, geometry);
    activity = trace::aggregate(events, geometry);
  }
  extent::FileMaps maps;
  if (!o.extents.empty()) maps = extent::load_extent_dump_file(o.extents);

  contracts::CheckResult result;
  if (selected.contains(Rule::R1RequestScale)) result.append(contracts::check_request_scale(activity, thresholds, events));
  if (selected.contains(Rule::R2GroupingHotnessMix)) {
    const uint64_t main_start = resolve_main_start(o);
    std::vector<f2fs::SegmentRecord> segments;
    if (!o.segments.empty()) segments = f2fs::load_segment_info_file(o.segments, geometry, main_start);
    const auto report = f2fs::segmap(maps, segments, geometry, main_start);
    std::optional<std::span<const trace::TraceEvent>> ev;
    if (!o.trace.empty()) ev = std::span<const trace::TraceEvent>(events);
    result.append(contracts::check_grouping(report, !o.segments.empty(), thresholds, ev));
  }
  if (selected.contains(Rule::R3GroupingGcReclass)) {
    const auto series = load_snapshot_series(o.series, geometry);
    result.append(contracts::check_gc_reclassification(series, geometry, thresholds));
  }
  if (selected.contains(Rule::R4LifetimeSkew)) result.append(contracts::check_lifetime(activity, thresholds));
  if (selected.contains(Rule::R5LocalityFragmentation))
    result.append(contracts::check_locality(maps, geometry, thresholds));

  RunDir run(o.out);
  {
    auto out = run.open("reports.jsonl");
    contracts::write_reports(out, result);
  }
  std::ostringstream summary;
  contracts::write_summary(summary, result);
  run.write("summary.txt", summary.str());
  run.finish();
  std::cout << summary.str();
  return result.has_violation() ? kExitViolation : 0;
}

int run_simulate(const Options& o) {
  const auto geometry = zns::load_geometry(o.geometry);
  std::ifstream in(o.script);
  if (!in) throw Error(ErrorCode::Io, "cannot open script " + o.script);
  const auto script = zns::parse_script(in);
  const auto result = zns::run_script(geometry, script);

  RunDir run(o.out);
  {
    auto out = run.open("trace.jsonl");
    trace::write_trace(out, result.events);
  }
  std::string state = "zone,condition,write_pointer,reset_count\n";
  for (const auto& z : result.final_state.zones)
    state += fmt::format("{},{},{},{}\n", z.index, zns::to_string(z.condition), z.write_pointer, z.reset_count);
  run.write("final_state.csv", state);
  run.finish();
  std::cout << fmt::format("commands {}  events {}  open zones {}\n", script.size(), result.events.size(),
                           result.final_state.open_zone_count());
  return 0;
}

int run_fixtures(const Options& o) {
  RunDir run(o.out);
  run.adopt(fixtures::write_all(o.out));
  run.finish();
  std::cout << "fixtures written to " << o.out << '\n';
  return 0;
}

void init_logging() {
  auto logger = spdlog::stderr_logger_st("zlens");
  logger->set_pattern("zlens: %l: %v");
  auto level = spdlog::level::warn;
  if (const char* env = std::getenv("ZLENS_LOG"); env && *env) {
    level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string_view(env) != "off") level = spdlog::level::warn;
  }
  logger->set_level(level);
  spdlog::set_default_logger(logger);
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  Options o;
  CLI::App app{"zlens: zoned-storage placement, trace and contract analysis"};
  app.require_subcommand(1);
  app.footer("Exit status: 0 clean, 1 input or integrity error, 2 usage error, 3 violations found (check).\n"
             "Set ZLENS_LOG=debug|info|warn|error|off for diagnostics on stderr.");

  auto* fiemap = app.add_subcommand("fiemap", "Per-file extent statistics and zone placement");
  add_out(fiemap, o);
  add_geometry(fiemap, o);
  fiemap->add_option("--extents", o.extents, "Extent dump")->required()->check(CLI::ExistingFile);

  auto* segmap = app.add_subcommand("segmap", "Join file extents with F2FS segment hotness");
  add_out(segmap, o);
  add_geometry(segmap, o);
  segmap->add_option("--extents", o.extents, "Extent dump")->required()->check(CLI::ExistingFile);
  segmap->add_option("--segments", o.segments, "Segment-info dump")->required()->check(CLI::ExistingFile);
  add_main_start(segmap, o);

  auto* imap = app.add_subcommand("imap", "Locate inodes through the F2FS NAT");
  add_out(imap, o);
  add_geometry(imap, o);
  imap->add_option("--image", o.image, "F2FS image or block device")->required()->check(CLI::ExistingFile);
  imap->add_option("--nid", o.nids, "Node id to locate (repeatable)");
  imap->add_option("--manifest", o.manifest, "Fixture manifest: locate its nids and compare against it")
      ->check(CLI::ExistingFile);

  auto* report = app.add_subcommand("trace-report", "Per-zone aggregates, reset heatmap and size histogram");
  add_out(report, o);
  add_geometry(report, o);
  report->add_option("--trace", o.trace, "Canonical JSONL trace")->required()->check(CLI::ExistingFile);
  report->add_option("--window", o.window, "Also aggregate per time window (e.g. 100ms, 1s)");
  report->add_option("--scale", o.scale, "Fixed heatmap scale maximum (default: largest count)");
  report->add_option("--columns", o.columns, "Heatmap grid columns")->check(CLI::PositiveNumber);

  auto* tl = app.add_subcommand("timeline", "Cross-layer event timeline and lane chart");
  add_out(tl, o);
  add_geometry(tl, o);
  tl->add_option("--trace", o.trace, "Canonical JSONL trace")->required()->check(CLI::ExistingFile);
  tl->add_option("--series", o.series, "Snapshot series adding PLACEMENT entries")->check(CLI::ExistingFile);
  tl->add_flag("--filter-trivial", o.filter_trivial, "Hide trivial promotions in the lane chart");
  tl->add_option("--width", o.width, "Lane chart width in pixels")->check(CLI::Range(200, 20000));

  auto* check = app.add_subcommand("check", "Evaluate the written contracts R1-R5");
  add_out(check, o);
  add_geometry(check, o);
  check->add_option("--trace", o.trace, "Canonical JSONL trace (R1, R4; sync epochs for R2)")
      ->check(CLI::ExistingFile);
  check->add_option("--extents", o.extents, "Extent dump (R2, R5)")->check(CLI::ExistingFile);
  check->add_option("--segments", o.segments, "Segment-info dump (R2)")->check(CLI::ExistingFile);
  check->add_option("--series", o.series, "Snapshot series (R3)")->check(CLI::ExistingFile);
  check->add_option("--thresholds", o.thresholds, "Threshold overrides (key=value)")->check(CLI::ExistingFile);
  check->add_option("--rules", o.rules, "Rules to run, e.g. R2,R5 (default: all the inputs allow)")->delimiter(',');
  add_main_start(check, o);

  auto* sim = app.add_subcommand("simulate", "Run a workload script through the zone state machine");
  add_out(sim, o);
  add_geometry(sim, o);
  sim->add_option("--script", o.script, "Workload script")->required()->check(CLI::ExistingFile);

  auto* fx = app.add_subcommand("fixtures", "Write the bundled fixture suite");
  add_out(fx, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (fiemap->parsed()) return run_fiemap(o);
    if (segmap->parsed()) return run_segmap(o);
    if (imap->parsed()) return run_imap(o);
    if (report->parsed()) return run_trace_report(o);
    if (tl->parsed()) return run_timeline(o);
    if (check->parsed()) return run_check(o);
    if (sim->parsed()) return run_simulate(o);
    if (fx->parsed()) return run_fixtures(o);
  } catch (const UsageError& e) {
    std::cerr << "zlens: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "zlens: " << to_string(e.code()) << ": " << e.what() << '\n';
    return kExitIntegrity;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "zlens: " << e.what() << '\n';
    return kExitIntegrity;
  }
  return kExitUsage;
}
