#include "zlens/fixtures.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include <fmt/core.h>

namespace zlens::fixtures {

using trace::Layer;
using trace::Op;
using trace::TraceEvent;
using zns::KiB;
using zns::MiB;

namespace {

TraceEvent app(uint64_t ts, Op op, std::map<std::string, std::string> attrs) {
  return TraceEvent{ts, Layer::App, op, std::nullopt, std::nullopt, std::nullopt, std::move(attrs)};
}

TraceEvent fs_write(uint64_t ts, const std::string& file, uint64_t offset, uint64_t len) {
  return TraceEvent{ts, Layer::Fs, Op::Write, std::nullopt, len, std::nullopt,
                    {{"file", file}, {"offset", std::to_string(offset)}}};
}

TraceEvent fs_fsync(uint64_t ts, const std::string& file) {
  return TraceEvent{ts, Layer::Fs, Op::Fsync, std::nullopt, std::nullopt, std::nullopt, {{"file", file}}};
}

TraceEvent dev_write(uint64_t ts, const zns::ZoneGeometry& g, uint64_t addr, uint64_t len) {
  return TraceEvent{ts, Layer::Dev, Op::Write, addr, len, addr / g.zone_size, {}};
}

uint64_t seg_addr(uint64_t segment) { return f2fs::segment_start(kPlacementMainStart, segment); }

f2fs::SegmentRecord seg(const zns::ZoneGeometry& g, uint64_t index, f2fs::Hotness h, uint32_t valid) {
  return {index, h, valid, seg_addr(index) / g.zone_size};
}

extent::FileMap file(const std::string& id, uint64_t size, std::vector<extent::Extent> extents) {
  for (auto& e : extents) e.file_id = id;
  return extent::FileMap{id, size, std::move(extents), 0};
}

GroupingCase sstable_case(bool hot_footer) {
  using f2fs::Hotness;
  GroupingCase c;
  c.geometry = placement_geometry();
  const auto& g = c.geometry;
  const std::string sst = "000042.sst";
  const uint64_t data = 4 * MiB;
  const uint64_t footer = 4 * KiB;
  const uint64_t data_at = seg_addr(4);
  const uint64_t footer_at = hot_footer ? seg_addr(20) : data_at + data;

  if (hot_footer)
    c.maps.push_back(file(sst, data + footer,
                          {{"", 0, data_at, data, 0}, {"", data, footer_at, footer, extent::kLast}}));
  else
    c.maps.push_back(file(sst, data + footer, {{"", 0, data_at, data + footer, extent::kLast}}));
  c.maps.push_back(file("000040.sst", 1 * MiB, {{"", 0, seg_addr(8), 1 * MiB, extent::kLast}}));
  c.maps.push_back(file("000012.sst", 2 * MiB, {{"", 0, seg_addr(12), 2 * MiB, extent::kLast}}));

  c.segments = {seg(g, 4, Hotness::WarmData, 512),  seg(g, 5, Hotness::WarmData, 512),
                seg(g, 6, Hotness::WarmData, hot_footer ? 0 : 1), seg(g, 8, Hotness::WarmData, 256),
                seg(g, 12, Hotness::ColdData, 512), seg(g, 20, Hotness::HotData, hot_footer ? 1 : 0)};

  uint64_t ts = 1'000'000;
  auto& ev = c.events;
  ev.push_back(fs_write(ts, "000012.sst", 0, 2 * MiB));
  ev.push_back(dev_write(ts + 100, g, seg_addr(12), 2 * MiB));
  ev.push_back(fs_fsync(ts + 200, "000012.sst"));
  ev.push_back(fs_write(ts + 500, "000040.sst", 0, 1 * MiB));
  ev.push_back(dev_write(ts + 600, g, seg_addr(8), 1 * MiB));
  ev.push_back(fs_fsync(ts + 700, "000040.sst"));
  ts = 2'000'000;
  for (uint64_t off = 0; off < data; off += 1 * MiB) {
    ev.push_back(fs_write(ts, sst, off, 1 * MiB));
    ev.push_back(dev_write(ts + 100, g, data_at + off, 1 * MiB));
    ts += 1'000;
  }
  ev.push_back(fs_fsync(ts, sst));
  ts += 1'000;
  ev.push_back(fs_write(ts, sst, data, footer));
  ev.push_back(dev_write(ts + 100, g, footer_at, footer));
  ev.push_back(fs_fsync(ts + 1'000, sst));
  return c;
}

}  // namespace

zns::ZoneGeometry placement_geometry() { return zns::ZoneGeometry::uniform(8 * MiB, 32); }

ResetSkew reset_skew() {
  ResetSkew f;
  f.geometry = zns::ZoneGeometry::uniform(64 * MiB, 64);
  const auto& g = f.geometry;
  f.expected_resets.resize(g.nr_zones);
  for (uint64_t z = 0; z < g.nr_zones; ++z) f.expected_resets[z] = z == 2 ? 40 : z >= 60 ? 0 : 3 + z % 3;

  zns::WorkloadScript script;
  uint64_t ts = 1'000;
  auto add = [&](zns::CommandOp op, uint64_t target, uint64_t len) {
    script.push_back({ts, op, target, len});
    ts += 1'000;
  };
  const uint64_t rounds = *std::max_element(f.expected_resets.begin(), f.expected_resets.end());
  for (uint64_t r = 0; r < rounds; ++r) {
    for (uint64_t z = 0; z < g.nr_zones; ++z) {
      if (f.expected_resets[z] <= r) continue;
      add(zns::CommandOp::Write, g.zone_start(z), 512 * KiB);
      add(zns::CommandOp::Write, g.zone_start(z) + 512 * KiB, 512 * KiB);
      add(zns::CommandOp::Reset, z, 0);
    }
  }
  for (uint64_t z = 0; z < g.nr_zones; ++z) {
    if (f.expected_resets[z] != 0) continue;
    add(zns::CommandOp::Write, g.zone_start(z), 1 * MiB);
    add(zns::CommandOp::Finish, z, 0);
  }
  f.events = zns::run_script(g, script).events;
  return f;
}

GroupingCase sstable_footer() { return sstable_case(true); }
GroupingCase sstable_clean() { return sstable_case(false); }

GcCase gc_reclassification() {
  using f2fs::Hotness;
  GcCase c;
  c.geometry = placement_geometry();
  const auto& g = c.geometry;
  c.series.main_start = kPlacementMainStart;

  Snapshot a;
  a.ts = 1'000'000'000;
  a.maps = {file("hot.log", 512 * KiB, {{"", 0, seg_addr(4), 512 * KiB, extent::kLast}}),
            file("warm.sst", 512 * KiB, {{"", 0, seg_addr(12), 512 * KiB, extent::kLast}}),
            file("stable.sst", 1 * MiB, {{"", 0, seg_addr(16), 1 * MiB, extent::kLast}})};
  a.segments = {seg(g, 4, Hotness::HotData, 128), seg(g, 12, Hotness::WarmData, 128),
                seg(g, 16, Hotness::WarmData, 256)};

  Snapshot b;
  b.ts = 2'000'000'000;
  b.maps = {file("hot.log", 512 * KiB, {{"", 0, seg_addr(28), 512 * KiB, extent::kLast}}),
            file("warm.sst", 512 * KiB, {{"", 0, seg_addr(28) + 512 * KiB, 512 * KiB, extent::kLast}}),
            file("stable.sst", 1 * MiB, {{"", 0, seg_addr(16), 1 * MiB, extent::kLast}})};
  b.segments = {seg(g, 4, Hotness::HotData, 0), seg(g, 12, Hotness::WarmData, 0), seg(g, 16, Hotness::WarmData, 256),
                seg(g, 28, Hotness::ColdData, 256)};
  for (auto* s : {&a, &b})
    for (auto& m : s->maps) m.snapshot_ts = s->ts;

  c.series.snapshots = {std::move(a), std::move(b)};
  c.moved = {"hot.log", "warm.sst"};
  return c;
}

MoveCase bulk_moves(std::size_t files, std::size_t moved, uint64_t seed) {
  MoveCase c;
  c.geometry = placement_geometry();
  if (moved > files || files > 128) throw Error(ErrorCode::Config, "bulk_moves supports up to 128 files");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(files);
  for (std::size_t i = 0; i < files; ++i) order[i] = i;
  for (std::size_t i = files; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  std::set<std::size_t> movers(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(moved));

  c.before.ts = 1'000;
  c.after.ts = 2'000;
  std::size_t next_far = 0;
  for (std::size_t i = 0; i < files; ++i) {
    const std::string id = fmt::format("f{:03}", i);
    const uint64_t at = kPlacementMainStart + i * 128 * KiB;
    c.before.maps.push_back(file(id, 64 * KiB, {{"", 0, at, 64 * KiB, extent::kLast}}));
    uint64_t after_at = at;
    if (movers.contains(i)) {
      after_at = 160 * MiB + next_far++ * 128 * KiB;
      c.moved.insert(id);
    }
    c.after.maps.push_back(file(id, 64 * KiB, {{"", 0, after_at, 64 * KiB, extent::kLast}}));
  }
  return c;
}

CompactionCase lsm_compactions() {
  CompactionCase c;
  c.geometry = placement_geometry();
  const auto& g = c.geometry;
  constexpr uint64_t ms = 1'000'000;
  auto& ev = c.events;
  ev.push_back(app(1 * ms, Op::Flush, {{"files", "31"}, {"level", "0"}}));
  ev.push_back(fs_write(1 * ms + 100'000, "31", 0, 1 * MiB));
  ev.push_back(dev_write(1 * ms + 200'000, g, g.zone_start(4), 1 * MiB));
  ev.push_back(app(5 * ms, Op::Flush, {{"files", "36"}, {"level", "0"}}));
  ev.push_back(fs_write(5 * ms + 100'000, "36", 0, 1 * MiB));
  ev.push_back(dev_write(5 * ms + 200'000, g, g.zone_start(4) + 1 * MiB, 1 * MiB));
  ev.push_back(app(10 * ms, Op::CompactionBegin, {{"cid", "1"}, {"files", "31,33,34"}, {"level", "1"}}));
  ev.push_back(fs_write(15 * ms, "37", 0, 2 * MiB));
  ev.push_back(dev_write(15 * ms + 100'000, g, g.zone_start(6), 2 * MiB));
  ev.push_back(app(20 * ms, Op::CompactionEnd, {{"cid", "1"}, {"files", "37"}, {"level", "1"}}));
  ev.push_back(app(21 * ms, Op::FileDelete, {{"files", "31"}}));
  ev.push_back(app(22 * ms, Op::FileDelete, {{"files", "33"}}));
  ev.push_back(app(23 * ms, Op::FileDelete, {{"files", "34"}}));
  ev.push_back(app(25 * ms, Op::CompactionBegin, {{"cid", "2"}, {"files", "36"}, {"level", "1"}, {"trivial", "1"}}));
  ev.push_back(app(26 * ms, Op::CompactionEnd, {{"cid", "2"}, {"files", "36"}, {"level", "1"}, {"trivial", "1"}}));
  ev.push_back(app(30 * ms, Op::CompactionBegin, {{"cid", "3"}, {"files", "37,35,38"}, {"level", "2"}}));
  ev.push_back(fs_write(35 * ms, "41", 0, 2 * MiB));
  ev.push_back(dev_write(35 * ms + 100'000, g, g.zone_start(9), 2 * MiB));
  ev.push_back(fs_write(36 * ms, "42", 0, 1 * MiB));
  ev.push_back(dev_write(36 * ms + 100'000, g, g.zone_start(10), 1 * MiB));
  ev.push_back(app(40 * ms, Op::CompactionEnd, {{"cid", "3"}, {"files", "41,42"}, {"level", "2"}}));
  ev.push_back(app(41 * ms, Op::FileDelete, {{"files", "37"}}));
  ev.push_back(app(42 * ms, Op::FileDelete, {{"files", "35"}}));
  ev.push_back(app(43 * ms, Op::FileDelete, {{"files", "38"}}));

  for (const char* in : {"31", "33", "34"}) c.edges.emplace(in, "37");
  for (const char* in : {"37", "35", "38"})
    for (const char* out : {"41", "42"}) c.edges.emplace(in, out);
  c.delete_links = {{"31", "1"}, {"33", "1"}, {"34", "1"}, {"35", "3"}, {"37", "3"}, {"38", "3"}};
  return c;
}

CompactionCase random_compactions(std::size_t k, uint64_t seed) {
  CompactionCase c;
  c.geometry = placement_geometry();
  std::mt19937_64 rng(seed);
  struct Live {
    std::string id;
    uint64_t created;
  };
  std::vector<Live> live;
  uint64_t next_id = 1;
  auto fresh = [&] { return std::to_string(next_id++); };
  constexpr uint64_t us = 1'000;

  for (std::size_t j = 0; j < k; ++j) {
    const uint64_t begin = (j + 1) * 1'000 * us + rng() % (500 * us);
    for (int f = 0; f < 2; ++f) {
      auto id = fresh();
      const uint64_t t = begin - 400 * us + static_cast<uint64_t>(f) * us;
      c.events.push_back(app(t, Op::Flush, {{"files", id}, {"level", "0"}}));
      live.push_back({id, t});
    }
    const std::string cid = fmt::format("c{}", j);
    const uint64_t end = begin + 100 * us + rng() % (3'000 * us);

    if (rng() % 5 == 0) {  // trivial promotion; the file stays live
      std::vector<std::size_t> ready;
      for (std::size_t i = 0; i < live.size(); ++i)
        if (live[i].created < begin) ready.push_back(i);
      const auto& f = live[ready[rng() % ready.size()]];
      c.events.push_back(app(begin, Op::CompactionBegin, {{"cid", cid}, {"files", f.id}, {"level", "1"}, {"trivial", "1"}}));
      c.events.push_back(app(end, Op::CompactionEnd, {{"cid", cid}, {"files", f.id}, {"level", "1"}, {"trivial", "1"}}));
      continue;
    }

    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < live.size(); ++i)
      if (live[i].created < begin) ready.push_back(i);
    for (std::size_t i = ready.size(); i > 1; --i) std::swap(ready[i - 1], ready[rng() % i]);
    const std::size_t n_in = std::min<std::size_t>(ready.size(), 2 + rng() % 2);
    std::vector<std::size_t> picked(ready.begin(), ready.begin() + static_cast<std::ptrdiff_t>(n_in));
    std::sort(picked.begin(), picked.end());
    std::vector<std::string> inputs;
    for (auto i : picked) inputs.push_back(live[i].id);
    for (auto it = picked.rbegin(); it != picked.rend(); ++it) live.erase(live.begin() + static_cast<std::ptrdiff_t>(*it));

    std::vector<std::string> outputs;
    const std::size_t n_out = 1 + rng() % 2;
    for (std::size_t o = 0; o < n_out; ++o) outputs.push_back(fresh());
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
      return s;
    };
    const std::string level = std::to_string(1 + j % 3);
    c.events.push_back(app(begin, Op::CompactionBegin, {{"cid", cid}, {"files", join(inputs)}, {"level", level}}));
    c.events.push_back(app(end, Op::CompactionEnd, {{"cid", cid}, {"files", join(outputs)}, {"level", level}}));
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      c.events.push_back(app(end + (1 + i) * us, Op::FileDelete, {{"files", inputs[i]}}));
      c.delete_links.emplace_back(inputs[i], cid);
      for (const auto& out : outputs) c.edges.emplace(inputs[i], out);
    }
    for (const auto& out : outputs) live.push_back({out, end});
  }
  std::stable_sort(c.events.begin(), c.events.end(),
                   [](const TraceEvent& a, const TraceEvent& b) { return a.ts_ns < b.ts_ns; });
  std::sort(c.delete_links.begin(), c.delete_links.end());
  return c;
}

std::vector<std::string> write_all(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> written;
  auto open = [&](const std::string& rel, std::ios::openmode mode = std::ios::out) {
    fs::create_directories((dir / rel).parent_path());
    std::ofstream out(dir / rel, mode | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / rel).string());
    written.push_back(rel);
    return out;
  };

  {
    auto f = reset_skew();
    auto geo = open("reset_skew/device.geometry");
    zns::write_geometry(geo, f.geometry);
    auto tr = open("reset_skew/trace.jsonl");
    trace::write_trace(tr, f.events);
  }
  {
    auto geo = open("placement.geometry");
    zns::write_geometry(geo, placement_geometry());
  }
  for (auto [name, c] : {std::pair{"footer", sstable_footer()}, std::pair{"clean", sstable_clean()}}) {
    const std::string base = std::string(name) + "/";
    auto ex = open(base + "extents.txt");
    extent::write_extent_dump(ex, c.maps);
    auto sg = open(base + "segments.txt");
    f2fs::write_segment_info(sg, c.segments);
    auto tr = open(base + "trace.jsonl");
    trace::write_trace(tr, c.events);
  }
  {
    auto c = gc_reclassification();
    auto series = open("gc/series.txt");
    series << "#@main_start " << c.series.main_start << '\n';
    for (std::size_t i = 0; i < c.series.snapshots.size(); ++i) {
      const auto& s = c.series.snapshots[i];
      auto ex = open(fmt::format("gc/snap{}.extents", i));
      extent::write_extent_dump(ex, s.maps);
      auto sg = open(fmt::format("gc/snap{}.segments", i));
      f2fs::write_segment_info(sg, s.segments);
      series << s.ts << fmt::format(" snap{}.extents snap{}.segments\n", i, i);
    }
  }
  {
    auto c = lsm_compactions();
    auto tr = open("lsm/trace.jsonl");
    trace::write_trace(tr, c.events);
    auto truth = open("lsm/lineage.txt");
    truth << "# input output\n";
    for (const auto& [in, out] : c.edges) truth << in << ' ' << out << '\n';
    truth << "# deleted-file cid\n";
    for (const auto& [file, cid] : c.delete_links) truth << "delete " << file << ' ' << cid << '\n';
  }
  for (auto [name, corrupt] : {std::pair{"f2fs/image.img", false}, std::pair{"f2fs/image_backup_sb.img", true}}) {
    f2fs::ImageSpec spec;
    spec.corrupt_primary_superblock = corrupt;
    auto fx = f2fs::build_fixture_image(spec);
    auto img = open(name, std::ios::out | std::ios::binary);
    img.write(reinterpret_cast<const char*>(fx.bytes.data()), static_cast<std::streamsize>(fx.bytes.size()));
    if (!corrupt) {
      auto man = open("f2fs/manifest.txt");
      f2fs::write_manifest(man, fx.manifest);
      auto geo = open("f2fs/device.geometry");
      zns::write_geometry(geo, fx.geometry);
    }
  }
  std::sort(written.begin(), written.end());
  return written;
}

}  // namespace zlens::fixtures
