#pragma once

// Independent reference computations used only by tests. Nothing here may
// call into the code paths it checks.

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "zlens/extent_map.hpp"
#include "zlens/zone_model.hpp"

namespace zlens::oracle {

/// Byte totals per zone, found by walking every block of every written
/// extent and locating its zone with a linear scan over zone ranges.
inline std::map<uint64_t, uint64_t> per_block_zone_bytes(const zns::ZoneGeometry& g, const extent::FileMaps& maps) {
  std::map<uint64_t, uint64_t> out;
  for (const auto& m : maps) {
    for (const auto& e : m.extents) {
      if (e.flags & extent::kUnwritten) continue;
      uint64_t zone = 0;
      uint64_t zone_lo = 0;
      for (uint64_t addr = e.physical_start; addr < e.physical_start + e.length; addr += g.block_size) {
        if (addr < zone_lo) {
          zone = 0;
          zone_lo = 0;
        }
        while (addr >= zone_lo + g.zone_size) {
          zone_lo += g.zone_size;
          ++zone;
        }
        out[zone] += std::min<uint64_t>(g.block_size, e.physical_start + e.length - addr);
      }
    }
  }
  return out;
}

/// Smallest sample value v such that at least `percent`% of the samples
/// are <= v.
inline uint64_t percentile_by_counting(std::vector<uint64_t> values, unsigned percent) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  for (uint64_t v : values) {
    std::size_t le = std::count_if(values.begin(), values.end(), [&](uint64_t x) { return x <= v; });
    if (le * 100 >= percent * values.size()) return v;
  }
  return values.back();
}

/// Random block-aligned extents within the device span; each extent
/// belongs to its own file so logical ranges never overlap.
inline extent::FileMaps random_extents(const zns::ZoneGeometry& g, std::size_t count, std::mt19937_64& rng,
                                       uint64_t max_blocks = 256) {
  extent::FileMaps maps;
  const uint64_t total_blocks = g.span() / g.block_size;
  for (std::size_t i = 0; i < count; ++i) {
    uint64_t len_blocks = 1 + rng() % std::min(max_blocks, total_blocks);
    uint64_t start_block = rng() % (total_blocks - len_blocks + 1);
    extent::FileMap m;
    m.file_id = "f" + std::to_string(i);
    m.extents.push_back(
        {m.file_id, (rng() % 16) * g.block_size, start_block * g.block_size, len_blocks * g.block_size, 0});
    m.file_size = m.extents.back().logical_end();
    maps.push_back(std::move(m));
  }
  return maps;
}

/// Random geometry with small zones so extents cross boundaries often.
inline zns::ZoneGeometry random_geometry(std::mt19937_64& rng) {
  zns::ZoneGeometry g;
  g.block_size = (rng() % 2) ? 4096 : 512;
  g.zone_size = g.block_size * (8 + rng() % 512);
  g.zone_capacity = g.zone_size;
  g.nr_zones = 2 + rng() % 64;
  return g;
}

}  // namespace zlens::oracle
