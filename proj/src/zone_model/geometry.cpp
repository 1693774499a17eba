#include <fstream>
#include <string>

#include <fmt/core.h>

#include "zlens/text.hpp"
#include "zlens/zone_model.hpp"

namespace zlens::zns {

void ZoneGeometry::validate() const {
  if (block_size == 0 || zone_size == 0 || nr_zones == 0)
    throw Error(ErrorCode::Config, "geometry: block_size, zone_size and nr_zones must be non-zero");
  if (zone_size % block_size != 0)
    throw Error(ErrorCode::Config,
                fmt::format("geometry: zone_size {} is not a multiple of block_size {}", zone_size, block_size));
  if (zone_capacity == 0 || zone_capacity > zone_size)
    throw Error(ErrorCode::Config,
                fmt::format("geometry: zone_capacity {} must be in (0, zone_size={}]", zone_capacity, zone_size));
  if (zone_capacity % block_size != 0)
    throw Error(ErrorCode::Config,
                fmt::format("geometry: zone_capacity {} is not a multiple of block_size {}", zone_capacity,
                            block_size));
  if (nr_zones > UINT64_MAX / zone_size) throw Error(ErrorCode::Config, "geometry: device span overflows");
}

ZoneGeometry ZoneGeometry::uniform(uint64_t zone_size, uint64_t nr_zones, uint64_t block_size) {
  ZoneGeometry g;
  g.block_size = block_size;
  g.zone_size = zone_size;
  g.zone_capacity = zone_size;
  g.nr_zones = nr_zones;
  g.validate();
  return g;
}

ZoneGeometry parse_geometry(std::istream& in) {
  auto kv = text::read_key_values(in);
  ZoneGeometry g;
  auto take = [&](const char* key) -> std::optional<uint64_t> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    auto v = text::parse_size(it->second);
    if (!v) throw Error(ErrorCode::Config, fmt::format("geometry: bad value for {}: '{}'", key, it->second));
    kv.erase(it);
    return v;
  };
  if (auto v = take("block_size")) g.block_size = *v;
  auto zs = take("zone_size");
  auto nz = take("nr_zones");
  if (!zs || !nz) throw Error(ErrorCode::Config, "geometry: zone_size and nr_zones are required");
  g.zone_size = *zs;
  g.nr_zones = *nz;
  g.zone_capacity = take("zone_capacity").value_or(g.zone_size);
  if (auto it = kv.find("max_open_zones"); it != kv.end()) {
    if (it->second != "unlimited") {
      auto v = text::parse_u64(it->second);
      if (!v || *v > UINT32_MAX)
        throw Error(ErrorCode::Config, fmt::format("geometry: bad max_open_zones '{}'", it->second));
      if (*v != 0) g.max_open_zones = static_cast<uint32_t>(*v);
    }
    kv.erase(it);
  }
  if (!kv.empty()) throw Error(ErrorCode::Config, fmt::format("geometry: unknown key '{}'", kv.begin()->first));
  g.validate();
  return g;
}

ZoneGeometry load_geometry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open geometry file " + path);
  return parse_geometry(in);
}

void write_geometry(std::ostream& out, const ZoneGeometry& g) {
  out << "block_size=" << g.block_size << '\n'
      << "zone_size=" << g.zone_size << '\n'
      << "zone_capacity=" << g.zone_capacity << '\n'
      << "nr_zones=" << g.nr_zones << '\n'
      << "max_open_zones=" << (g.max_open_zones ? std::to_string(*g.max_open_zones) : "unlimited") << '\n';
}

uint64_t addr_to_zone(const ZoneGeometry& geometry, uint64_t addr) {
  if (addr >= geometry.span())
    throw Error(ErrorCode::Range, fmt::format("address {} outside device span [0, {})", addr, geometry.span()));
  return addr / geometry.zone_size;
}

}  // namespace zlens::zns
