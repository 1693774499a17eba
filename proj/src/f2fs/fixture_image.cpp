#include <algorithm>
#include <random>
#include <set>
#include <unordered_set>

#include <fmt/core.h>

#include "bytes.hpp"
#include "zlens/f2fs.hpp"
#include "zlens/text.hpp"

namespace zlens::f2fs {

std::string_view to_string(NidStatus s) {
  switch (s) {
    case NidStatus::Ok: return "OK";
    case NidStatus::Unallocated: return "UNALLOCATED";
    case NidStatus::Stale: return "STALE_NAT";
  }
  return "?";
}

namespace {

using detail::store_le;

constexpr uint32_t kSegment0 = 512;
constexpr uint32_t kCkptSegments = 2;
constexpr uint32_t kSitSegments = 2;
constexpr uint32_t kNatSegments = 2;
constexpr uint32_t kSsaSegments = 1;
constexpr uint32_t kBitmapBytes = (kNatSegments / 2) * kBlocksPerSegment / 8;

Superblock fixture_superblock(const ImageSpec& spec) {
  Superblock sb;
  sb.magic = kSuperMagic;
  sb.major_ver = 1;
  sb.minor_ver = 16;
  sb.log_sectorsize = 9;
  sb.log_sectors_per_block = 3;
  sb.log_blocksize = kLogBlockSize;
  sb.log_blocks_per_seg = kLogBlocksPerSegment;
  sb.segs_per_sec = 1;
  sb.secs_per_zone = 1;
  sb.segment0_blkaddr = kSegment0;
  sb.cp_blkaddr = kSegment0;
  sb.sit_blkaddr = sb.cp_blkaddr + kCkptSegments * kBlocksPerSegment;
  sb.nat_blkaddr = sb.sit_blkaddr + kSitSegments * kBlocksPerSegment;
  sb.ssa_blkaddr = sb.nat_blkaddr + kNatSegments * kBlocksPerSegment;
  sb.main_blkaddr = sb.ssa_blkaddr + kSsaSegments * kBlocksPerSegment;
  sb.segment_count_ckpt = kCkptSegments;
  sb.segment_count_sit = kSitSegments;
  sb.segment_count_nat = kNatSegments;
  sb.segment_count_ssa = kSsaSegments;
  sb.segment_count_main = spec.main_segments;
  sb.segment_count = kCkptSegments + kSitSegments + kNatSegments + kSsaSegments + spec.main_segments;
  sb.section_count = spec.main_segments;
  sb.block_count = sb.main_blkaddr + uint64_t{spec.main_segments} * kBlocksPerSegment;
  sb.root_ino = 3;
  sb.node_ino = 1;
  sb.meta_ino = 2;
  return sb;
}

void write_checkpoint_pack(std::span<std::byte> image, const Superblock& sb, uint32_t pack, uint64_t version,
                           const std::vector<uint8_t>& nat_bitmap, uint32_t valid_nodes, uint32_t next_free_nid,
                           bool corrupt) {
  std::vector<std::byte> cp(kBlockSize);
  store_le<uint64_t>(cp, 0, version);
  store_le<uint64_t>(cp, 8, uint64_t{sb.segment_count_main} * kBlocksPerSegment);
  store_le<uint64_t>(cp, 16, valid_nodes);
  store_le<uint32_t>(cp, 32, sb.segment_count_main > 6 ? sb.segment_count_main - 6 : 0);
  for (uint32_t i = 0; i < 8; ++i) {
    store_le<uint32_t>(cp, 36 + 4 * i, i < 3 ? i : 0xFFFFFFFFu);
    store_le<uint32_t>(cp, 84 + 4 * i, i < 3 ? 3 + i : 0xFFFFFFFFu);
  }
  store_le<uint32_t>(cp, 132, 0x1);  // CP_UMOUNT_FLAG
  store_le<uint32_t>(cp, 136, 2);    // head + tail
  store_le<uint32_t>(cp, 140, 1);
  store_le<uint32_t>(cp, 144, valid_nodes);
  store_le<uint32_t>(cp, 148, valid_nodes);
  store_le<uint32_t>(cp, 152, next_free_nid);
  store_le<uint32_t>(cp, 156, kBitmapBytes);
  store_le<uint32_t>(cp, 160, kBitmapBytes);
  store_le<uint32_t>(cp, 164, kCpChecksumOffset);
  for (std::size_t i = 0; i < nat_bitmap.size(); ++i)
    cp[kCpBitmapOffset + kBitmapBytes + i] = static_cast<std::byte>(nat_bitmap[i]);
  store_le<uint32_t>(cp, kCpChecksumOffset, crc32(kSuperMagic, std::span<const std::byte>(cp).first(kCpChecksumOffset)));

  const uint64_t head = (uint64_t{sb.cp_blkaddr} + pack * kBlocksPerSegment) * kBlockSize;
  std::copy(cp.begin(), cp.end(), image.begin() + head);
  std::copy(cp.begin(), cp.end(), image.begin() + head + kBlockSize);
  if (corrupt) image[head + 40] ^= std::byte{0x5a};
}

}  // namespace

FixtureImage build_fixture_image(const ImageSpec& spec) {
  if (spec.main_segments < 1) throw Error(ErrorCode::Config, "fixture image needs at least one main segment");
  if (spec.stale > spec.nid_count) throw Error(ErrorCode::Config, "more stale nids than allocated nids");
  if (spec.zone_size == 0 || spec.zone_size % kSegmentBytes != 0)
    throw Error(ErrorCode::Config, "fixture zone size must be a positive multiple of 2MiB");

  std::mt19937_64 rng(spec.seed);
  FixtureImage fx;
  fx.superblock = fixture_superblock(spec);
  const Superblock& sb = fx.superblock;
  const uint64_t image_bytes = sb.block_count * kBlockSize;
  fx.geometry = zns::ZoneGeometry::uniform(spec.zone_size, (image_bytes + spec.zone_size - 1) / spec.zone_size);
  fx.bytes.assign(image_bytes, std::byte{0});
  std::span<std::byte> img(fx.bytes);

  const uint64_t main_blocks = uint64_t{sb.segment_count_main} * kBlocksPerSegment;
  if (spec.nid_count + spec.unallocated > main_blocks)
    throw Error(ErrorCode::Config, "more nids than main-area blocks");

  // Superblock copies.
  std::vector<std::byte> raw(kSuperRegion);
  serialize_superblock(sb, raw);
  for (std::size_t i = 0; i < 16; ++i) raw[108 + i] = static_cast<std::byte>(rng() & 0xff);
  const std::string_view label = "zlens-fixture";
  for (std::size_t i = 0; i < label.size(); ++i) raw[1668 + i] = static_cast<std::byte>(label[i]);
  std::copy(raw.begin(), raw.end(), img.begin() + kSuperOffset);
  std::copy(raw.begin(), raw.end(), img.begin() + kBlockSize + kSuperOffset);
  if (spec.corrupt_primary_superblock) store_le<uint32_t>(img, kSuperOffset, 0);

  // Node ids: a run from the root inode, then a scatter across the NAT.
  const uint64_t nid_limit = max_nid(sb);
  std::vector<uint32_t> nids;
  std::unordered_set<uint32_t> taken;
  const uint32_t total = spec.nid_count + spec.unallocated;
  for (uint32_t n = sb.root_ino; nids.size() < std::min<uint32_t>(total, (total + 1) / 2 + 1); ++n) {
    nids.push_back(n);
    taken.insert(n);
  }
  while (nids.size() < total) {
    auto n = static_cast<uint32_t>(sb.root_ino + rng() % (nid_limit - sb.root_ino));
    if (taken.insert(n).second) nids.push_back(n);
  }

  // Distinct node blocks in the main area.
  std::vector<uint32_t> blocks;
  std::unordered_set<uint32_t> used_blocks;
  while (blocks.size() < spec.nid_count) {
    auto b = static_cast<uint32_t>(sb.main_blkaddr + rng() % main_blocks);
    if (used_blocks.insert(b).second) blocks.push_back(b);
  }

  // NAT version bitmap: which of the two copies is live, per NAT block.
  std::vector<uint8_t> live_bitmap(kBitmapBytes);
  for (auto& byte : live_bitmap) byte = static_cast<uint8_t>(rng() & 0xff);
  std::vector<uint8_t> other_bitmap(kBitmapBytes);
  for (std::size_t i = 0; i < kBitmapBytes; ++i) other_bitmap[i] = static_cast<uint8_t>(~live_bitmap[i]);

  auto nat_addr = [&](uint32_t nid, bool live) {
    const uint64_t block_off = nid / kNatEntriesPerBlock;
    const uint64_t seg_off = block_off / kBlocksPerSegment;
    uint64_t addr = sb.nat_blkaddr + seg_off * 2 * kBlocksPerSegment + block_off % kBlocksPerSegment;
    bool second = (live_bitmap[block_off / 8] >> (7 - block_off % 8)) & 1;
    if (second == live) addr += kBlocksPerSegment;
    return addr;
  };
  auto put_nat = [&](uint64_t block, uint32_t nid, uint32_t ino, uint32_t addr) {
    const uint64_t off = block * kBlockSize + (nid % kNatEntriesPerBlock) * kNatEntrySize;
    img[off] = std::byte{0};
    store_le<uint32_t>(img, off + 1, ino);
    store_le<uint32_t>(img, off + 5, addr);
  };

  const uint64_t live_version = 0x1000 + rng() % 0x1000;
  for (std::size_t i = 0; i < nids.size(); ++i) {
    const uint32_t nid = nids[i];
    const bool allocated = i < spec.nid_count;
    const bool stale = allocated && i >= spec.nid_count - spec.stale;
    const uint32_t addr = allocated ? blocks[i] : 0;
    put_nat(nat_addr(nid, true), nid, nid, addr);
    // The dead copy points somewhere plausible but wrong.
    put_nat(nat_addr(nid, false), nid, nid,
            static_cast<uint32_t>(sb.main_blkaddr + rng() % main_blocks));

    ManifestEntry me;
    me.nid = nid;
    me.block_addr = addr;
    me.status = allocated ? (stale ? NidStatus::Stale : NidStatus::Ok) : NidStatus::Unallocated;
    if (allocated) {
      me.segment = (addr - sb.main_blkaddr) / kBlocksPerSegment;
      me.zone = uint64_t{addr} * kBlockSize / spec.zone_size;
      const uint64_t node = uint64_t{addr} * kBlockSize;
      store_le<uint16_t>(img, node, 0x81a4);  // i_mode: regular file, 0644
      store_le<uint32_t>(img, node + kNodeFooterOffset, stale ? nid ^ 0x8000u : nid);
      store_le<uint32_t>(img, node + kNodeFooterOffset + 4, stale ? nid ^ 0x8000u : nid);
      store_le<uint64_t>(img, node + kNodeFooterOffset + 12, live_version);
    }
    fx.manifest.push_back(me);
  }

  // Two checkpoint packs. The live one carries the true bitmap; the other
  // carries its complement, so choosing the wrong pack reads dead NAT copies.
  const uint32_t live_pack = static_cast<uint32_t>(rng() % 2);
  const uint32_t next_nid = *std::max_element(nids.begin(), nids.end()) + 1;
  if (spec.corrupt_newest_checkpoint) {
    write_checkpoint_pack(img, sb, live_pack, live_version, live_bitmap, spec.nid_count, next_nid, false);
    write_checkpoint_pack(img, sb, 1 - live_pack, live_version + 1, other_bitmap, spec.nid_count, next_nid, true);
  } else {
    write_checkpoint_pack(img, sb, live_pack, live_version, live_bitmap, spec.nid_count, next_nid, false);
    write_checkpoint_pack(img, sb, 1 - live_pack, live_version - 1, other_bitmap, spec.nid_count, next_nid, false);
  }
  fx.live_checkpoint_version = live_version;
  fx.live_checkpoint_pack = live_pack;
  if (spec.corrupt_primary_superblock) fx.superblock.from_backup = true;

  std::sort(fx.manifest.begin(), fx.manifest.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.nid < b.nid; });
  return fx;
}

void write_manifest(std::ostream& out, std::span<const ManifestEntry> manifest) {
  out << "# nid block_addr segment zone status\n";
  for (const auto& m : manifest)
    out << m.nid << ' ' << m.block_addr << ' ' << (m.segment ? std::to_string(*m.segment) : "-") << ' ' << m.zone << ' '
        << to_string(m.status) << '\n';
}

std::vector<ManifestEntry> read_manifest(std::istream& in) {
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto f = text::split_ws(body);
    if (f.size() != 5) throw ParseError(lineno, "expected 'nid block_addr segment zone status'");
    auto nid = text::parse_u64(f[0]);
    auto addr = text::parse_u64(f[1]);
    auto zone = text::parse_u64(f[3]);
    if (!nid || !addr || !zone) throw ParseError(lineno, "nid, block_addr and zone must be unsigned integers");
    ManifestEntry m;
    m.nid = static_cast<uint32_t>(*nid);
    m.block_addr = static_cast<uint32_t>(*addr);
    m.zone = *zone;
    if (f[2] != "-") {
      auto seg = text::parse_u64(f[2]);
      if (!seg) throw ParseError(lineno, "segment must be an unsigned integer or '-'");
      m.segment = *seg;
    }
    if (f[4] == "OK") m.status = NidStatus::Ok;
    else if (f[4] == "UNALLOCATED") m.status = NidStatus::Unallocated;
    else if (f[4] == "STALE_NAT") m.status = NidStatus::Stale;
    else throw ParseError(lineno, fmt::format("unknown status '{}'", f[4]));
    out.push_back(m);
  }
  return out;
}

}  // namespace zlens::f2fs
