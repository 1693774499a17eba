#include <optional>

#include <fmt/core.h>

#include "bytes.hpp"
#include "zlens/f2fs.hpp"

namespace zlens::f2fs {

namespace {

uint32_t checkpoint_crc(std::span<const std::byte> block, uint32_t ofs) {
  uint32_t crc = crc32(kSuperMagic, block.first(ofs));
  if (ofs < kCpChecksumOffset) crc = crc32(crc, block.subspan(ofs + 4));
  return crc;
}

Checkpoint decode_checkpoint(std::span<const std::byte> b) {
  using detail::load_le;
  Checkpoint cp;
  cp.version = load_le<uint64_t>(b, 0);
  for (std::size_t i = 0; i < 8; ++i) {
    cp.cur_node_segno[i] = load_le<uint32_t>(b, 36 + 4 * i);
    cp.cur_data_segno[i] = load_le<uint32_t>(b, 84 + 4 * i);
  }
  cp.flags = load_le<uint32_t>(b, 132);
  cp.pack_total_blocks = load_le<uint32_t>(b, 136);
  cp.valid_node_count = load_le<uint32_t>(b, 144);
  cp.valid_inode_count = load_le<uint32_t>(b, 148);
  cp.next_free_nid = load_le<uint32_t>(b, 152);
  cp.sit_bitmap_bytes = load_le<uint32_t>(b, 156);
  cp.nat_bitmap_bytes = load_le<uint32_t>(b, 160);
  cp.checksum_offset = load_le<uint32_t>(b, 164);
  return cp;
}

std::optional<Checkpoint> read_pack(const ImageSource& image, const Superblock& sb, uint32_t pack) {
  const uint32_t head_addr = sb.cp_blkaddr + pack * sb.blocks_per_segment();
  if (uint64_t{head_addr + 1} * kBlockSize > image.size()) return std::nullopt;
  auto head = image.read_block(head_addr);
  if (!checkpoint_block_valid(head)) return std::nullopt;
  Checkpoint cp = decode_checkpoint(head);
  if (cp.pack_total_blocks == 0 || cp.pack_total_blocks > sb.blocks_per_segment()) return std::nullopt;
  const uint32_t tail_addr = head_addr + cp.pack_total_blocks - 1;
  if (uint64_t{tail_addr + 1} * kBlockSize > image.size()) return std::nullopt;
  auto tail = image.read_block(tail_addr);
  if (!checkpoint_block_valid(tail) || detail::load_le<uint64_t>(tail, 0) != cp.version) return std::nullopt;

  cp.pack = pack;
  cp.block_addr = head_addr;

  std::size_t bitmap_at = kCpBitmapOffset;
  if (cp.flags & kCpLargeNatBitmapFlag) bitmap_at += 4;
  else if (sb.cp_payload == 0) bitmap_at += cp.sit_bitmap_bytes;
  const std::size_t limit = (cp.flags & kCpLargeNatBitmapFlag) ? kBlockSize : cp.checksum_offset;
  if (bitmap_at + cp.nat_bitmap_bytes > limit) return std::nullopt;
  const uint64_t nat_blocks = uint64_t{sb.segment_count_nat / 2} * sb.blocks_per_segment();
  if (uint64_t{cp.nat_bitmap_bytes} * 8 < nat_blocks) return std::nullopt;
  cp.nat_bitmap.resize(cp.nat_bitmap_bytes);
  for (std::size_t i = 0; i < cp.nat_bitmap_bytes; ++i)
    cp.nat_bitmap[i] = std::to_integer<uint8_t>(head[bitmap_at + i]);
  return cp;
}

}  // namespace

bool checkpoint_block_valid(std::span<const std::byte> block) {
  if (block.size() != kBlockSize) return false;
  uint32_t ofs = detail::load_le<uint32_t>(block, 164);
  if (ofs < kCpBitmapOffset || ofs > kCpChecksumOffset) return false;
  return detail::load_le<uint32_t>(block, ofs) == checkpoint_crc(block, ofs);
}

Checkpoint load_checkpoint(const ImageSource& image, const Superblock& sb) {
  auto a = read_pack(image, sb, 0);
  auto b = read_pack(image, sb, 1);
  if (a && b) return b->version > a->version ? *b : *a;
  if (a) return *a;
  if (b) return *b;
  throw Error(ErrorCode::NoCheckpoint,
              fmt::format("no valid checkpoint pack at block {} or {}", sb.cp_blkaddr,
                          sb.cp_blkaddr + sb.blocks_per_segment()));
}

uint64_t max_nid(const Superblock& sb) {
  return uint64_t{sb.segment_count_nat / 2} * sb.blocks_per_segment() * kNatEntriesPerBlock;
}

uint64_t nat_block_address(const Superblock& sb, const Checkpoint& cp, uint32_t nid) {
  if (nid >= max_nid(sb))
    throw Error(ErrorCode::Range, fmt::format("nid {} outside the NAT (max nid {})", nid, max_nid(sb) - 1));
  const uint64_t bps = sb.blocks_per_segment();
  const uint64_t block_off = nid / kNatEntriesPerBlock;
  const uint64_t seg_off = block_off >> sb.log_blocks_per_seg;
  uint64_t addr = sb.nat_blkaddr + ((seg_off << sb.log_blocks_per_seg) << 1) + (block_off & (bps - 1));
  if (detail::test_bit_msb(cp.nat_bitmap, block_off)) addr += bps;
  return addr;
}

NatEntry read_nat_entry(const ImageSource& image, const Superblock& sb, const Checkpoint& cp, uint32_t nid) {
  auto block = image.read_block(nat_block_address(sb, cp, nid));
  const std::size_t off = (nid % kNatEntriesPerBlock) * kNatEntrySize;
  NatEntry e;
  e.nid = nid;
  e.version = std::to_integer<uint8_t>(block[off]);
  e.ino = detail::load_le<uint32_t>(block, off + 1);
  e.block_addr = detail::load_le<uint32_t>(block, off + 5);
  return e;
}

InodeLocation locate_inode(const ImageSource& image, const Superblock& sb, const Checkpoint& cp,
                           const zns::ZoneGeometry& geometry, uint32_t nid) {
  NatEntry e = read_nat_entry(image, sb, cp, nid);
  if (e.block_addr == 0 || e.block_addr == 0xFFFFFFFFu)
    throw Error(ErrorCode::Unallocated, fmt::format("nid {} is not allocated (NAT block address {:#x})", nid,
                                                    e.block_addr));
  if (e.block_addr >= sb.block_count)
    throw Error(ErrorCode::Integrity,
                fmt::format("nid {}: NAT block address {} beyond block count {}", nid, e.block_addr, sb.block_count));

  InodeLocation loc;
  loc.nid = nid;
  loc.block_addr = e.block_addr;
  loc.zone = zns::addr_to_zone(geometry, uint64_t{e.block_addr} * kBlockSize);
  if (e.block_addr >= sb.main_blkaddr) loc.segment = (e.block_addr - sb.main_blkaddr) >> sb.log_blocks_per_seg;

  auto node = image.read_block(e.block_addr);
  loc.footer_nid = detail::load_le<uint32_t>(node, kNodeFooterOffset);
  loc.footer_ino = detail::load_le<uint32_t>(node, kNodeFooterOffset + 4);
  if (loc.footer_nid != nid)
    loc.warning = fmt::format("STALE_NAT: NAT maps nid {} to block {}, but the node footer there carries nid {}", nid,
                              e.block_addr, loc.footer_nid);
  return loc;
}

void write_imap_csv(std::ostream& out, std::span<const InodeLocation> locations) {
  out << "nid,block_addr,segment,zone,status\n";
  for (const auto& l : locations)
    out << fmt::format("{},{},{},{},{}\n", l.nid, l.block_addr, l.segment ? std::to_string(*l.segment) : "-", l.zone,
                       l.stale() ? "STALE_NAT" : "OK");
}

}  // namespace zlens::f2fs
