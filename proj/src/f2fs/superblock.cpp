#include <vector>

#include <fmt/core.h>

#include "bytes.hpp"
#include "zlens/f2fs.hpp"

namespace zlens::f2fs {

namespace {

// Calls f(offset, field) for every modelled field, in on-disk order.
template <class SB, class F>
void for_each_field(SB& sb, F&& f) {
  f(0, sb.magic);
  f(4, sb.major_ver);
  f(6, sb.minor_ver);
  f(8, sb.log_sectorsize);
  f(12, sb.log_sectors_per_block);
  f(16, sb.log_blocksize);
  f(20, sb.log_blocks_per_seg);
  f(24, sb.segs_per_sec);
  f(28, sb.secs_per_zone);
  f(32, sb.checksum_offset);
  f(36, sb.block_count);
  f(44, sb.section_count);
  f(48, sb.segment_count);
  f(52, sb.segment_count_ckpt);
  f(56, sb.segment_count_sit);
  f(60, sb.segment_count_nat);
  f(64, sb.segment_count_ssa);
  f(68, sb.segment_count_main);
  f(72, sb.segment0_blkaddr);
  f(76, sb.cp_blkaddr);
  f(80, sb.sit_blkaddr);
  f(84, sb.nat_blkaddr);
  f(88, sb.ssa_blkaddr);
  f(92, sb.main_blkaddr);
  f(96, sb.root_ino);
  f(100, sb.node_ino);
  f(104, sb.meta_ino);
  f(1664, sb.cp_payload);
  f(2180, sb.feature);
}

enum class Verdict { Ok, BadMagic, Unsupported, Inconsistent };

struct Candidate {
  Superblock sb;
  Verdict verdict = Verdict::BadMagic;
  std::string detail;
};

Candidate check(std::span<const std::byte> raw) {
  Candidate c{decode_superblock(raw), Verdict::Ok, {}};
  const Superblock& sb = c.sb;
  if (sb.magic != kSuperMagic) {
    c.verdict = Verdict::BadMagic;
    return c;
  }
  if (sb.log_blocksize != kLogBlockSize || sb.log_blocks_per_seg != kLogBlocksPerSegment) {
    c.verdict = Verdict::Unsupported;
    c.detail = fmt::format("block size 2^{} and {} blocks per segment (only 4KiB blocks and 2MiB segments)",
                           sb.log_blocksize, sb.log_blocks_per_seg < 32 ? (1u << sb.log_blocks_per_seg) : 0);
    return c;
  }
  if (sb.feature & kFeatureSbChecksum) {
    if (sb.checksum_offset < 4 || sb.checksum_offset + 4 > kSuperRegion) {
      c.verdict = Verdict::Inconsistent;
      c.detail = fmt::format("checksum offset {} out of range", sb.checksum_offset);
      return c;
    }
    uint32_t stored = detail::load_le<uint32_t>(raw, sb.checksum_offset);
    uint32_t computed = crc32(kSuperMagic, raw.first(sb.checksum_offset));
    if (stored != computed) {
      c.verdict = Verdict::Inconsistent;
      c.detail = fmt::format("checksum {:#010x} != computed {:#010x}", stored, computed);
      return c;
    }
  }
  const uint64_t bps = sb.blocks_per_segment();
  bool ordered = sb.segment0_blkaddr <= sb.cp_blkaddr && sb.cp_blkaddr < sb.sit_blkaddr &&
                 sb.sit_blkaddr < sb.nat_blkaddr && sb.nat_blkaddr < sb.ssa_blkaddr &&
                 sb.ssa_blkaddr < sb.main_blkaddr && sb.main_blkaddr <= sb.block_count;
  bool sized = sb.segment_count_nat >= 2 && sb.segment_count_nat % 2 == 0 &&
               uint64_t{sb.nat_blkaddr} + uint64_t{sb.segment_count_nat} * bps <= sb.ssa_blkaddr &&
               sb.segment_count_ckpt >= 2;
  if (!ordered || !sized) {
    c.verdict = Verdict::Inconsistent;
    c.detail = "area layout is inconsistent";
  }
  return c;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> superblock_field_ranges() {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  Superblock sb;
  for_each_field(sb, [&](std::size_t off, auto& field) { out.emplace_back(off, sizeof(field)); });
  return out;
}

Superblock decode_superblock(std::span<const std::byte> raw) {
  if (raw.size() < kSuperRegion) throw Error(ErrorCode::Range, "superblock buffer too small");
  Superblock sb;
  for_each_field(sb, [&](std::size_t off, auto& field) {
    field = detail::load_le<std::remove_reference_t<decltype(field)>>(raw, off);
  });
  return sb;
}

void serialize_superblock(const Superblock& sb, std::span<std::byte> raw) {
  if (raw.size() < kSuperRegion) throw Error(ErrorCode::Range, "superblock buffer too small");
  for_each_field(sb, [&](std::size_t off, const auto& field) { detail::store_le(raw, off, field); });
}

Superblock parse_superblock(const ImageSource& image) {
  if (image.size() < 2 * kBlockSize)
    throw Error(ErrorCode::NotF2fs, fmt::format("image is {} bytes, smaller than two superblock blocks", image.size()));

  std::vector<Candidate> copies;
  for (uint64_t base : {uint64_t{0}, kBlockSize}) {
    std::vector<std::byte> raw(kSuperRegion);
    image.read(base + kSuperOffset, raw);
    copies.push_back(check(raw));
  }
  for (std::size_t i = 0; i < copies.size(); ++i) {
    auto& c = copies[i];
    if (c.verdict == Verdict::Ok) {
      c.sb.from_backup = i == 1;
      return c.sb;
    }
    if (c.verdict == Verdict::Unsupported)
      throw Error(ErrorCode::Unsupported,
                  fmt::format("{} superblock: {}", i == 0 ? "primary" : "backup", c.detail));
  }
  auto describe = [](const Candidate& c) {
    return c.verdict == Verdict::BadMagic ? fmt::format("magic {:#010x}", c.sb.magic)
                                          : fmt::format("magic {:#010x} ({})", c.sb.magic, c.detail);
  };
  throw Error(ErrorCode::NotF2fs, fmt::format("no valid superblock: primary {}, backup {}; expected magic {:#010x}",
                                              describe(copies[0]), describe(copies[1]), kSuperMagic));
}

}  // namespace zlens::f2fs
