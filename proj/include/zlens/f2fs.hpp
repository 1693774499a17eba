#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "zlens/extent_map.hpp"
#include "zlens/zone_model.hpp"

namespace zlens::f2fs {

inline constexpr uint32_t kSuperMagic = 0xF2F52010;
inline constexpr uint64_t kSuperOffset = 1024;
inline constexpr uint64_t kSuperRegion = 3072;  // bytes from kSuperOffset to the end of the block
inline constexpr uint64_t kBlockSize = 4096;
inline constexpr uint32_t kLogBlockSize = 12;
inline constexpr uint32_t kLogBlocksPerSegment = 9;
inline constexpr uint32_t kBlocksPerSegment = 1u << kLogBlocksPerSegment;
inline constexpr uint64_t kSegmentBytes = kBlocksPerSegment * kBlockSize;
inline constexpr uint32_t kNatEntrySize = 9;
inline constexpr uint32_t kNatEntriesPerBlock = kBlockSize / kNatEntrySize;  // 455
inline constexpr std::size_t kNodeFooterOffset = kBlockSize - 24;
inline constexpr std::size_t kCpChecksumOffset = kBlockSize - 4;
inline constexpr std::size_t kCpBitmapOffset = 192;
inline constexpr uint32_t kCpLargeNatBitmapFlag = 0x00000400;
inline constexpr uint32_t kFeatureSbChecksum = 0x0800;

/// Read-only random-access byte source.
class ImageSource {
 public:
  virtual ~ImageSource() = default;
  virtual uint64_t size() const = 0;
  /// Fills `out` from `offset`; throws Error(Io) on a short read.
  virtual void read(uint64_t offset, std::span<std::byte> out) const = 0;

  std::vector<std::byte> read_block(uint64_t block_addr) const;
};

class MemoryImage final : public ImageSource {
 public:
  explicit MemoryImage(std::vector<std::byte> bytes) : bytes_(std::move(bytes)) {}

  uint64_t size() const override { return bytes_.size(); }
  void read(uint64_t offset, std::span<std::byte> out) const override;
  std::span<const std::byte> bytes() const { return bytes_; }

 private:
  std::vector<std::byte> bytes_;
};

/// Image file or block device opened read-only.
class FileImage final : public ImageSource {
 public:
  explicit FileImage(const std::string& path);
  ~FileImage() override;
  FileImage(const FileImage&) = delete;
  FileImage& operator=(const FileImage&) = delete;

  uint64_t size() const override { return size_; }
  void read(uint64_t offset, std::span<std::byte> out) const override;

 private:
  int fd_ = -1;
  uint64_t size_ = 0;
  std::string path_;
};

/// F2FS CRC32 (reflected 0xEDB88320, no final xor) continuing from `crc`.
uint32_t crc32(uint32_t crc, std::span<const std::byte> data);

struct Superblock {
  uint32_t magic = 0;
  uint16_t major_ver = 0;
  uint16_t minor_ver = 0;
  uint32_t log_sectorsize = 0;
  uint32_t log_sectors_per_block = 0;
  uint32_t log_blocksize = 0;
  uint32_t log_blocks_per_seg = 0;
  uint32_t segs_per_sec = 0;
  uint32_t secs_per_zone = 0;
  uint32_t checksum_offset = 0;
  uint64_t block_count = 0;
  uint32_t section_count = 0;
  uint32_t segment_count = 0;
  uint32_t segment_count_ckpt = 0;
  uint32_t segment_count_sit = 0;
  uint32_t segment_count_nat = 0;
  uint32_t segment_count_ssa = 0;
  uint32_t segment_count_main = 0;
  uint32_t segment0_blkaddr = 0;
  uint32_t cp_blkaddr = 0;
  uint32_t sit_blkaddr = 0;
  uint32_t nat_blkaddr = 0;
  uint32_t ssa_blkaddr = 0;
  uint32_t main_blkaddr = 0;
  uint32_t root_ino = 0;
  uint32_t node_ino = 0;
  uint32_t meta_ino = 0;
  uint32_t cp_payload = 0;
  uint32_t feature = 0;

  // Where the copy was found; not part of the on-disk record.
  bool from_backup = false;

  uint32_t blocks_per_segment() const { return 1u << log_blocks_per_seg; }
  uint64_t main_area_start() const { return uint64_t{main_blkaddr} * kBlockSize; }

  bool operator==(const Superblock&) const = default;
};

/// Byte ranges (relative to the superblock start) of every modelled field.
std::vector<std::pair<std::size_t, std::size_t>> superblock_field_ranges();

/// Decodes the fields from a kSuperRegion-sized buffer; no validation.
Superblock decode_superblock(std::span<const std::byte> raw);

/// Writes the modelled fields back at their offsets, leaving other bytes
/// alone.
void serialize_superblock(const Superblock& sb, std::span<std::byte> raw);

/// Reads the primary copy at byte 1024, falling back to the backup in the
/// next block. Throws NotF2fs when neither validates and Unsupported for a
/// valid magic with a non-4KiB block or non-2MiB segment size.
Superblock parse_superblock(const ImageSource& image);

struct Checkpoint {
  uint64_t version = 0;
  uint32_t pack = 0;  // 0 or 1
  uint32_t block_addr = 0;
  uint32_t flags = 0;
  uint32_t pack_total_blocks = 0;
  uint32_t valid_node_count = 0;
  uint32_t valid_inode_count = 0;
  uint32_t next_free_nid = 0;
  uint32_t sit_bitmap_bytes = 0;
  uint32_t nat_bitmap_bytes = 0;
  uint32_t checksum_offset = 0;
  std::array<uint32_t, 8> cur_node_segno{};
  std::array<uint32_t, 8> cur_data_segno{};
  std::vector<uint8_t> nat_bitmap;
};

/// Verifies the checksum of one checkpoint block.
bool checkpoint_block_valid(std::span<const std::byte> block);

/// Reads both checkpoint packs and returns the valid one with the higher
/// version. Throws NoCheckpoint when neither pack validates.
Checkpoint load_checkpoint(const ImageSource& image, const Superblock& sb);

struct NatEntry {
  uint32_t nid = 0;
  uint8_t version = 0;
  uint32_t ino = 0;
  uint32_t block_addr = 0;
};

/// Number of node ids addressable by the NAT.
uint64_t max_nid(const Superblock& sb);

/// Address of the live NAT block holding `nid`, chosen by the checkpoint's
/// NAT version bitmap.
uint64_t nat_block_address(const Superblock& sb, const Checkpoint& cp, uint32_t nid);

NatEntry read_nat_entry(const ImageSource& image, const Superblock& sb, const Checkpoint& cp, uint32_t nid);

struct InodeLocation {
  uint32_t nid = 0;
  uint32_t block_addr = 0;
  uint64_t zone = 0;
  std::optional<uint64_t> segment;  // main-area segment, if inside the main area
  uint32_t footer_nid = 0;
  uint32_t footer_ino = 0;
  std::optional<std::string> warning;  // STALE_NAT when the footer disagrees

  bool stale() const { return warning.has_value(); }
};

/// NAT lookup plus one verification read of the node footer. Throws
/// Error(Range) for nids beyond the NAT and Error(Unallocated) for a null
/// block address.
InodeLocation locate_inode(const ImageSource& image, const Superblock& sb, const Checkpoint& cp,
                           const zns::ZoneGeometry& geometry, uint32_t nid);

void write_imap_csv(std::ostream& out, std::span<const InodeLocation> locations);

// ---------------------------------------------------------------------------
// Segment hotness
// ---------------------------------------------------------------------------

enum class Hotness : uint8_t { HotData, WarmData, ColdData, HotNode, WarmNode, ColdNode };

inline constexpr std::array kAllHotness = {Hotness::HotData, Hotness::WarmData, Hotness::ColdData,
                                           Hotness::HotNode, Hotness::WarmNode, Hotness::ColdNode};

std::string_view to_string(Hotness h);
std::optional<Hotness> parse_hotness(std::string_view token);
constexpr bool is_cold(Hotness h) { return h == Hotness::ColdData || h == Hotness::ColdNode; }

struct SegmentRecord {
  uint64_t index = 0;
  Hotness hotness = Hotness::WarmData;
  uint32_t valid_blocks = 0;
  uint64_t zone = 0;

  bool operator==(const SegmentRecord&) const = default;
};

/// Byte address of a main-area segment.
constexpr uint64_t segment_start(uint64_t main_start, uint64_t index) { return main_start + index * kSegmentBytes; }

/// Parses `<segment_index> <hotness> <valid_blocks>` lines. The zone of
/// each segment is derived from `main_start` and the geometry.
std::vector<SegmentRecord> load_segment_info(std::istream& in, const zns::ZoneGeometry& geometry, uint64_t main_start);
std::vector<SegmentRecord> load_segment_info_file(const std::string& path, const zns::ZoneGeometry& geometry,
                                                  uint64_t main_start);
void write_segment_info(std::ostream& out, std::span<const SegmentRecord> segments);

// ---------------------------------------------------------------------------
// segmap: extents joined with segment hotness
// ---------------------------------------------------------------------------

struct SegmentSlice {
  std::string file_id;
  uint64_t logical_offset = 0;
  uint64_t physical_start = 0;
  uint64_t length = 0;
  uint64_t segment = 0;
  uint64_t zone = 0;
  std::optional<Hotness> hotness;  // nullopt: segment absent from the segment info
};

struct SegmentSummary {
  SegmentRecord record;
  uint64_t extent_slices = 0;
  std::set<std::string> files;
};

struct FileHotness {
  std::string file_id;
  std::map<Hotness, uint64_t> classes;  // slice count per class
  std::map<Hotness, uint64_t> bytes;    // bytes per class
  std::vector<SegmentSlice> slices;     // ascending logical offset

  std::size_t distinct_classes() const { return classes.size(); }
};

struct Exclusion {
  std::string file_id;
  uint64_t logical_offset = 0;
  uint64_t physical_start = 0;
  uint64_t length = 0;
  std::string reason;
};

struct SegmapReport {
  std::vector<SegmentSummary> segments;  // one per segment record, in record order
  std::vector<FileHotness> files;        // input file order
  std::vector<Exclusion> exclusions;
  uint64_t unclassified_slices = 0;

  const FileHotness* file(const std::string& id) const;
};

SegmapReport segmap(const extent::FileMaps& maps, std::span<const SegmentRecord> segments,
                    const zns::ZoneGeometry& geometry, uint64_t main_start);

void write_segmap_segments_csv(std::ostream& out, const SegmapReport& report);
void write_segmap_files_csv(std::ostream& out, const SegmapReport& report);

// ---------------------------------------------------------------------------
// Fixture images
// ---------------------------------------------------------------------------

enum class NidStatus : uint8_t { Ok, Unallocated, Stale };
std::string_view to_string(NidStatus s);

struct ManifestEntry {
  uint32_t nid = 0;
  uint32_t block_addr = 0;
  std::optional<uint64_t> segment;
  uint64_t zone = 0;
  NidStatus status = NidStatus::Ok;

  bool operator==(const ManifestEntry&) const = default;
};

struct ImageSpec {
  uint32_t main_segments = 8;
  uint32_t nid_count = 32;  // allocated nids starting at the root inode (3)
  uint32_t unallocated = 2;
  uint32_t stale = 1;
  uint64_t seed = 1;
  bool corrupt_primary_superblock = false;
  bool corrupt_newest_checkpoint = false;
  uint64_t zone_size = 4 * zns::MiB;
};

struct FixtureImage {
  std::vector<std::byte> bytes;
  Superblock superblock;
  zns::ZoneGeometry geometry;
  uint64_t live_checkpoint_version = 0;  // version load_checkpoint must select
  uint32_t live_checkpoint_pack = 0;
  std::vector<ManifestEntry> manifest;
};

/// Builds a minimal image: two superblock copies, two checkpoint packs,
/// a NAT whose live copies are scattered across both NAT segments, and one
/// node page (with footer) per allocated nid. The manifest is the ground
/// truth for locate_inode.
FixtureImage build_fixture_image(const ImageSpec& spec);

void write_manifest(std::ostream& out, std::span<const ManifestEntry> manifest);
std::vector<ManifestEntry> read_manifest(std::istream& in);

}  // namespace zlens::f2fs
