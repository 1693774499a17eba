#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>

#include <fmt/core.h>

#include "zlens/f2fs.hpp"

namespace zlens::f2fs {

std::vector<std::byte> ImageSource::read_block(uint64_t block_addr) const {
  std::vector<std::byte> block(kBlockSize);
  read(block_addr * kBlockSize, block);
  return block;
}

void MemoryImage::read(uint64_t offset, std::span<std::byte> out) const {
  if (offset > bytes_.size() || out.size() > bytes_.size() - offset)
    throw Error(ErrorCode::Io, fmt::format("short read: {} bytes at {:#x} past image end {:#x}", out.size(), offset,
                                           bytes_.size()));
  std::memcpy(out.data(), bytes_.data() + offset, out.size());
}

FileImage::FileImage(const std::string& path) : path_(path) {
  fd_ = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd_ < 0) throw Error(ErrorCode::Io, fmt::format("cannot open {}: {}", path, std::strerror(errno)));
  off_t end = ::lseek(fd_, 0, SEEK_END);
  if (end < 0) {
    ::close(fd_);
    throw Error(ErrorCode::Io, fmt::format("cannot size {}: {}", path, std::strerror(errno)));
  }
  size_ = static_cast<uint64_t>(end);
}

FileImage::~FileImage() {
  if (fd_ >= 0) ::close(fd_);
}

void FileImage::read(uint64_t offset, std::span<std::byte> out) const {
  std::size_t done = 0;
  while (done < out.size()) {
    ssize_t n = ::pread(fd_, out.data() + done, out.size() - done, static_cast<off_t>(offset + done));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0)
      throw Error(ErrorCode::Io, fmt::format("short read from {}: {} bytes at {:#x}", path_, out.size(), offset));
    done += static_cast<std::size_t>(n);
  }
}

namespace {

constexpr std::array<uint32_t, 256> make_crc_table() {
  std::array<uint32_t, 256> t{};
  for (uint32_t i = 0; i < 256; ++i) {
    uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? (c >> 1) ^ 0xEDB88320u : c >> 1;
    t[i] = c;
  }
  return t;
}

constexpr auto kCrcTable = make_crc_table();

}  // namespace

uint32_t crc32(uint32_t crc, std::span<const std::byte> data) {
  for (auto b : data) crc = kCrcTable[(crc ^ std::to_integer<uint32_t>(b)) & 0xff] ^ (crc >> 8);
  return crc;
}

}  // namespace zlens::f2fs
