#pragma once

// Little-endian field access into raw on-disk buffers.

#include <cstddef>
#include <cstdint>
#include <span>

namespace zlens::f2fs::detail {

template <class T>
T load_le(std::span<const std::byte> buf, std::size_t off) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(std::to_integer<uint64_t>(buf[off + i]) << (8 * i));
  return v;
}

template <class T>
void store_le(std::span<std::byte> buf, std::size_t off, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[off + i] = static_cast<std::byte>((uint64_t{v} >> (8 * i)) & 0xff);
}

inline bool test_bit_msb(std::span<const uint8_t> bitmap, uint64_t nr) {
  return (bitmap[nr >> 3] & (1u << (7 - (nr & 7)))) != 0;
}

}  // namespace zlens::f2fs::detail
