#ifndef QUALGATE_MURMUR3_HPP_
#define QUALGATE_MURMUR3_HPP_

// MurmurHash3, x86 32-bit variant (Austin Appleby, public domain).
// Blocks are read as little-endian regardless of host byte order so the
// output is identical on every platform.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace qualgate {

namespace detail {

constexpr std::uint32_t rotl32(std::uint32_t x, int r) {
  return (x << r) | (x >> (32 - r));
}

constexpr std::uint32_t fmix32(std::uint32_t h) {
  h ^= h >> 16;
  h *= 0x85ebca6bu;
  h ^= h >> 13;
  h *= 0xc2b2ae35u;
  h ^= h >> 16;
  return h;
}

constexpr std::uint32_t load_le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline std::uint32_t murmurhash3_x86_32(std::span<const unsigned char> key,
                                        std::uint32_t seed = 0) {
  constexpr std::uint32_t c1 = 0xcc9e2d51u;
  constexpr std::uint32_t c2 = 0x1b873593u;

  const std::size_t len = key.size();
  const std::size_t nblocks = len / 4;
  const unsigned char* data = key.data();
  std::uint32_t h1 = seed;

  for (std::size_t i = 0; i < nblocks; ++i) {
    std::uint32_t k1 = detail::load_le32(data + i * 4);
    k1 *= c1;
    k1 = detail::rotl32(k1, 15);
    k1 *= c2;

    h1 ^= k1;
    h1 = detail::rotl32(h1, 13);
    h1 = h1 * 5 + 0xe6546b64u;
  }

  const unsigned char* tail = data + nblocks * 4;
  std::uint32_t k1 = 0;
  switch (len & 3) {
    case 3:
      k1 ^= static_cast<std::uint32_t>(tail[2]) << 16;
      [[fallthrough]];
    case 2:
      k1 ^= static_cast<std::uint32_t>(tail[1]) << 8;
      [[fallthrough]];
    case 1:
      k1 ^= tail[0];
      k1 *= c1;
      k1 = detail::rotl32(k1, 15);
      k1 *= c2;
      h1 ^= k1;
  }

  h1 ^= static_cast<std::uint32_t>(len);
  return detail::fmix32(h1);
}

inline std::uint32_t murmurhash3_x86_32(std::string_view key,
                                        std::uint32_t seed = 0) {
  return murmurhash3_x86_32(
      std::span<const unsigned char>(
          reinterpret_cast<const unsigned char*>(key.data()), key.size()),
      seed);
}

}  // namespace qualgate

#endif  // QUALGATE_MURMUR3_HPP_
