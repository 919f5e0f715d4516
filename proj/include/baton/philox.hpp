#pragma once

#include <array>
#include <cstdint>

namespace baton {

using PhiloxCounter = std::array<std::uint64_t, 4>;
using PhiloxKey = std::array<std::uint64_t, 2>;

namespace detail {

inline constexpr std::uint64_t kPhiloxM0 = 0xD2E7470EE14C6C93ULL;
inline constexpr std::uint64_t kPhiloxM1 = 0xCA5A826395121157ULL;
inline constexpr std::uint64_t kPhiloxW0 = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kPhiloxW1 = 0xBB67AE8584CAA73BULL;

constexpr void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                       std::uint64_t& lo) noexcept {
  const unsigned __int128 product = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(product >> 64);
  lo = static_cast<std::uint64_t>(product);
}

constexpr PhiloxCounter philox_round(const PhiloxCounter& ctr,
                                     const PhiloxKey& key) noexcept {
  std::uint64_t hi0 = 0, lo0 = 0, hi1 = 0, lo1 = 0;
  mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
  mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
  return {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace detail

/// Philox4x64 block function with 10 rounds (Salmon, Moraes, Dror, Shaw 2011).
constexpr PhiloxCounter philox4x64_10(PhiloxCounter ctr, PhiloxKey key) noexcept {
  ctr = detail::philox_round(ctr, key);
  for (int round = 1; round < 10; ++round) {
    key[0] += detail::kPhiloxW0;
    key[1] += detail::kPhiloxW1;
    ctr = detail::philox_round(ctr, key);
  }
  return ctr;
}

}  // namespace baton
