#pragma once
#include <array>
#include <cmath>
#include <numbers>
#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace rdphase {

using Philox4x32 = std::array<std::uint32_t, 4>;

inline Philox4x32 philox4x32_10(Philox4x32 c, std::array<std::uint32_t, 2> k) {
  constexpr std::uint32_t m0 = 0xD2511F53, m1 = 0xCD9E8D57;
  for (int r = 0; r < 10; ++r) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * c[2];
    c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
         static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    k[0] += 0x9E3779B9;
    k[1] += 0xBB67AE85;
  }
  return c;
}

std::uint64_t splitmix64(std::uint64_t x);
// Order-sensitive combination of 64-bit words.
std::uint64_t hash_words(std::initializer_list<std::uint64_t> words);
std::uint64_t hash_string(std::string_view s);

inline double u32_to_unit(std::uint32_t x) { return (x + 0.5) * 0x1p-32; }
inline double u64_to_unit(std::uint64_t x) { return ((x >> 11) + 0.5) * 0x1p-53; }

// Counter-based stream: key = master seed, counter = (draw index, stream id).
// Distinct stream ids use disjoint counter blocks, so streams never overlap.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  std::uint64_t next_u64();
  double uniform() { return u64_to_unit(next_u64()); }
  double normal();
  double exponential();

  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~0ULL; }
  std::uint64_t operator()() { return next_u64(); }

  // Child stream for a sub-task; deterministic in (seed, stream, tag).
  RngStream child(std::uint64_t tag) const { return {seed_, hash_words({stream_, tag})}; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int avail_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

// Keyed draws addressed by (key, a, b): used for per-particle and per-label randomness
// so that draws do not depend on processing order.
class KeyedRng {
 public:
  explicit KeyedRng(std::uint64_t key)
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}
  KeyedRng(std::uint64_t seed, std::uint64_t stream) : KeyedRng(hash_words({seed, stream})) {}

  Philox4x32 block(std::uint64_t a, std::uint64_t b) const {
    return philox4x32_10({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                          static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)},
                         key_);
  }
  double uniform(std::uint64_t a, std::uint64_t b) const;
  double exponential(std::uint64_t a, std::uint64_t b) const;

 private:
  std::array<std::uint32_t, 2> key_;
};

// Box-Muller from two unit uniforms in (0,1).
inline std::array<double, 2> box_muller(double u1, double u2) {
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(th), r * std::sin(th)};
}

// First coordinate of box_muller only.
inline double gaussian_first(double u1, double u2) {
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace rdphase
