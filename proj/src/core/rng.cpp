#include "rdphase/core/rng.hpp"

#include <cmath>
#include <numbers>

namespace rdphase {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_words(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x6A09E667F3BCC908ULL;
  for (std::uint64_t w : words) h = splitmix64(h ^ splitmix64(w));
  return h;
}

std::uint64_t hash_string(std::string_view s) {
  // FNV-1a, then finalized.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return splitmix64(h);
}

std::uint64_t RngStream::next_u64() {
  if (avail_ < 2) {
    buf_ = philox4x32_10({static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                          static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                         {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
    ++counter_;
    avail_ = 4;
  }
  const int i = 4 - avail_;
  avail_ -= 2;
  return (static_cast<std::uint64_t>(buf_[i]) << 32) | buf_[i + 1];
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  const double u1 = uniform(), u2 = uniform();
  auto z = box_muller(u1, u2);
  spare_normal_ = z[1];
  has_spare_ = true;
  return z[0];
}

double RngStream::exponential() { return -std::log(uniform()); }

double KeyedRng::uniform(std::uint64_t a, std::uint64_t b) const {
  auto r = block(a, b);
  return u64_to_unit((static_cast<std::uint64_t>(r[0]) << 32) | r[1]);
}

double KeyedRng::exponential(std::uint64_t a, std::uint64_t b) const { return -std::log(uniform(a, b)); }

}  // namespace rdphase
