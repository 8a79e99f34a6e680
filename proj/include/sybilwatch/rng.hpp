#pragma once

#include <bit>
#include <cmath>
#include <cstdint>

namespace sybilwatch {

// SplitMix64 (Steele, Lea, Flood). Used only to expand seeds.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t state) noexcept : state_(state) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// xoshiro256** 1.0 (Blackman, Vigna).
//
// Substreams: stream(seed, key) seeds a SplitMix64 with
//   SplitMix64(seed).next() ^ SplitMix64(key).next()
// and takes its next four outputs as the xoshiro state. Keys are account
// indices, or one of the reserved keys below, so each account draws from its
// own sequence regardless of the order in which accounts are generated.
class Xoshiro256ss {
 public:
  using result_type = std::uint64_t;

  static constexpr std::uint64_t kPopularityStream = ~std::uint64_t{0};

  explicit Xoshiro256ss(std::uint64_t seed) noexcept {
    SplitMix64 sm(seed);
    for (auto& word : s_) word = sm.next();
  }

  static Xoshiro256ss stream(std::uint64_t seed, std::uint64_t key) noexcept {
    return Xoshiro256ss(SplitMix64(seed).next() ^ SplitMix64(key).next());
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept { return next(); }

  std::uint64_t next() noexcept {
    const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1) from the top 53 bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Exponential with the given mean; -mean * log(1 - u).
  double exponential_mean(double mean) noexcept { return -mean * std::log1p(-uniform()); }

  // Uniform integer in [0, n) by floor(u * n); n > 0.
  std::uint64_t below(std::uint64_t n) noexcept {
    auto i = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

 private:
  std::uint64_t s_[4];
};

}  // namespace sybilwatch
