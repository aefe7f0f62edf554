#pragma once

// Portable seeded random streams.
//
// Every draw made by the library goes through Pcg32 so that results can be
// reproduced bit-for-bit from any language:
//
//   SplitMix64 (state s):
//     s += 0x9E3779B97F4A7C15
//     z = s
//     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//     return z ^ (z >> 31)
//
//   Pcg32(seed): sm = SplitMix64(seed); init_state = sm(); init_seq = sm()
//     state = 0; inc = (init_seq << 1) | 1
//     step(); state += init_state; step()
//   step(): state = state * 6364136223846793005 + inc
//   next_u32(): old = state; step()
//     x = uint32(((old >> 18) ^ old) >> 27); r = old >> 59
//     return rotr32(x, r)
//
//   bounded(n):   threshold = (2^32 - n) mod n; draw x until x >= threshold; x mod n
//   uniform01():  a = next_u32(), b = next_u32(); ((a << 32 | b) >> 11) * 2^-53
//   next_u64():   (next_u32() << 32) | next_u32()

#include <cstddef>
#include <cstdint>
#include <vector>

namespace shiftbench {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}
  std::uint64_t next() noexcept;

 private:
  std::uint64_t state_;
};

class Pcg32 {
 public:
  explicit Pcg32(std::uint64_t seed) noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;
  // Uniform in [0, bound); bound must be in [1, 2^32].
  std::uint32_t bounded(std::uint64_t bound);
  // Uniform in [0, 1) with 53 random bits.
  double uniform01() noexcept;
  // Uniform in [lo, hi]; returns lo when lo == hi.
  double uniform(double lo, double hi) noexcept;
  // Uniform integer in the closed interval [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

 private:
  void step() noexcept { state_ = state_ * 6364136223846793005ULL + inc_; }

  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 1;
};

// Independent sub-stream seed: SplitMix64(seed ^ SplitMix64(stream).next()).next().
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

// First k positions of a Fisher-Yates shuffle of [0, n): for i in [0, k),
// j = i + bounded(n - i), swap(i, j). Returned in draw order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Pcg32& rng);

}  // namespace shiftbench
