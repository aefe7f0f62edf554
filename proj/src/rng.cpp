#include "shiftbench/rng.hpp"

#include <bit>
#include <numeric>
#include <stdexcept>

#include "shiftbench/errors.hpp"

namespace shiftbench {

std::uint64_t SplitMix64::next() noexcept {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Pcg32::Pcg32(std::uint64_t seed) noexcept {
  SplitMix64 sm(seed);
  const std::uint64_t init_state = sm.next();
  const std::uint64_t init_seq = sm.next();
  state_ = 0;
  inc_ = (init_seq << 1) | 1U;
  step();
  state_ += init_state;
  step();
}

std::uint32_t Pcg32::next_u32() noexcept {
  const std::uint64_t old = state_;
  step();
  const auto xorshifted = static_cast<std::uint32_t>(((old >> 18) ^ old) >> 27);
  const auto rot = static_cast<int>(old >> 59);
  return std::rotr(xorshifted, rot);
}

std::uint64_t Pcg32::next_u64() noexcept {
  const std::uint64_t hi = next_u32();
  return (hi << 32) | next_u32();
}

std::uint32_t Pcg32::bounded(std::uint64_t bound) {
  if (bound == 0 || bound > (std::uint64_t{1} << 32)) {
    throw ValidationError("bounded draw needs a bound in [1, 2^32], got " + std::to_string(bound));
  }
  if (bound == (std::uint64_t{1} << 32)) return next_u32();
  const auto b = static_cast<std::uint32_t>(bound);
  const std::uint32_t threshold = (0U - b) % b;
  for (;;) {
    const std::uint32_t r = next_u32();
    if (r >= threshold) return r % b;
  }
}

double Pcg32::uniform01() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Pcg32::uniform(double lo, double hi) noexcept {
  const double u = uniform01();
  if (lo == hi) return lo;
  return lo + (hi - lo) * u;
}

std::int64_t Pcg32::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw ValidationError("empty integer interval");
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(bounded(span));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  SplitMix64 mix(stream);
  SplitMix64 out(seed ^ mix.next());
  return out.next();
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Pcg32& rng) {
  if (k > n) throw ValidationError("cannot draw " + std::to_string(k) + " of " + std::to_string(n));
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.bounded(n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace shiftbench
