#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "entshap/error.hpp"

namespace entshap {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_key(std::uint64_t key, std::uint64_t id) {
  std::uint64_t x = key ^ (id * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL);
  return splitmix64(x);
}

inline std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

}  // namespace detail

// Deterministic counter-keyed stream. The key identifies the stream; draws advance
// xoshiro256++ state only, so derive() is insensitive to how much the parent has
// been consumed. Uniform and normal transforms are hand rolled: bit-exact output
// must not depend on the standard library's distribution implementations.
class RngStream {
public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : key_(detail::mix_key(seed, stream_id)) {
    std::uint64_t x = key_;
    for (auto& w : state_) w = detail::splitmix64(x);
  }

  std::uint64_t key() const { return key_; }

  // Child stream fully determined by (parent key, id).
  RngStream derive(std::uint64_t id) const { return RngStream(key_, id); }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1], safe as a log argument.
  double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t uniform_below(std::uint64_t n) {
    require_config(n > 0, "uniform_below: n must be positive");
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Standard normal via Box-Muller (two uniforms per draw, no cached spare).
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Partial Fisher-Yates: first k entries of a random permutation of [0, n).
  template <typename Int>
  void sample_without_replacement(Int n, Int k, std::vector<Int>& scratch, std::vector<Int>& out) {
    scratch.resize(static_cast<std::size_t>(n));
    for (Int i = 0; i < n; ++i) scratch[static_cast<std::size_t>(i)] = i;
    out.resize(static_cast<std::size_t>(k));
    for (Int i = 0; i < k; ++i) {
      const auto j = i + static_cast<Int>(uniform_below(static_cast<std::uint64_t>(n - i)));
      std::swap(scratch[static_cast<std::size_t>(i)], scratch[static_cast<std::size_t>(j)]);
      out[static_cast<std::size_t>(i)] = scratch[static_cast<std::size_t>(i)];
    }
  }

private:
  std::uint64_t key_;
  std::array<std::uint64_t, 4> state_;
};

template <typename Int>
inline void shuffle_in_place(std::vector<Int>& v, RngStream& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace entshap
