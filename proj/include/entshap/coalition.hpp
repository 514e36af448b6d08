#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "entshap/error.hpp"

namespace entshap {

// Subset of feature indices [0, d). Backed by 64-bit words so d is not capped at 64.
class CoalitionMask {
public:
  CoalitionMask() = default;
  explicit CoalitionMask(int d) : d_(d), words_((static_cast<std::size_t>(d) + 63) / 64, 0) {
    require_config(d >= 1, "coalition: dimension must be >= 1");
  }

  static CoalitionMask empty(int d) { return CoalitionMask(d); }

  static CoalitionMask full(int d) {
    CoalitionMask m(d);
    for (int j = 0; j < d; ++j) m.add(j);
    return m;
  }

  static CoalitionMask from_bits(int d, std::uint64_t bits) {
    require_config(d >= 1 && d <= 64, "coalition: from_bits supports d <= 64");
    CoalitionMask m(d);
    m.words_[0] = d == 64 ? bits : (bits & ((std::uint64_t{1} << d) - 1));
    return m;
  }

  int dim() const { return d_; }

  bool contains(int j) const {
    check_index(j);
    return (words_[static_cast<std::size_t>(j) / 64] >> (static_cast<std::size_t>(j) % 64)) & 1u;
  }

  void add(int j) {
    check_index(j);
    words_[static_cast<std::size_t>(j) / 64] |= (std::uint64_t{1} << (static_cast<std::size_t>(j) % 64));
  }

  void remove(int j) {
    check_index(j);
    words_[static_cast<std::size_t>(j) / 64] &= ~(std::uint64_t{1} << (static_cast<std::size_t>(j) % 64));
  }

  CoalitionMask with(int j) const {
    CoalitionMask m = *this;
    m.add(j);
    return m;
  }

  CoalitionMask without(int j) const {
    CoalitionMask m = *this;
    m.remove(j);
    return m;
  }

  CoalitionMask complement() const {
    CoalitionMask m(d_);
    for (std::size_t w = 0; w < words_.size(); ++w) m.words_[w] = ~words_[w];
    m.trim();
    return m;
  }

  int cardinality() const {
    int c = 0;
    for (const auto w : words_) c += std::popcount(w);
    return c;
  }

  bool is_full() const { return cardinality() == d_; }
  bool is_empty() const { return cardinality() == 0; }

  std::vector<int> members() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(cardinality()));
    for (int j = 0; j < d_; ++j)
      if (contains(j)) out.push_back(j);
    return out;
  }

  // Low word; sufficient as an index when d <= 64.
  std::uint64_t bits() const { return words_.empty() ? 0 : words_[0]; }

  // Stable 64-bit identity used to derive per-coalition RNG streams and cache keys.
  std::uint64_t hash64() const {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto mix = [&h](std::uint64_t v) {
      for (int b = 0; b < 8; ++b) {
        h ^= (v >> (8 * b)) & 0xFF;
        h *= 0x100000001B3ULL;
      }
    };
    mix(static_cast<std::uint64_t>(d_));
    for (const auto w : words_) mix(w);
    return h;
  }

  bool operator==(const CoalitionMask& o) const { return d_ == o.d_ && words_ == o.words_; }
  bool operator!=(const CoalitionMask& o) const { return !(*this == o); }

  std::string to_string() const {
    std::string s;
    s.reserve(static_cast<std::size_t>(d_));
    for (int j = 0; j < d_; ++j) s.push_back(contains(j) ? '1' : '0');
    return s;
  }

private:
  void check_index(int j) const {
    require_config(j >= 0 && j < d_, "coalition: feature index out of range");
  }

  void trim() {
    const int rem = d_ % 64;
    if (rem != 0 && !words_.empty()) words_.back() &= (std::uint64_t{1} << rem) - 1;
  }

  int d_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace entshap
