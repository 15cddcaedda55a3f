#pragma once
#include <cstdint>
#include <stdexcept>
#include <string_view>

namespace coordinv {

// SplitMix64. Used directly as the simulation generator so that streams do
// not depend on any standard-library engine's internal layout; output is
// bit-identical across platforms for a given seed.
struct SplitMix64 {
  std::uint64_t state = 0;
  constexpr explicit SplitMix64(std::uint64_t s) : state(s) {}
  constexpr std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

inline std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// A named random stream derived from (master_seed, label, index). Streams
// with distinct (label, index) are independent for practical purposes;
// replication k of an experiment uses index = k, so any replication can be
// reproduced in isolation.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::string_view label, std::uint64_t index = 0)
      : gen_(derive(master_seed, hash_label(label), index)) {}

  std::uint64_t next_u64() { return gen_.next(); }

  // 53-bit uniform in [0, 1).
  double uniform01() { return static_cast<double>(gen_.next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
    // Rejection keeps the draw unbiased and deterministic given the stream.
    std::uint64_t limit = n * (~0ULL / n);
    std::uint64_t v = gen_.next();
    while (v >= limit) v = gen_.next();
    return v % n;
  }

 private:
  static std::uint64_t derive(std::uint64_t master, std::uint64_t label_h, std::uint64_t index) {
    SplitMix64 m(master ^ (label_h + 0x9e3779b97f4a7c15ULL * (index + 1)));
    m.next();
    return m.next();
  }
  SplitMix64 gen_;
};

}  // namespace coordinv
