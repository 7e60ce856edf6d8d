#pragma once

// Deterministic random number utilities. Every random decision in the
// project derives from explicit 64-bit keys so that runs are reproducible
// bit-for-bit given the same seed, on the same platform.

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

namespace dygie {

// splitmix64 finalizer (Vigna). Stateless mix of one 64-bit word.
inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Key chaining: derive_key(seed, {a, b, c}) == mix64(mix64(mix64(seed ^ mix64(a)) ^ mix64(b)) ^ mix64(c)).
inline uint64_t derive_key(uint64_t seed, std::initializer_list<uint64_t> parts) {
  uint64_t k = seed;
  for (uint64_t p : parts) k = mix64(k ^ mix64(p));
  return k;
}

// Map a 64-bit hash to [0, 1) using the top 53 bits.
inline double unit_from_hash(uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Stateless per-element decision stream: element k of the stream named by
// `key`. Used for dropout masks and generator coin flips so tests can
// recompute any single decision without replaying a sequential generator.
inline double unit_at(uint64_t key, uint64_t k) {
  return unit_from_hash(mix64(key ^ mix64(k + 1)));
}

// xoshiro256** for sequential draws (document layout, parameter init).
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t z = seed;
    for (auto& w : state_) {
      z += 0x9e3779b97f4a7c15ULL;
      w = mix64(z);
    }
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // [0, 1)
  double uniform() { return unit_from_hash(next_u64()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // [0, n); modulo bias is irrelevant at the n used here and keeps draws portable
  int below(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

  double normal() {
    // Box-Muller, spare discarded
    double u1 = 0.0;
    while (u1 <= 1e-300) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  std::array<uint64_t, 4> state() const { return state_; }
  void set_state(const std::array<uint64_t, 4>& s) { state_ = s; }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::array<uint64_t, 4> state_;
};

}  // namespace dygie
