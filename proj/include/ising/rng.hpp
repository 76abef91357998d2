#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace ising {

// Counter-based splittable generator built on the splitmix64 finalizer.
// A stream is (key, counter); output t is mix(key + t * GAMMA). Derived
// streams hash extra labels into the key, so every (component, index)
// pair gets an independent stream regardless of execution order.
class Rng {
 public:
  Rng() = default;
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ kKeyTag)) {}

  // Child stream for a labelled work unit (trial, cell, level, ...).
  Rng derive(std::initializer_list<std::uint64_t> labels) const {
    std::uint64_t k = key_;
    for (std::uint64_t v : labels) k = mix(k + kGamma * (v + 0x9e01));
    Rng child;
    child.key_ = k;
    return child;
  }
  Rng derive(std::uint64_t label) const { return derive({label}); }

  std::uint64_t next_u64() { return mix(key_ + (++ctr_) * kGamma); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // 128-bit multiply rejection-free scaling; bias < 2^-64, irrelevant here.
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller (no stdlib distributions: their output
  // is implementation-defined and we want bit-stable seeds everywhere).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  bool coin(double p) { return uniform() < p; }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  static constexpr std::uint64_t kKeyTag = 0x243f6a8885a308d3ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_ = 0;
  std::uint64_t ctr_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ising
