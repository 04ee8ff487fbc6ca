#ifndef SEPSPEC_RNG_HPP
#define SEPSPEC_RNG_HPP

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>

namespace sepspec {

// SplitMix64 finalizer; used to derive independent seeds from tuples.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed-derivation scheme: a replication stream is identified by
// mix64-chaining (base_seed, a, b, c), e.g. (base, cell, replication, matrix).
// Distinct tuples give distinct streams, so parallel replications never
// share Philox counters.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a = 0,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = mix64(base);
  s = mix64(s ^ a);
  s = mix64(s ^ b);
  s = mix64(s ^ c);
  return s;
}

// Philox4x64-10 counter-based generator (Salmon et al. constants, the
// variant NumPy ships). block(counter, key) is a pure function, so any
// (seed, stream) pair owns a disjoint, reproducible sequence.
struct Philox4x64 {
  static constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
  static constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
  static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

  static std::array<std::uint64_t, 4> block(std::array<std::uint64_t, 4> ctr,
                                            std::array<std::uint64_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const unsigned __int128 p0 = static_cast<unsigned __int128>(kMul0) * ctr[0];
      const unsigned __int128 p1 = static_cast<unsigned __int128>(kMul1) * ctr[2];
      ctr = {static_cast<std::uint64_t>(p1 >> 64) ^ ctr[1] ^ key[0],
             static_cast<std::uint64_t>(p1),
             static_cast<std::uint64_t>(p0 >> 64) ^ ctr[3] ^ key[1],
             static_cast<std::uint64_t>(p0)};
    }
    return ctr;
  }
};

// Buffered stream view over Philox4x64: key = (seed, stream), counter
// increments per block of four outputs.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_{seed, stream} {}

  std::uint64_t next_u64() {
    if (index_ == 4) refill();
    return buffer_[index_++];
  }

  // Uniform on [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; one spare value is cached.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Standard complex normal: E z = 0, E|z|^2 = 1, E z^2 = 0.
  std::complex<double> next_complex_normal() {
    double re = next_normal();
    double im = next_normal();
    return {re * 0.7071067811865475244, im * 0.7071067811865475244};
  }

  double next_rademacher() { return (next_u64() & 1u) ? 1.0 : -1.0; }

 private:
  void refill() {
    buffer_ = Philox4x64::block({counter_, 0, 0, 0}, key_);
    ++counter_;
    index_ = 0;
  }

  std::array<std::uint64_t, 2> key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 4> buffer_{};
  int index_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sepspec

#endif
