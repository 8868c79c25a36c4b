#pragma once

#include <cstdint>
#include <random>

namespace agvsched {

using Rng = std::mt19937_64;

// Independent streams per subsystem, all derived from one scenario seed.
enum class Stream : std::uint64_t {
  tasks = 1,
  channel = 2,
  annealing = 3,
  traffic = 4,
  placement = 5,
  test = 99,
};

// splitmix64 finaliser; decorrelates nearby seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline Rng make_stream(std::uint64_t seed, Stream stream, std::uint64_t sub = 0) {
  return Rng{mix_seed(mix_seed(seed) ^ mix_seed(static_cast<std::uint64_t>(stream) * 0x100000001b3ULL + sub))};
}

// Uniform double in [0, 1) with 53 random bits; stable across standard libraries.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) (Lemire multiply-shift with rejection).
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  unsigned __int128 m = static_cast<unsigned __int128>(rng()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(rng()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

// Serves 32-bit halves of 64-bit engine outputs, for callers that only need small
// uniform integers.
class HalfWords {
 public:
  explicit HalfWords(Rng& rng) : rng_(rng) {}
  std::uint32_t next() {
    if (have_) {
      have_ = false;
      return static_cast<std::uint32_t>(buf_ >> 32);
    }
    buf_ = rng_();
    have_ = true;
    return static_cast<std::uint32_t>(buf_);
  }
  // Uniform integer in [0, n), n >= 1 (32-bit multiply-shift with rejection).
  std::uint32_t below(std::uint32_t n) {
    std::uint64_t m = static_cast<std::uint64_t>(next()) * n;
    auto low = static_cast<std::uint32_t>(m);
    if (low < n) {
      const std::uint32_t threshold = (0u - n) % n;
      while (low < threshold) {
        m = static_cast<std::uint64_t>(next()) * n;
        low = static_cast<std::uint32_t>(m);
      }
    }
    return static_cast<std::uint32_t>(m >> 32);
  }
  Rng& engine() { return rng_; }

 private:
  Rng& rng_;
  std::uint64_t buf_ = 0;
  bool have_ = false;
};

inline int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

inline bool bernoulli(Rng& rng, double p) {
  if (p >= 1.0) return true;
  if (p <= 0.0) return false;
  return uniform01(rng) < p;
}

}  // namespace agvsched
