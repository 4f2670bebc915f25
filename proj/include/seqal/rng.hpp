#pragma once

#include <cstdint>
#include <random>

namespace seqal {

// Stateless 64-bit mixer (splitmix64 finalizer).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
}

// Seed streams used by the experiment loop. Every random decision in a run
// is keyed by (master seed, round, purpose), so runs never depend on
// evaluation order or wall-clock state.
enum class SeedPurpose : std::uint64_t {
  Init = 1,
  Select = 2,
  Train = 3,
  McDropout = 4,
  Synthetic = 5,
};

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t round,
                                    SeedPurpose purpose) noexcept {
  return hash_combine(hash_combine(master, round), static_cast<std::uint64_t>(purpose));
}

// Portable draws on top of mt19937_64. The standard distributions are
// implementation-defined, so they are avoided wherever results are persisted.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);

  // Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  double normal();

 private:
  std::mt19937_64 engine_;
};

// Uniform in [0, 1) from a stateless hash of its key.
inline double hashed_uniform(std::uint64_t key) noexcept {
  return static_cast<double>(mix64(key) >> 11) * 0x1.0p-53;
}

}  // namespace seqal
