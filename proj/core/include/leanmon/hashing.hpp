#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace leanmon {

// Seeded hash family for bucket selection and +/-1 signs.
//
// Seed splitting: every hash function in a run is derived from one 64-bit
// run seed. For stream tag s and row j the state is
//     run_seed ^ (kGoldenGamma * (j + 1)) ^ s
// and the first two splitmix64 outputs from that state become (a, b).
// Replaying a run therefore needs only the run seed.

enum class HashFamily : std::uint8_t {
  MultiplyShift = 0,  // (a*x + b) mod 2^64, top bits
  MersennePrime = 1,  // ((a*x + b) mod (2^61 - 1)) mod B
};

/// Stream tags keep functions drawn for different purposes independent.
enum class HashStream : std::uint64_t {
  Bucket = 0x42554b5400000000ULL,
  Sign = 0x5349474e00000000ULL,
  PairSign = 0x5041495200000000ULL,
  Framework = 0x4652574b00000000ULL,
  Bloom = 0x424c4f4d00000000ULL,
  Cuckoo = 0x4355434b00000000ULL,
  Distinct = 0x4449535400000000ULL,
  FlowId = 0x464c4f5700000000ULL,
};

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

struct HashPair {
  std::uint64_t a = 1;
  std::uint64_t b = 0;
  std::uint32_t row = 0;
  HashFamily family = HashFamily::MultiplyShift;

  friend bool operator==(const HashPair&, const HashPair&) = default;
};

/// splitmix64 step: advances `state` and returns the next output.
[[nodiscard]] std::uint64_t splitmix64(std::uint64_t& state) noexcept;
/// Stateless avalanche mixer (splitmix64 finalizer).
[[nodiscard]] std::uint64_t mix64(std::uint64_t x) noexcept;

[[nodiscard]] HashPair make_hash_pair(std::uint64_t run_seed, HashStream stream, std::uint32_t row,
                                      HashFamily family = HashFamily::MultiplyShift) noexcept;

/// Unseeded 64-bit digest of a byte string; the integer the families act on.
[[nodiscard]] std::uint64_t fold64(std::span<const std::uint8_t> bytes) noexcept;

/// Raw family output before range reduction.
[[nodiscard]] std::uint64_t evaluate(const HashPair& h, std::uint64_t x) noexcept;

/// Bucket in [0, buckets). buckets must be >= 1.
[[nodiscard]] std::size_t bucket(const HashPair& h, std::uint64_t x, std::size_t buckets) noexcept;
[[nodiscard]] inline std::size_t bucket(const HashPair& h, std::span<const std::uint8_t> bytes,
                                        std::size_t buckets) noexcept {
  return bucket(h, fold64(bytes), buckets);
}

/// +1 or -1. Uses the top bit for multiply-shift (its low bits are weak) and
/// the low bit for the prime family.
[[nodiscard]] inline int sign(const HashPair& h, std::uint64_t x) noexcept {
  return bucket(h, x, 2) == 0 ? 1 : -1;
}
[[nodiscard]] inline int sign(const HashPair& h, std::span<const std::uint8_t> bytes) noexcept {
  return sign(h, fold64(bytes));
}

}  // namespace leanmon
