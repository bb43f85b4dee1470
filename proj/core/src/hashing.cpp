#include "leanmon/hashing.hpp"

#include <cstring>

namespace leanmon {

namespace {

__extension__ typedef unsigned __int128 u128;

std::uint64_t mod_mersenne61(u128 x) noexcept {
  std::uint64_t lo = static_cast<std::uint64_t>(x & kMersenne61);
  std::uint64_t hi = static_cast<std::uint64_t>(x >> 61);
  std::uint64_t r = lo + hi;  // inputs are < 2^122, so hi < 2^61
  r = (r & kMersenne61) + (r >> 61);
  if (r >= kMersenne61) r -= kMersenne61;
  return r;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  state += kGoldenGamma;
  return mix64(state);
}

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

HashPair make_hash_pair(std::uint64_t run_seed, HashStream stream, std::uint32_t row,
                        HashFamily family) noexcept {
  std::uint64_t state = run_seed ^ (kGoldenGamma * (std::uint64_t{row} + 1)) ^
                        static_cast<std::uint64_t>(stream);
  HashPair h;
  h.row = row;
  h.family = family;
  h.a = splitmix64(state);
  h.b = splitmix64(state);
  if (family == HashFamily::MultiplyShift) {
    h.a |= 1;
  } else {
    h.a = h.a % (kMersenne61 - 1) + 1;  // [1, p)
    h.b = h.b % kMersenne61;
  }
  return h;
}

std::uint64_t fold64(std::span<const std::uint8_t> bytes) noexcept {
  std::uint64_t h = 0x6A09E667F3BCC909ULL ^ (bytes.size() * kGoldenGamma);
  std::size_t i = 0;
  for (; i + 8 <= bytes.size(); i += 8) {
    std::uint64_t chunk;
    std::memcpy(&chunk, bytes.data() + i, 8);
    h = mix64(h ^ chunk) + kGoldenGamma;
  }
  if (i < bytes.size()) {
    std::uint64_t chunk = 0;
    std::memcpy(&chunk, bytes.data() + i, bytes.size() - i);
    h = mix64(h ^ chunk ^ (std::uint64_t{0xFF} << 56)) + kGoldenGamma;
  }
  return mix64(h);
}

std::uint64_t evaluate(const HashPair& h, std::uint64_t x) noexcept {
  if (h.family == HashFamily::MultiplyShift) return h.a * x + h.b;
  const std::uint64_t xr = mod_mersenne61(x);
  return mod_mersenne61(static_cast<u128>(h.a) * xr + h.b);
}

std::size_t bucket(const HashPair& h, std::uint64_t x, std::size_t buckets) noexcept {
  const std::uint64_t v = evaluate(h, x);
  if (h.family == HashFamily::MultiplyShift) {
    return static_cast<std::size_t>((static_cast<u128>(v) * buckets) >> 64);
  }
  return static_cast<std::size_t>(v % buckets);
}

}  // namespace leanmon
