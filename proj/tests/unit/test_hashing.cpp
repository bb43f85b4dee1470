#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "leanmon/hashing.hpp"

namespace leanmon {
namespace {

class HashFamilies : public ::testing::TestWithParam<HashFamily> {};

INSTANTIATE_TEST_SUITE_P(Both, HashFamilies,
                         ::testing::Values(HashFamily::MultiplyShift, HashFamily::MersennePrime));

TEST_P(HashFamilies, SingleBucketIsZero) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const HashPair h = make_hash_pair(rng(), HashStream::Bucket, 0, GetParam());
    EXPECT_EQ(bucket(h, rng(), 1), 0u);
  }
}

TEST_P(HashFamilies, Deterministic) {
  const HashPair h1 = make_hash_pair(42, HashStream::Bucket, 3, GetParam());
  const HashPair h2 = make_hash_pair(42, HashStream::Bucket, 3, GetParam());
  EXPECT_EQ(h1, h2);
  EXPECT_EQ(bucket(h1, 123456789, 1000), bucket(h2, 123456789, 1000));
  EXPECT_EQ(sign(h1, 987654321), sign(h2, 987654321));
}

TEST_P(HashFamilies, MultiplierNonzeroAndRowsDiffer) {
  std::vector<HashPair> rows;
  for (std::uint32_t j = 0; j < 16; ++j) {
    rows.push_back(make_hash_pair(7, HashStream::Bucket, j, GetParam()));
    EXPECT_NE(rows.back().a, 0u);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) EXPECT_NE(rows[i].a, rows[j].a);
  }
}

// Pairwise collision rate over fresh seeds: 1/B within 3 sigma.
TEST_P(HashFamilies, CollisionRateMatchesUniform) {
  std::mt19937_64 rng(2024);
  constexpr int kPairs = 100000;
  constexpr std::size_t kB = 1024;
  int collisions = 0;
  for (int i = 0; i < kPairs; ++i) {
    const HashPair h = make_hash_pair(rng(), HashStream::Bucket, 0, GetParam());
    const std::uint64_t x = rng();
    std::uint64_t y = rng();
    if (y == x) ++y;
    collisions += bucket(h, x, kB) == bucket(h, y, kB);
  }
  const double p = 1.0 / kB;
  const double sigma = std::sqrt(p * (1 - p) / kPairs);
  EXPECT_NEAR(static_cast<double>(collisions) / kPairs, p, 3 * sigma);
}

TEST_P(HashFamilies, SignIsBalancedOverSeeds) {
  std::mt19937_64 rng(77);
  const std::uint64_t x = 0x1234567890abcdefULL;
  const std::uint64_t y = 0x0fedcba987654321ULL;
  long sum = 0;
  long product = 0;
  constexpr int kSeeds = 10000;
  for (int i = 0; i < kSeeds; ++i) {
    const HashPair g = make_hash_pair(rng(), HashStream::Sign, 0, GetParam());
    const int sx = sign(g, x);
    const int sy = sign(g, y);
    ASSERT_TRUE(sx == 1 || sx == -1);
    sum += sx;
    product += sx * sy;
  }
  EXPECT_LE(std::abs(static_cast<double>(sum) / kSeeds), 0.04);
  EXPECT_LE(std::abs(static_cast<double>(product) / kSeeds), 0.04);
}

// Chi-square goodness of fit at p = 0.01 (critical values for 15 and 1023
// degrees of freedom; the latter by Wilson-Hilferty).
TEST_P(HashFamilies, BucketsPassChiSquare) {
  std::mt19937_64 rng(99);
  for (auto [buckets, critical] : {std::pair<std::size_t, double>{16, 30.58},
                                   std::pair<std::size_t, double>{1024, 1131.1}}) {
    const HashPair h = make_hash_pair(5, HashStream::Bucket, 0, GetParam());
    std::vector<double> counts(buckets, 0);
    constexpr int kKeys = 100000;
    for (int i = 0; i < kKeys; ++i) counts[bucket(h, rng(), buckets)] += 1;
    const double expected = static_cast<double>(kKeys) / static_cast<double>(buckets);
    double chi2 = 0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    EXPECT_LT(chi2, critical) << "buckets=" << buckets;
  }
}

TEST_P(HashFamilies, DifferentSeedsDisagreeOften) {
  const HashPair r0 = make_hash_pair(1, HashStream::Bucket, 0, GetParam());
  const HashPair r1 = make_hash_pair(2, HashStream::Bucket, 0, GetParam());
  std::mt19937_64 rng(3);
  int disagree = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::uint64_t x = rng();
    disagree += bucket(r0, x, 2) != bucket(r1, x, 2);
  }
  EXPECT_GE(disagree, 4000);
}

TEST(Hashing, StreamsAreIndependent) {
  EXPECT_NE(make_hash_pair(1, HashStream::Bucket, 0), make_hash_pair(1, HashStream::Sign, 0));
}

TEST(Hashing, MultiplyShiftSignUsesHighBit) {
  // Inputs differing only above bit 0 must still get varied signs.
  const HashPair g = make_hash_pair(9, HashStream::Sign, 0);
  int plus = 0;
  for (std::uint64_t x = 0; x < 2000; x += 2) plus += sign(g, x) == 1;
  EXPECT_GT(plus, 400);
  EXPECT_LT(plus, 600);
}

TEST(Hashing, Fold64DependsOnEveryByte) {
  std::vector<std::uint8_t> bytes(13, 0);
  const std::uint64_t base = fold64(bytes);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = 1;
    EXPECT_NE(fold64(bytes), base) << i;
    bytes[i] = 0;
  }
  EXPECT_NE(fold64(std::vector<std::uint8_t>(12, 0)), base);
}

}  // namespace
}  // namespace leanmon
