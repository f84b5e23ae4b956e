#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "actowl/harness/ari.hpp"
#include "oracle/ari_oracle.hpp"

using actowl::InputError;
using actowl::harness::adjusted_rand_index;

TEST(Ari, Examples) {
  const std::vector<int> a = {1, 1, 2, 2};
  EXPECT_DOUBLE_EQ(adjusted_rand_index(a, a), 1.0);
  EXPECT_NEAR(adjusted_rand_index(a, std::vector<int>{1, 2, 1, 2}), -0.5, 1e-12);
  EXPECT_NEAR(oracle::brute_force_ari(a, std::vector<int>{1, 2, 1, 2}), -0.5, 1e-12);
}

TEST(Ari, MixedLabelTypes) {
  const std::vector<std::size_t> pred = {0, 0, 1, 1, 2};
  const std::vector<std::string> truth = {"anna", "anna", "ben", "ben", "Shared"};
  EXPECT_DOUBLE_EQ(adjusted_rand_index(pred, truth), 1.0);
}

TEST(Ari, Errors) {
  EXPECT_THROW(adjusted_rand_index(std::vector<int>{1, 2}, std::vector<int>{1}), InputError);
  EXPECT_THROW(adjusted_rand_index(std::vector<int>{1}, std::vector<int>{1}), InputError);
}

TEST(Ari, DegenerateSingleClusterIsOne) {
  EXPECT_DOUBLE_EQ(adjusted_rand_index(std::vector<int>{3, 3, 3}, std::vector<int>{1, 1, 1}), 1.0);
}

TEST(AriProperty, MatchesPairCountingOracleAndIsPermutationInvariant) {
  std::mt19937_64 g(12);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + g() % 20;
    const int kp = 1 + static_cast<int>(g() % 5), kt = 1 + static_cast<int>(g() % 5);
    std::vector<int> pred(n), truth(n);
    for (auto& x : pred) x = static_cast<int>(g() % kp);
    for (auto& x : truth) x = static_cast<int>(g() % kt);
    const double ari = adjusted_rand_index(pred, truth);
    EXPECT_NEAR(ari, oracle::brute_force_ari(pred, truth), 1e-12);
    EXPECT_GE(ari, -1.0);
    EXPECT_LE(ari, 1.0);

    std::vector<int> sigma = {0, 1, 2, 3, 4};
    std::shuffle(sigma.begin(), sigma.end(), g);
    std::vector<int> relabeled;
    for (int x : pred) relabeled.push_back(sigma[x] + 10);
    EXPECT_NEAR(adjusted_rand_index(relabeled, truth), ari, 1e-12);
  }
}
