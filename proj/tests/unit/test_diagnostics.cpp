#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "underreport/diagnostics.hpp"

using namespace underreport;

namespace {

std::vector<double> iid_normal(std::size_t n, std::uint64_t seed, double mu = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(mu, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

std::vector<double> ar1(std::size_t n, double phi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, std::sqrt(1.0 - phi * phi));
  std::vector<double> v(n);
  double x = std::normal_distribution<double>()(rng);
  for (auto& out : v) {
    x = phi * x + d(rng);
    out = x;
  }
  return v;
}

}  // namespace

TEST(Quantile, Type7Interpolation) {
  const std::vector<double> v{4.0, 1.0, 3.0, 2.0};
  EXPECT_DOUBLE_EQ(quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile(v, 0.25), 1.75);
  const double qs[] = {0.1, 0.5, 0.9};
  const auto got = quantiles(v, qs);
  EXPECT_DOUBLE_EQ(got[1], 2.5);
  EXPECT_LE(got[0], got[1]);
  EXPECT_LE(got[1], got[2]);
}

TEST(Moments, MeanAndVariance) {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(mean(v), 2.5);
  EXPECT_DOUBLE_EQ(variance(v), 5.0 / 3.0);
  EXPECT_EQ(variance(std::vector<double>{7.0}), 0.0);
}

TEST(SplitRhat, ConstantChainsAreDegenerate) {
  const std::vector<std::vector<double>> chains(4, std::vector<double>(100, 3.0));
  EXPECT_TRUE(std::isinf(split_rhat(chains)));
}

TEST(SplitRhat, InterleavedStreamNearOne) {
  const auto stream = iid_normal(4000, 1);
  std::vector<std::vector<double>> chains(4);
  for (std::size_t i = 0; i < stream.size(); ++i) chains[i % 4].push_back(stream[i]);
  EXPECT_NEAR(split_rhat(chains), 1.0, 0.01);
}

TEST(SplitRhat, SeparatedChainsLarge) {
  std::vector<std::vector<double>> chains{iid_normal(500, 2, 0.0), iid_normal(500, 3, 10.0)};
  EXPECT_GT(split_rhat(chains), 1.5);
}

TEST(SplitRhat, DetectsDrift) {
  // Each chain trends upward; the split halves disagree.
  std::vector<std::vector<double>> chains(2);
  for (int c = 0; c < 2; ++c) {
    auto noise = iid_normal(400, 10 + c);
    for (std::size_t i = 0; i < 400; ++i) chains[c].push_back(0.02 * i + noise[i]);
  }
  EXPECT_GT(split_rhat(chains), 1.1);
}

TEST(SplitRhat, RequiresEnoughDraws) {
  EXPECT_ANY_THROW(split_rhat({{1.0, 2.0, 3.0, 4.0}}));
  EXPECT_ANY_THROW(split_rhat({{1.0, 2.0}, {3.0, 4.0}}));
}

TEST(Ess, IidCloseToN) {
  const auto v = iid_normal(4000, 4);
  EXPECT_NEAR(ess(v), 4000.0, 0.15 * 4000.0);
}

TEST(Ess, Ar1MatchesAnalytic) {
  const double phi = 0.9;
  const std::size_t n = 20000;
  const auto v = ar1(n, phi, 5);
  const double expected = n * (1.0 - phi) / (1.0 + phi);
  EXPECT_NEAR(ess(v), expected, 0.3 * expected);
}

TEST(Ess, ConstantIsZero) {
  EXPECT_EQ(ess(std::vector<double>(200, 1.5)), 0.0);
}

TEST(Ess, MultiChainPoolsInformation) {
  std::vector<std::vector<double>> chains;
  for (int c = 0; c < 4; ++c) chains.push_back(iid_normal(1000, 20 + c));
  EXPECT_NEAR(ess(chains), 4000.0, 0.15 * 4000.0);
  std::vector<std::vector<double>> slow;
  for (int c = 0; c < 4; ++c) slow.push_back(ar1(5000, 0.9, 30 + c));
  const double expected = 20000.0 * 0.1 / 1.9;
  EXPECT_NEAR(ess(slow), expected, 0.3 * expected);
}
