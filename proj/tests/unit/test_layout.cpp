#include <random>
#include <set>

#include <gtest/gtest.h>

#include "underreport/layout.hpp"

using namespace underreport;

TEST(Layout, Dimensions) {
  EXPECT_EQ(ParameterLayout(PoolingMode::Partial, 5, 30).dim(), 10u + 10u + 60u);
  EXPECT_EQ(ParameterLayout(PoolingMode::Complete, 5, 30).dim(), 10u + 60u);
  EXPECT_EQ(ParameterLayout(PoolingMode::NoPooling, 5, 30).dim(), 30u + 60u);
}

TEST(Layout, NamesAreUniqueAndFindable) {
  for (auto mode : {PoolingMode::Partial, PoolingMode::Complete, PoolingMode::NoPooling}) {
    ParameterLayout layout(mode, 3, 7);
    const auto names = layout.names();
    EXPECT_EQ(std::set<std::string>(names.begin(), names.end()).size(), names.size());
    for (std::size_t k = 0; k < names.size(); ++k) EXPECT_EQ(layout.find(names[k]), k);
    EXPECT_FALSE(layout.find("delta[7]").has_value());
    EXPECT_FALSE(layout.find("nonsense").has_value());
  }
}

TEST(Layout, ModeSpecificSymbols) {
  ParameterLayout complete(PoolingMode::Complete, 2, 2);
  EXPECT_THROW(complete.gamma(0), std::logic_error);
  EXPECT_FALSE(complete.find("gamma[0]").has_value());
  ParameterLayout none(PoolingMode::NoPooling, 2, 2);
  EXPECT_THROW(none.alpha(1), std::logic_error);
  EXPECT_THROW(none.beta0(0), std::logic_error);
  EXPECT_TRUE(none.summary_coefficients().empty());
  EXPECT_EQ(none.name(none.school_coef(SchoolCoef::Alpha4, 1)), "alpha4_school[1]");
  ParameterLayout partial(PoolingMode::Partial, 2, 2);
  EXPECT_EQ(partial.name(partial.epsilon(1)), "epsilon[1]");
  EXPECT_EQ(partial.name(partial.eta(0)), "eta[0]");
  EXPECT_EQ(partial.summary_coefficients().size(), 10u);
  EXPECT_EQ(partial.summary_coefficients().front(), partial.beta1());
}

TEST(Layout, PoolingNames) {
  EXPECT_EQ(parse_pooling("partial"), PoolingMode::Partial);
  EXPECT_EQ(parse_pooling("complete"), PoolingMode::Complete);
  EXPECT_EQ(parse_pooling("none"), PoolingMode::NoPooling);
  EXPECT_THROW(parse_pooling("full"), std::invalid_argument);
  EXPECT_EQ(pooling_name(PoolingMode::NoPooling), "none");
}

TEST(Layout, PackUnpackRoundTrip) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  for (auto mode : {PoolingMode::Partial, PoolingMode::Complete, PoolingMode::NoPooling}) {
    ParameterLayout layout(mode, 4, 9);
    std::vector<double> theta(layout.dim());
    for (auto& v : theta) v = n01(rng);
    const auto values = unpack(layout, theta);
    EXPECT_EQ(pack(layout, values), theta);
    EXPECT_EQ(unpack(layout, pack(layout, values)), values);
    EXPECT_EQ(values.delta.size(), 9u);
    if (mode == PoolingMode::NoPooling) {
      EXPECT_EQ(values.school_coefs.size(), 4u);
      EXPECT_TRUE(values.gamma.empty());
    }
  }
  ParameterLayout layout(PoolingMode::Partial, 2, 2);
  EXPECT_THROW(unpack(layout, std::vector<double>(3)), std::invalid_argument);
  ParameterValues wrong;
  EXPECT_THROW(pack(layout, wrong), std::invalid_argument);
}
