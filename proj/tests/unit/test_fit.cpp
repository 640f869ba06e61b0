#include <cmath>

#include <gtest/gtest.h>

#include "underreport/diagnostics.hpp"
#include "underreport/fit.hpp"
#include "underreport/inference.hpp"
#include "underreport/synthetic.hpp"

using namespace underreport;

namespace {

HmcConfig quick(std::uint64_t seed, int warmup = 300, int iters = 300) {
  HmcConfig c;
  c.seed = seed;
  c.warmup_iters = warmup;
  c.sampling_iters = iters;
  c.leapfrog_steps = 16;
  return c;
}

}  // namespace

TEST(ToyFit, RecoversIdentifiedProduct) {
  const auto toy = toy_iid(5.0, 0.4, 500, 21);
  std::int64_t sum = 0;
  for (auto x : toy.x) sum += x;
  const std::vector<double> init{std::log(5.0), 0.0};
  const auto batch = sample_hmc(toy_iid_target(sum, toy.x.size()), init, {"log_lambda", "logit_p"},
                                quick(1, 500, 1000));
  std::vector<double> mu(batch.n_draws());
  for (std::size_t s = 0; s < mu.size(); ++s) {
    const auto q = batch.draw(s);
    mu[s] = std::exp(q[0]) * inv_logit(q[1]);
  }
  EXPECT_NEAR(mean(mu), 2.0, 0.15);
  EXPECT_EQ(batch.total_divergences(), 0u);
}

TEST(RunChains, DeterministicForSeed) {
  SimSpec spec;
  spec.n_schools = 6;
  spec.n_years = 3;
  const auto data = simulate_full(spec).data;
  const auto a = run_chains(data, PriorSpec{}, PoolingMode::Partial, quick(5, 60, 40));
  const auto b = run_chains(data, PriorSpec{}, PoolingMode::Partial, quick(5, 60, 40));
  EXPECT_EQ(a.draws, b.draws);
  EXPECT_EQ(a.names, ParameterLayout(PoolingMode::Partial, 6, 18).names());
  EXPECT_NO_THROW(check_batch_layout(a, ParameterLayout(PoolingMode::Partial, 6, 18)));
  EXPECT_THROW(check_batch_layout(a, ParameterLayout(PoolingMode::Complete, 6, 18)),
               std::invalid_argument);
}

TEST(RunChains, AllPoolingModesRun) {
  SimSpec spec;
  spec.n_schools = 5;
  spec.n_years = 3;
  const auto data = simulate_full(spec).data;
  for (auto mode : {PoolingMode::Partial, PoolingMode::Complete, PoolingMode::NoPooling}) {
    const auto batch = run_chains(data, PriorSpec{}, mode, quick(7, 100, 50));
    EXPECT_EQ(batch.dim, ParameterLayout(mode, 5, 15).dim());
    for (double v : batch.draws) ASSERT_TRUE(std::isfinite(v));
  }
}

TEST(RunChains, FiftySchoolFitConverges) {
  SimSpec spec;  // 50 schools x 6 years
  const auto data = simulate_full(spec).data;
  HmcConfig config;
  config.seed = 1;
  const auto batch = run_chains(data, PriorSpec{}, PoolingMode::Partial, config);
  EXPECT_EQ(batch.total_divergences(), 0u);
  for (const auto& row : coefficient_summary(batch)) {
    EXPECT_LE(row.rhat, 1.01) << row.name;
  }
}
