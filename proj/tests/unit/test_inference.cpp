#include <cmath>

#include <gtest/gtest.h>

#include "support.hpp"
#include "underreport/diagnostics.hpp"
#include "underreport/fit.hpp"
#include "underreport/inference.hpp"
#include "underreport/model.hpp"
#include "underreport/synthetic.hpp"

using namespace underreport;
using testing_support::constant_batch;
using testing_support::record;

namespace {

// One record whose draws give lambda = 2 and p = 1/2 under complete pooling
// (students = 1 so log enrolment vanishes; covariates at their centres).
struct Degenerate {
  Dataset data = Dataset::from_records({record("a", 2014, 3, 1, 1, 0.5, 0.36)});
  ParameterLayout layout{PoolingMode::Complete, 1, 1};
  std::vector<double> theta = [this] {
    std::vector<double> t(layout.dim(), 0.0);
    t[layout.beta0(0)] = std::log(2.0);
    return t;
  }();
};

}  // namespace

TEST(SampleUnreported, FullReportingMeansNone) {
  auto rng = make_engine(1, 0);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_unreported(4, 7.5, 1.0, rng), 0);
}

TEST(SampleUnreported, MeanIsLambdaTimesMissRate) {
  auto rng = make_engine(2, 0);
  double total = 0.0;
  for (int i = 0; i < 100000; ++i) total += static_cast<double>(sample_unreported(3, 10.0, 0.3, rng));
  EXPECT_NEAR(total / 100000.0, 7.0, 0.1);
}

TEST(SampleUnreported, ClaimTwoDistribution) {
  auto rng = make_engine(3, 0);
  std::vector<std::int64_t> u(100000);
  for (auto& v : u) v = sample_unreported(2, 4.0, 0.5, rng);
  const double pval = testing_support::chi_square_pvalue(
      u, [](std::int64_t k) { return testing_support::poisson_pmf(k, 2.0); });
  EXPECT_GT(pval, 1e-3);
}

TEST(SampleUnreported, RejectsBadInputs) {
  auto rng = make_engine(4, 0);
  EXPECT_THROW(sample_unreported(1, 0.0, 0.5, rng), std::domain_error);
  EXPECT_THROW(sample_unreported(1, 1.0, 1.5, rng), std::domain_error);
}

TEST(AugmentBatch, DegenerateBatchGivesPoissonOne) {
  Degenerate d;
  const auto batch = constant_batch(d.layout, d.theta, 4, 25000);
  const auto aug = augment_batch(batch, d.data, PoolingMode::Complete, 5);
  ASSERT_EQ(aug.n_draws, 100000u);
  std::vector<std::int64_t> u(aug.n_draws);
  for (std::size_t s = 0; s < aug.n_draws; ++s) {
    EXPECT_NEAR(aug.lambda[s], 2.0, 1e-12);
    EXPECT_NEAR(aug.p[s], 0.5, 1e-12);
    u[s] = aug.at(s, 0, 3).unreported;
  }
  const double pval = testing_support::chi_square_pvalue(
      u, [](std::int64_t k) { return testing_support::poisson_pmf(k, 1.0); });
  EXPECT_GT(pval, 1e-3);
}

TEST(AugmentBatch, TotalsNeverBelowReportsAndTowerProperty) {
  SimSpec spec;
  spec.n_schools = 5;
  spec.n_years = 3;
  spec.seed = 4;
  const auto sim = simulate_full(spec);
  ParameterLayout layout(PoolingMode::Partial, sim.data.n_schools(), sim.data.size());
  PosteriorModel model(sim.data, PriorSpec{}, PoolingMode::Partial);
  // Draws scattered around the prior means.
  auto rng = make_engine(6, 0);
  SampleBatch batch = constant_batch(layout, std::vector<double>(layout.dim(), 0.0), 2, 2000);
  for (std::size_t s = 0; s < batch.n_draws(); ++s) {
    for (std::size_t k = 0; k < layout.dim(); ++k) {
      batch.draws[s * layout.dim() + k] =
          model.prior_mean()[k] + 0.3 * model.prior_sd()[k] * standard_normal(rng);
    }
  }
  const auto aug = augment_batch(batch, sim.data, PoolingMode::Partial, 7);
  for (std::size_t r = 0; r < sim.data.size(); ++r) {
    const auto x = sim.data.record(r).reported;
    double expected = 0.0;
    for (std::size_t s = 0; s < aug.n_draws; ++s) {
      const auto i = aug.index(s, r);
      ASSERT_GE(aug.z[i], x);
      expected += static_cast<double>(x) + aug.lambda[i] * (1.0 - aug.p[i]);
    }
    expected /= static_cast<double>(aug.n_draws);
    const auto z = aug.z_of(r);
    // The conditional Poisson noise alone bounds the MC error of the mean.
    const double se = std::sqrt(std::max(variance(z), 1e-6) / static_cast<double>(z.size()));
    EXPECT_NEAR(mean(z), expected, 4.0 * se + 1e-9) << r;
  }
}

TEST(AugmentBatch, DeterministicAndShapeChecked) {
  Degenerate d;
  const auto batch = constant_batch(d.layout, d.theta, 2, 50);
  EXPECT_EQ(augment_batch(batch, d.data, PoolingMode::Complete, 9).z,
            augment_batch(batch, d.data, PoolingMode::Complete, 9).z);
  EXPECT_THROW(augment_batch(batch, d.data, PoolingMode::Partial, 9), std::invalid_argument);
}

TEST(CoefficientSummary, ConstantDraws) {
  ParameterLayout layout(PoolingMode::Complete, 1, 1);
  std::vector<double> theta(layout.dim(), 0.0);
  theta[layout.beta1()] = 0.82;
  const auto rows = coefficient_summary(constant_batch(layout, theta, 2, 10));
  ASSERT_EQ(rows.size(), 10u);
  EXPECT_EQ(rows[0].name, "beta1");
  EXPECT_DOUBLE_EQ(rows[0].mean, 0.82);
  EXPECT_EQ(rows[0].median, 0.82);
  EXPECT_EQ(rows[9].name, "alpha4");
}

TEST(CoefficientSummary, QuartilesOrdered) {
  ParameterLayout layout(PoolingMode::Partial, 2, 2);
  auto batch = constant_batch(layout, std::vector<double>(layout.dim(), 0.0), 3, 40);
  auto rng = make_engine(10, 0);
  for (auto& v : batch.draws) v = 2.0 * standard_normal(rng);
  for (const auto& row : coefficient_summary(batch)) {
    EXPECT_LE(row.q25, row.median);
    EXPECT_LE(row.median, row.q75);
    EXPECT_GT(row.rhat, 0.9);
  }
  auto single = batch;
  single.n_chains = 1;
  single.draws_per_chain = 120;
  EXPECT_THROW(coefficient_summary(single), std::invalid_argument);
}

TEST(PercapitaScaling, PowerLawAnchors) {
  EXPECT_NEAR(percapita_scaling(0.82, 2.0), 1.133, 0.001);
  EXPECT_NEAR(percapita_scaling(0.82, 4.0), 1.283, 0.001);
  EXPECT_EQ(percapita_scaling(1.0, 37.0), 1.0);
  double prev = INFINITY;
  for (double b = 0.5; b <= 1.5; b += 0.1) {
    const double v = percapita_scaling(b, 3.0);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_THROW(percapita_scaling(0.8, 0.0), std::domain_error);
}

TEST(Yearly, SingleRecordFullReporting) {
  AugmentedDraws aug;
  aug.n_draws = 3;
  aug.n_records = 1;
  aug.lambda = {1.0, 1.0, 1.0};
  aug.p = {1.0, 1.0, 1.0};
  aug.z = {4, 4, 4};
  const auto data = Dataset::from_records({record("a", 2014, 4, 2000)});
  const auto res = yearly_aggregates(aug, data);
  ASSERT_EQ(res.years.size(), 1u);
  for (double r : res.years[0].reporting_rate) EXPECT_EQ(r, 1.0);
  EXPECT_DOUBLE_EQ(res.years[0].incidence.median, 2.0);
}

TEST(Yearly, TwoSchoolArithmeticAndMissingYear) {
  AugmentedDraws aug;
  aug.n_draws = 1;
  aug.n_records = 2;
  aug.lambda = {1.0, 1.0};
  aug.p = {0.5, 0.5};
  aug.z = {2, 4};
  const auto data =
      Dataset::from_records({record("a", 2016, 1, 1000), record("b", 2016, 2, 1000)});
  const int years[] = {2015, 2016};
  const auto res = yearly_aggregates(aug, data, years);
  ASSERT_EQ(res.years.size(), 1u);
  EXPECT_DOUBLE_EQ(res.years[0].incidence_per_1000[0], 3.0);
  EXPECT_DOUBLE_EQ(res.years[0].reporting_rate[0], 0.5);
  ASSERT_EQ(res.notices.size(), 1u);
  EXPECT_NE(res.notices[0].find("2015"), std::string::npos);
}

TEST(Yearly, SumThenDivideMatchesPerRecord) {
  Degenerate d;
  SimSpec spec;
  spec.n_schools = 6;
  spec.n_years = 2;
  const auto sim = simulate_full(spec);
  ParameterLayout layout(PoolingMode::Complete, sim.data.n_schools(), sim.data.size());
  PosteriorModel model(sim.data, PriorSpec{}, PoolingMode::Complete);
  const std::vector<double> theta(model.prior_mean().begin(), model.prior_mean().end());
  const auto aug = augment_batch(constant_batch(layout, theta, 2, 20), sim.data,
                                 PoolingMode::Complete, 3);
  const auto res = yearly_aggregates(aug, sim.data);
  for (const auto& y : res.years) {
    for (std::size_t s = 0; s < aug.n_draws; ++s) {
      double z = 0.0;
      double students = 0.0;
      for (std::size_t r = 0; r < sim.data.size(); ++r) {
        if (sim.data.record(r).year != y.year) continue;
        z += static_cast<double>(aug.z[aug.index(s, r)]);
        students += static_cast<double>(sim.data.record(r).students);
      }
      EXPECT_NEAR(y.incidence_per_1000[s], 1000.0 * z / students, 1e-12);
    }
  }
}

TEST(Yearly, RecoversKnownReportingRate) {
  // Populations drawn from the model itself with reporting centred on 0.25.
  // Only the product lambda p is identified, so single fits scatter by about
  // the posterior width; the average over five populations must land close.
  double fitted = 0.0;
  double realized = 0.0;
  int cells = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SimSpec spec;
    spec.n_schools = 40;
    spec.n_years = 3;
    spec.seed = seed;
    spec.truth.beta0 = {-5.5, -5.5, -5.5};
    spec.truth.beta1 = 1.0;
    spec.truth.beta2 = 0.0;
    spec.truth.alpha = {logit(0.25), 0.0, 0.0, 0.0, 0.0};
    const auto sim = simulate_full(spec);
    HmcConfig cfg;
    cfg.warmup_iters = 400;
    cfg.sampling_iters = 300;
    cfg.seed = 22;
    const auto batch = run_chains(sim.data, PriorSpec{}, PoolingMode::Partial, cfg);
    const auto aug = augment_batch(batch, sim.data, PoolingMode::Partial, 23);
    for (const auto& y : yearly_aggregates(aug, sim.data).years) {
      double x = 0.0;
      double z = 0.0;
      for (std::size_t r = 0; r < sim.data.size(); ++r) {
        if (sim.data.record(r).year != y.year) continue;
        x += static_cast<double>(sim.data.record(r).reported);
        z += static_cast<double>(sim.z_true[r]);
      }
      fitted += y.reporting.median;
      realized += x / z;
      ++cells;
    }
  }
  EXPECT_NEAR(realized / cells, 0.25, 0.05);
  EXPECT_NEAR(fitted / cells, realized / cells, 0.05);
}

TEST(RecordSummaries, MatchesDraws) {
  AugmentedDraws aug;
  aug.n_draws = 3;
  aug.n_records = 1;
  aug.lambda = {1.0, 2.0, 3.0};
  aug.p = {0.2, 0.4, 0.6};
  aug.z = {5, 6, 10};
  const auto data = Dataset::from_records({record("a", 2014, 5, 500)});
  const auto rows = record_summaries(aug, data);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_DOUBLE_EQ(rows[0].z_mean, 7.0);
  EXPECT_DOUBLE_EQ(rows[0].incidence_median, 12.0);
  EXPECT_DOUBLE_EQ(rows[0].lambda_median, 2.0);
  EXPECT_DOUBLE_EQ(rows[0].p_median, 0.4);
}

// Runs 100 desk-scale fits with beta1 = 0.8 and counts how often the posterior
// interquartile range covers it. Disabled by default: a calibrated 50%
// interval covers about half the time, and the N(1, 0.1) prior pulls the
// interval above 0.8, so the >= 80 threshold is not met (see the README).
TEST(CoefficientSummary, DISABLED_Beta1InterquartileCalibration) {
  int covered = 0;
  for (std::uint64_t rep = 1; rep <= 100; ++rep) {
    SimSpec spec;
    spec.n_schools = 20;
    spec.n_years = 3;
    spec.seed = 1000 + rep;
    spec.truth.beta1 = 0.8;
    const auto sim = simulate_full(spec);
    HmcConfig cfg;
    cfg.warmup_iters = 300;
    cfg.sampling_iters = 250;
    cfg.seed = rep;
    const auto rows =
        coefficient_summary(run_chains(sim.data, PriorSpec{}, PoolingMode::Partial, cfg));
    if (rows[0].q25 <= 0.8 && 0.8 <= rows[0].q75) ++covered;
  }
  EXPECT_GE(covered, 80);
}
