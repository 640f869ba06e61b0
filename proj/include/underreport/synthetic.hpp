#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "underreport/dataset.hpp"
#include "underreport/hmc.hpp"
#include "underreport/priors.hpp"
#include "underreport/rng.hpp"

namespace underreport {

enum class ReportingScheme { Independent, Exchangeable, Pairwise };

ReportingScheme parse_reporting_scheme(std::string_view name);
std::string_view reporting_scheme_name(ReportingScheme scheme);

/// Generative coefficient values; defaults are the full-data posterior means.
struct TrueParameters {
  std::array<double, 3> beta0{-4.54, -4.40, -4.32};
  double beta1 = 0.82;
  double beta2 = -4.05;
  std::array<double, 5> alpha{-1.43, -1.97, -2.48, 0.49, -3.00};
};

struct SimSpec {
  std::size_t n_schools = 50;
  int first_year = 2014;
  int n_years = 6;

  // Covariates. Enrolment is log-uniform per school with a small yearly wobble.
  double students_min = 300.0;
  double students_max = 50000.0;
  double students_jitter = 0.05;  // sd of the yearly log-enrolment change
  double women_mean = 0.57;
  double women_sd = 0.10;
  double single_gender_rate = 0.02;  // all-women or all-men schools, half each
  double pell_mean = 0.36;
  double pell_sd = 0.15;
  double pell_jitter = 0.02;
  std::array<double, 3> urbanization_probs{0.55, 0.30, 0.15};
  double assoc_rate = 0.13;
  double religious_rate = 0.03;

  TrueParameters truth{};
  /// Offsets and per-record noise are drawn at the model prior scales.
  PriorSpec scales{};
  ReportingScheme scheme = ReportingScheme::Independent;
  double rho = 0.0;  // Exchangeable only
  /// Overrides the reporting probability of every record when set.
  std::optional<double> fixed_reporting;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SimOutput {
  Dataset data;
  std::vector<std::int64_t> z_true;
  std::vector<double> p_true;
  std::vector<double> lambda_true;

  bool operator==(const SimOutput&) const = default;
};

/// Covariates, offsets and noises, then z ~ Poisson(lambda) and x from the
/// reporting scheme. School i draws from stream (seed, 1, i) and record r from
/// (seed, 2, r), so results depend only on the spec.
SimOutput simulate_full(const SimSpec& spec);

/// Reported count from z true events under a scheme.
std::int64_t report_events(std::int64_t z, double p, ReportingScheme scheme, double rho,
                           Engine& rng);

/// Sum of n exchangeable Bernoulli(p) variables with pairwise correlation rho.
/// One-factor construction: each variable copies a shared W with probability
/// sqrt(rho), otherwise is an independent draw.
std::int64_t correlated_bernoulli_sum(std::int64_t n, double p, double rho, Engine& rng);

/// Pairs of events are reported together with probability p; an odd leftover
/// event is reported on its own with probability p.
std::int64_t pairwise_report(std::int64_t z, double p, Engine& rng);

struct ToyCounts {
  std::vector<std::int64_t> x;
  std::vector<std::int64_t> z;
};

/// z_i ~ Poisson(lambda0), x_i ~ Binomial(z_i, p0), i = 1..n.
ToyCounts toy_iid(double lambda0, double p0, std::size_t n, std::uint64_t seed);

using CovariateSampler = std::function<std::pair<double, double>(Engine&)>;

struct ToyCovariateSpec {
  double alpha0 = -1.0;
  double alpha = 0.5;
  double beta0 = 1.5;
  double beta = 0.5;
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  /// Returns (v, w). Independent standard normals when empty.
  CovariateSampler covariates;
};

struct ToyCovariateOutput {
  std::vector<double> v;
  std::vector<double> w;
  std::vector<std::int64_t> x;
  std::vector<std::int64_t> z;
  std::vector<double> lambda;
  std::vector<double> p;
};

/// log lambda_i = beta0 + beta v_i, logit p_i = alpha0 + alpha w_i.
ToyCovariateOutput toy_covariate(const ToyCovariateSpec& spec);

struct ToyIidPriors {
  double log_lambda_mean = 1.6094379124341003;  // log 5
  double log_lambda_sd = 0.5;
  double p_a = 2.0;
  double p_b = 6.0;
};

/// Posterior of (log lambda0, logit p0) given the counts' sum and number,
/// lambda0 ~ LogNormal, p0 ~ Beta (Jacobian included).
LogDensityFn toy_iid_target(std::int64_t sum_x, std::size_t n, ToyIidPriors priors = {});

/// Standard deviation of p0 under the prior conditioned on lambda0 p0 = mu,
/// the limit of the posterior sd of p0 as n grows.
double toy_iid_conditional_p_sd(double mu, const ToyIidPriors& priors = {});

struct ToyCovariatePriors {
  Normal beta0{1.6094379124341003, 0.5};
  Normal beta{0.0, 1.0};
  Normal alpha0{-1.0986122886681098, 0.5};  // logit 0.25
  Normal alpha{0.0, 1.0};
};

/// Posterior of (beta0, beta, alpha0, alpha) with z marginalised out. The data
/// are copied into the returned function.
LogDensityFn toy_covariate_target(const ToyCovariateOutput& data, ToyCovariatePriors priors = {});

struct Regression {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares fit of z_true on z_hat. Throws std::invalid_argument when
/// z_hat is constant or the lengths differ.
Regression recovery_regression(std::span<const double> z_hat, std::span<const double> z_true);

struct RecoveryStudy {
  SimOutput sim;
  std::vector<double> z_hat;  // posterior mean of z per record
  Regression regression;
  std::size_t divergences = 0;
};

/// Simulates with `spec`, fits the partial-pooling model, recovers z by
/// augmentation and regresses the truth on the posterior means.
RecoveryStudy run_recovery_study(const SimSpec& spec, const PriorSpec& priors,
                                 const HmcConfig& config);

}  // namespace underreport
