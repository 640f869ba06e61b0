#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "underreport/dataset.hpp"
#include "underreport/layout.hpp"
#include "underreport/priors.hpp"

namespace underreport {

/// Coefficients acting on one record's covariates, independent of pooling
/// mode. alpha[1] and alpha[2] are zero when schools are modelled separately.
struct LinearCoefficients {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  std::array<double, 5> alpha{};
};

/// School- and record-level offsets added to the two linear predictors.
struct Effects {
  double epsilon = 0.0;  // school, incidence side
  double eta = 0.0;      // record, incidence side
  double gamma = 0.0;    // school, reporting side
  double delta = 0.0;    // record, reporting side
};

/// Throws std::out_of_range when the record's school has no block in the layout.
LinearCoefficients coefficients_for(const ParameterLayout& layout,
                                    std::span<const double> theta, const Covariates& cov);
Effects fitted_effects(const ParameterLayout& layout, std::span<const double> theta,
                       const Covariates& cov, std::size_t record);

/// log(lambda) = beta0 + beta1 v2 + beta2 v3 + epsilon + eta
double rate_predictor(const LinearCoefficients& c, const Covariates& cov, const Effects& e);
/// logit(p) = alpha0 + alpha1 w1 + alpha2 w2 + alpha3 w3 + alpha4 w4 + gamma + delta
double report_predictor(const LinearCoefficients& c, const Covariates& cov, const Effects& e);

double log_lambda(const ParameterLayout& layout, std::span<const double> theta,
                  const Covariates& cov, std::size_t record);
double logit_p(const ParameterLayout& layout, std::span<const double> theta,
               const Covariates& cov, std::size_t record);

/// log P(x | lambda, p) for the thinned count, i.e. the Poisson(lambda p) log-pmf.
/// p == 0 gives -infinity for x > 0. Throws std::domain_error for lambda <= 0,
/// p outside [0, 1] or x < 0.
double marginal_log_pmf(std::int64_t x, double lambda, double p);

/// Same quantity from the two linear predictors, stable for any finite input.
double marginal_log_pmf_from_predictors(std::int64_t x, double log_lambda, double logit_p);

/// Log posterior of the marginalised model (latent counts summed out) and its
/// gradient, for one dataset, prior specification and pooling mode.
///
/// The per-record log-likelihood is x (L + log s(M)) - exp(L) s(M) - log x!, with
/// L = log lambda and M = logit p. Holds its own copy of the data, so it is
/// safe to share across threads.
class PosteriorModel {
 public:
  PosteriorModel(Dataset data, PriorSpec priors, PoolingMode mode);

  const ParameterLayout& layout() const noexcept { return layout_; }
  const Dataset& data() const noexcept { return data_; }
  const PriorSpec& priors() const noexcept { return priors_; }
  PoolingMode mode() const noexcept { return layout_.mode(); }
  std::size_t dim() const noexcept { return layout_.dim(); }

  /// Prior location and scale for every entry of the flat vector.
  std::span<const double> prior_mean() const noexcept { return prior_mean_; }
  std::span<const double> prior_sd() const noexcept { return prior_sd_; }

  double log_prior(std::span<const double> theta) const;
  double log_likelihood(std::span<const double> theta) const;
  double log_posterior(std::span<const double> theta) const;

  /// Writes the gradient into `grad` and returns the log posterior.
  double log_posterior_and_gradient(std::span<const double> theta,
                                    std::span<double> grad) const;
  std::vector<double> gradient(std::span<const double> theta) const;

 private:
  void check_shape(std::span<const double> theta) const;

  Dataset data_;
  PriorSpec priors_;
  ParameterLayout layout_;
  std::vector<double> prior_mean_;
  std::vector<double> prior_sd_;
  std::vector<double> log_factorial_;
};

/// Convenience free functions; each builds a PosteriorModel.
double log_prior(std::span<const double> theta, const Dataset& data,
                 const PriorSpec& priors, PoolingMode mode);
double log_posterior(std::span<const double> theta, const Dataset& data,
                     const PriorSpec& priors, PoolingMode mode);
std::vector<double> grad_log_posterior(std::span<const double> theta, const Dataset& data,
                                       const PriorSpec& priors, PoolingMode mode);

/// Prior distribution of one NoPooling per-school coefficient.
Normal school_coefficient_prior(const PriorSpec& priors, SchoolCoef which, int urban_index);

}  // namespace underreport
