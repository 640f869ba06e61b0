#include "underreport/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace underreport {

LinearCoefficients coefficients_for(const ParameterLayout& layout,
                                    std::span<const double> theta, const Covariates& cov) {
  LinearCoefficients c;
  if (layout.has_globals()) {
    c.beta0 = theta[layout.beta0(static_cast<std::size_t>(cov.urban_index))];
    c.beta1 = theta[layout.beta1()];
    c.beta2 = theta[layout.beta2()];
    for (std::size_t k = 0; k < 5; ++k) c.alpha[k] = theta[layout.alpha(k)];
    return c;
  }
  const auto s = cov.school;
  c.beta0 = theta[layout.school_coef(SchoolCoef::Beta0, s)];
  c.beta1 = theta[layout.school_coef(SchoolCoef::Beta1, s)];
  c.beta2 = theta[layout.school_coef(SchoolCoef::Beta2, s)];
  c.alpha[0] = theta[layout.school_coef(SchoolCoef::Alpha0, s)];
  c.alpha[3] = theta[layout.school_coef(SchoolCoef::Alpha3, s)];
  c.alpha[4] = theta[layout.school_coef(SchoolCoef::Alpha4, s)];
  return c;
}

Effects fitted_effects(const ParameterLayout& layout, std::span<const double> theta,
                       const Covariates& cov, std::size_t record) {
  Effects e;
  if (layout.has_school_offsets()) {
    e.epsilon = theta[layout.epsilon(cov.school)];
    e.gamma = theta[layout.gamma(cov.school)];
  } else if (layout.mode() == PoolingMode::NoPooling && cov.school >= layout.n_schools()) {
    throw std::out_of_range(fmt::format("school index {} not in parameter layout", cov.school));
  }
  e.eta = theta[layout.eta(record)];
  e.delta = theta[layout.delta(record)];
  return e;
}

double rate_predictor(const LinearCoefficients& c, const Covariates& cov, const Effects& e) {
  return c.beta0 + c.beta1 * cov.log_students + c.beta2 * cov.women_sq + e.epsilon + e.eta;
}

double report_predictor(const LinearCoefficients& c, const Covariates& cov, const Effects& e) {
  return c.alpha[0] + c.alpha[1] * cov.assoc + c.alpha[2] * cov.religious +
         c.alpha[3] * cov.women_centered + c.alpha[4] * cov.pell_centered + e.gamma + e.delta;
}

double log_lambda(const ParameterLayout& layout, std::span<const double> theta,
                  const Covariates& cov, std::size_t record) {
  const auto e = fitted_effects(layout, theta, cov, record);
  return rate_predictor(coefficients_for(layout, theta, cov), cov, e);
}

double logit_p(const ParameterLayout& layout, std::span<const double> theta,
               const Covariates& cov, std::size_t record) {
  const auto e = fitted_effects(layout, theta, cov, record);
  return report_predictor(coefficients_for(layout, theta, cov), cov, e);
}

double marginal_log_pmf(std::int64_t x, double lambda, double p) {
  if (x < 0) throw std::domain_error("marginal_log_pmf: negative count");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::domain_error("marginal_log_pmf: lambda must be finite and > 0");
  }
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("marginal_log_pmf: p outside [0, 1]");
  const auto xd = static_cast<double>(x);
  if (p == 0.0) return x == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  const double mu = lambda * p;
  return xd * std::log(mu) - mu - std::lgamma(xd + 1.0);
}

double marginal_log_pmf_from_predictors(std::int64_t x, double log_lambda, double logit_p) {
  const auto xd = static_cast<double>(x);
  const double log_mu = log_lambda + log_inv_logit(logit_p);
  return xd * log_mu - std::exp(log_mu) - std::lgamma(xd + 1.0);
}

Normal school_coefficient_prior(const PriorSpec& priors, SchoolCoef which, int urban_index) {
  switch (which) {
    case SchoolCoef::Beta0: return priors.beta0.at(static_cast<std::size_t>(urban_index));
    case SchoolCoef::Beta1: return priors.beta1;
    case SchoolCoef::Beta2: return priors.beta2;
    case SchoolCoef::Alpha0: return priors.alpha0;
    case SchoolCoef::Alpha3: return priors.alpha3;
    case SchoolCoef::Alpha4: return priors.alpha4;
  }
  throw std::invalid_argument("unknown school coefficient");
}

PosteriorModel::PosteriorModel(Dataset data, PriorSpec priors, PoolingMode mode)
    : data_(std::move(data)),
      priors_(std::move(priors)),
      layout_(mode, data_.n_schools(), data_.size()) {
  if (data_.empty()) throw DataError("posterior requires a nonempty dataset");
  priors_.validate();
  prior_mean_.assign(layout_.dim(), 0.0);
  prior_sd_.assign(layout_.dim(), 1.0);
  auto set = [&](std::size_t k, const Normal& n) {
    prior_mean_[k] = n.mean;
    prior_sd_[k] = n.sd;
  };
  if (layout_.has_globals()) {
    set(layout_.alpha(0), priors_.alpha0);
    set(layout_.alpha(1), priors_.alpha1);
    set(layout_.alpha(2), priors_.alpha2);
    set(layout_.alpha(3), priors_.alpha3);
    set(layout_.alpha(4), priors_.alpha4);
    for (std::size_t v = 0; v < 3; ++v) set(layout_.beta0(v), priors_.beta0[v]);
    set(layout_.beta1(), priors_.beta1);
    set(layout_.beta2(), priors_.beta2);
  }
  const auto S = data_.n_schools();
  if (layout_.has_school_offsets()) {
    for (std::size_t i = 0; i < S; ++i) {
      set(layout_.gamma(i), priors_.gamma);
      set(layout_.epsilon(i), priors_.epsilon);
    }
  }
  if (mode == PoolingMode::NoPooling) {
    // A school's intercept prior follows the urbanization of its first record.
    std::vector<int> urban(S, -1);
    for (const auto& c : data_.covariates()) {
      if (urban[c.school] < 0) urban[c.school] = c.urban_index;
    }
    for (std::size_t i = 0; i < S; ++i) {
      for (std::size_t k = 0; k < kSchoolCoefCount; ++k) {
        const auto which = static_cast<SchoolCoef>(k);
        set(layout_.school_coef(which, i), school_coefficient_prior(priors_, which, urban[i]));
      }
    }
  }
  for (std::size_t r = 0; r < data_.size(); ++r) {
    set(layout_.delta(r), priors_.delta);
    set(layout_.eta(r), priors_.eta);
  }
  log_factorial_.reserve(data_.size());
  for (const auto& rec : data_.records()) {
    log_factorial_.push_back(std::lgamma(static_cast<double>(rec.reported) + 1.0));
  }
}

void PosteriorModel::check_shape(std::span<const double> theta) const {
  if (theta.size() != layout_.dim()) {
    throw std::invalid_argument(fmt::format("parameter vector has {} entries, model expects {}",
                                            theta.size(), layout_.dim()));
  }
}

double PosteriorModel::log_prior(std::span<const double> theta) const {
  check_shape(theta);
  double lp = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    lp += Normal{prior_mean_[k], prior_sd_[k]}.log_density(theta[k]);
  }
  return lp;
}

double PosteriorModel::log_likelihood(std::span<const double> theta) const {
  check_shape(theta);
  double ll = 0.0;
  const auto& covs = data_.covariates();
  for (std::size_t r = 0; r < covs.size(); ++r) {
    const auto coefs = coefficients_for(layout_, theta, covs[r]);
    const auto e = fitted_effects(layout_, theta, covs[r], r);
    const double L = rate_predictor(coefs, covs[r], e);
    const double M = report_predictor(coefs, covs[r], e);
    const auto x = static_cast<double>(data_.records()[r].reported);
    const double log_mu = L + log_inv_logit(M);
    ll += x * log_mu - std::exp(log_mu) - log_factorial_[r];
  }
  return ll;
}

double PosteriorModel::log_posterior(std::span<const double> theta) const {
  return log_prior(theta) + log_likelihood(theta);
}

double PosteriorModel::log_posterior_and_gradient(std::span<const double> theta,
                                                  std::span<double> grad) const {
  check_shape(theta);
  if (grad.size() != theta.size()) throw std::invalid_argument("gradient buffer size mismatch");

  double lp = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double z = (theta[k] - prior_mean_[k]) / prior_sd_[k];
    lp += Normal{prior_mean_[k], prior_sd_[k]}.log_density(theta[k]);
    grad[k] = -z / prior_sd_[k];
  }

  const auto& covs = data_.covariates();
  const bool nopool = layout_.mode() == PoolingMode::NoPooling;
  for (std::size_t r = 0; r < covs.size(); ++r) {
    const auto& cov = covs[r];
    const auto coefs = coefficients_for(layout_, theta, cov);
    const auto e = fitted_effects(layout_, theta, cov, r);
    const double L = rate_predictor(coefs, cov, e);
    const double M = report_predictor(coefs, cov, e);
    const auto x = static_cast<double>(data_.records()[r].reported);
    const double s = inv_logit(M);
    const double mu = std::exp(L) * s;
    lp += x * (L + log_inv_logit(M)) - mu - log_factorial_[r];

    const double dL = x - mu;
    const double dM = (x - mu) * (1.0 - s);

    grad[layout_.eta(r)] += dL;
    grad[layout_.delta(r)] += dM;
    if (nopool) {
      const auto i = cov.school;
      grad[layout_.school_coef(SchoolCoef::Beta0, i)] += dL;
      grad[layout_.school_coef(SchoolCoef::Beta1, i)] += dL * cov.log_students;
      grad[layout_.school_coef(SchoolCoef::Beta2, i)] += dL * cov.women_sq;
      grad[layout_.school_coef(SchoolCoef::Alpha0, i)] += dM;
      grad[layout_.school_coef(SchoolCoef::Alpha3, i)] += dM * cov.women_centered;
      grad[layout_.school_coef(SchoolCoef::Alpha4, i)] += dM * cov.pell_centered;
      continue;
    }
    grad[layout_.beta0(static_cast<std::size_t>(cov.urban_index))] += dL;
    grad[layout_.beta1()] += dL * cov.log_students;
    grad[layout_.beta2()] += dL * cov.women_sq;
    grad[layout_.alpha(0)] += dM;
    grad[layout_.alpha(1)] += dM * cov.assoc;
    grad[layout_.alpha(2)] += dM * cov.religious;
    grad[layout_.alpha(3)] += dM * cov.women_centered;
    grad[layout_.alpha(4)] += dM * cov.pell_centered;
    if (layout_.has_school_offsets()) {
      grad[layout_.epsilon(cov.school)] += dL;
      grad[layout_.gamma(cov.school)] += dM;
    }
  }
  return lp;
}

std::vector<double> PosteriorModel::gradient(std::span<const double> theta) const {
  std::vector<double> g(theta.size());
  log_posterior_and_gradient(theta, g);
  return g;
}

double log_prior(std::span<const double> theta, const Dataset& data, const PriorSpec& priors,
                 PoolingMode mode) {
  return PosteriorModel(data, priors, mode).log_prior(theta);
}

double log_posterior(std::span<const double> theta, const Dataset& data,
                     const PriorSpec& priors, PoolingMode mode) {
  return PosteriorModel(data, priors, mode).log_posterior(theta);
}

std::vector<double> grad_log_posterior(std::span<const double> theta, const Dataset& data,
                                       const PriorSpec& priors, PoolingMode mode) {
  return PosteriorModel(data, priors, mode).gradient(theta);
}

}  // namespace underreport
