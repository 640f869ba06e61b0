#include "underreport/priors.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "underreport/rng.hpp"

namespace underreport {

namespace {

constexpr double kBaselineReportingMedian = 0.22;

void require_positive(const Normal& n, const char* name) {
  if (!(n.sd > 0.0) || !std::isfinite(n.sd) || !std::isfinite(n.mean)) {
    throw std::invalid_argument(std::string("prior scale for ") + name +
                                " must be finite and > 0");
  }
}

void require_nonnegative(double s, const char* name) {
  if (!(s >= 0.0) || !std::isfinite(s)) {
    throw std::invalid_argument(std::string("predictive scale ") + name +
                                " must be finite and >= 0");
  }
}

}  // namespace

double Normal::log_density(double x) const {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

void PriorSpec::validate() const {
  for (const auto& b : beta0) require_positive(b, "beta0");
  require_positive(beta1, "beta1");
  require_positive(beta2, "beta2");
  require_positive(epsilon, "epsilon");
  require_positive(eta, "eta");
  require_positive(alpha0, "alpha0");
  require_positive(alpha1, "alpha1");
  require_positive(alpha2, "alpha2");
  require_positive(alpha3, "alpha3");
  require_positive(alpha4, "alpha4");
  require_positive(gamma, "gamma");
  require_positive(delta, "delta");
  require_nonnegative(predictive.delta, "delta");
  require_nonnegative(predictive.eta, "eta");
  require_nonnegative(predictive.gamma_new, "gamma_new");
  require_nonnegative(predictive.epsilon_new, "epsilon_new");
}

Scenario parse_scenario(std::string_view id) {
  if (id.size() == 1) {
    switch (id[0]) {
      case 'a': case 'A': return Scenario::A;
      case 'b': case 'B': return Scenario::B;
      case 'c': case 'C': return Scenario::C;
      case 'd': case 'D': return Scenario::D;
      case 'e': case 'E': return Scenario::E;
      default: break;
    }
  }
  throw std::invalid_argument("unknown scenario '" + std::string(id) +
                              "' (expected one of a, b, c, d, e)");
}

char scenario_id(Scenario s) {
  return static_cast<char>('a' + static_cast<int>(s));
}

ScenarioPreset scenario_preset(Scenario s) {
  switch (s) {
    case Scenario::A: return {s, kBaselineReportingMedian};
    case Scenario::B: return {s, 0.197};
    case Scenario::C: return {s, kBaselineReportingMedian * 0.75};
    case Scenario::D: return {s, kBaselineReportingMedian * 0.50};
    case Scenario::E: return {s, kBaselineReportingMedian * 0.25};
  }
  throw std::invalid_argument("unknown scenario");
}

PriorSpec apply_scenario(const PriorSpec& priors, const ScenarioPreset& preset) {
  if (preset.id == Scenario::A) return priors;
  const double target = preset.reporting_median;
  if (!(target > 0.0 && target < 1.0)) {
    throw std::invalid_argument("scenario reporting median must lie in (0, 1)");
  }
  PriorSpec out = priors;
  out.alpha0.mean = logit(target);
  const double shift = std::log(kBaselineReportingMedian / target);
  for (auto& b : out.beta0) b.mean += shift;
  return out;
}

std::vector<double> prior_incidence_draws(const PriorSpec& priors, std::size_t n,
                                          std::uint64_t seed, int urban_index) {
  const auto& b0 = priors.beta0.at(static_cast<std::size_t>(urban_index));
  Engine rng = make_engine(seed, 0);
  std::vector<double> out(n);
  for (auto& v : out) {
    const double log_rate = normal(rng, b0.mean, b0.sd) + normal(rng, priors.epsilon.mean, priors.epsilon.sd) +
                            normal(rng, priors.eta.mean, priors.eta.sd);
    v = 1000.0 * std::exp(log_rate);
  }
  return out;
}

std::vector<double> prior_reporting_draws(const PriorSpec& priors, std::size_t n,
                                          std::uint64_t seed) {
  Engine rng = make_engine(seed, 1);
  std::vector<double> out(n);
  for (auto& v : out) {
    v = inv_logit(normal(rng, priors.alpha0.mean, priors.alpha0.sd) +
                  normal(rng, priors.gamma.mean, priors.gamma.sd) +
                  normal(rng, priors.delta.mean, priors.delta.sd));
  }
  return out;
}

double logit(double p) { return std::log(p / (1.0 - p)); }

double inv_logit(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_inv_logit(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

}  // namespace underreport
