#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace underreport {

/// Normal(mean, sd). The second parameter is always a standard deviation.
struct Normal {
  double mean = 0.0;
  double sd = 1.0;

  double log_density(double x) const;
  bool operator==(const Normal&) const = default;
};

/// Scales used when generating new records (fresh per-record noise) and new
/// schools (fresh school offsets) at prediction time. These differ from the
/// model prior scales by default; zero is allowed and means "no noise".
struct PredictiveScales {
  double delta = 0.5;
  double eta = 0.2;
  double gamma_new = 1.0;
  double epsilon_new = 0.5;

  bool operator==(const PredictiveScales&) const = default;
};

/// Every prior in the incidence and reporting blocks.
struct PriorSpec {
  // incidence block
  std::array<Normal, 3> beta0{{{-5.5, 0.5}, {-5.5, 0.5}, {-5.5, 0.5}}};
  Normal beta1{1.0, 0.1};
  Normal beta2{0.0, 4.0};
  Normal epsilon{0.0, 0.75};
  Normal eta{0.0, 0.1};
  // reporting block
  Normal alpha0{-1.25, 0.5};
  Normal alpha1{0.0, 2.0};
  Normal alpha2{0.0, 2.0};
  Normal alpha3{0.0, 4.0};
  Normal alpha4{0.0, 4.0};
  Normal gamma{0.0, 1.25};
  Normal delta{0.0, 0.5};

  PredictiveScales predictive{};

  /// Throws std::invalid_argument unless every model scale is strictly
  /// positive and every predictive scale is nonnegative.
  void validate() const;

  bool operator==(const PriorSpec&) const = default;
};

enum class Scenario { A, B, C, D, E };

Scenario parse_scenario(std::string_view id);
char scenario_id(Scenario s);

/// Sensitivity preset: the prior median reporting rate it targets.
struct ScenarioPreset {
  Scenario id = Scenario::A;
  double reporting_median = 0.22;
};

ScenarioPreset scenario_preset(Scenario s);

/// Shifts the alpha0 prior mean to logit(target) and every beta0 prior mean by
/// log(0.22 / target). Scenario A is the identity. Scales are untouched.
PriorSpec apply_scenario(const PriorSpec& priors, const ScenarioPreset& preset);

/// Prior draws of incidence per 1000 students, 1000 exp(beta0 + epsilon + eta),
/// i.e. with beta1 = 1 and beta2 = 0 so enrolment and gender cancel out.
std::vector<double> prior_incidence_draws(const PriorSpec& priors, std::size_t n,
                                          std::uint64_t seed, int urban_index = 0);
/// Prior draws of the reporting probability invlogit(alpha0 + gamma + delta) at
/// centred covariates.
std::vector<double> prior_reporting_draws(const PriorSpec& priors, std::size_t n,
                                          std::uint64_t seed);

double logit(double p);
double inv_logit(double x);
/// log(inv_logit(x)) without overflow.
double log_inv_logit(double x);

}  // namespace underreport
