#include "underreport/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "underreport/fit.hpp"
#include "underreport/inference.hpp"
#include "underreport/model.hpp"

namespace underreport {

ReportingScheme parse_reporting_scheme(std::string_view name) {
  if (name == "independent") return ReportingScheme::Independent;
  if (name == "exchangeable") return ReportingScheme::Exchangeable;
  if (name == "pairwise") return ReportingScheme::Pairwise;
  throw std::invalid_argument(fmt::format(
      "unknown reporting scheme '{}' (expected independent, exchangeable or pairwise)", name));
}

std::string_view reporting_scheme_name(ReportingScheme scheme) {
  switch (scheme) {
    case ReportingScheme::Independent: return "independent";
    case ReportingScheme::Exchangeable: return "exchangeable";
    case ReportingScheme::Pairwise: return "pairwise";
  }
  return "independent";
}

void SimSpec::validate() const {
  if (n_schools == 0) throw std::invalid_argument("n_schools must be positive");
  if (n_years < 1) throw std::invalid_argument("n_years must be positive");
  if (!(students_min >= 1.0 && students_max >= students_min)) {
    throw std::invalid_argument("student population range must be positive and ordered");
  }
  if (!(students_jitter >= 0.0 && women_sd >= 0.0 && pell_sd >= 0.0 && pell_jitter >= 0.0)) {
    throw std::invalid_argument("covariate spreads must be nonnegative");
  }
  auto is_prob = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!is_prob(women_mean) || !is_prob(pell_mean) || !is_prob(single_gender_rate) ||
      !is_prob(assoc_rate) || !is_prob(religious_rate)) {
    throw std::invalid_argument("covariate rates must lie in [0, 1]");
  }
  double total = 0.0;
  for (double w : urbanization_probs) {
    if (!(w >= 0.0)) throw std::invalid_argument("urbanization probabilities must be >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("urbanization probabilities sum to zero");
  if (!is_prob(rho)) throw std::invalid_argument("rho must lie in [0, 1]");
  if (fixed_reporting && !is_prob(*fixed_reporting)) {
    throw std::invalid_argument("fixed reporting probability must lie in [0, 1]");
  }
  scales.validate();
}

namespace {

struct SchoolDraw {
  double log_students = 0.0;
  double frac_women = 0.5;
  double pell = 0.36;
  int urbanization = 1;
  bool assoc = false;
  bool religious = false;
  double epsilon = 0.0;
  double gamma = 0.0;
};

SchoolDraw draw_school(const SimSpec& spec, Engine& rng) {
  SchoolDraw s;
  std::uniform_real_distribution<double> log_pop(std::log(spec.students_min),
                                                 std::log(spec.students_max));
  s.log_students = log_pop(rng);
  if (bernoulli(rng, spec.single_gender_rate)) {
    s.frac_women = bernoulli(rng, 0.5) ? 1.0 : 0.0;
  } else {
    s.frac_women = std::clamp(normal(rng, spec.women_mean, spec.women_sd), 0.0, 1.0);
  }
  s.pell = std::clamp(normal(rng, spec.pell_mean, spec.pell_sd), 0.0, 1.0);
  std::discrete_distribution<int> urban(spec.urbanization_probs.begin(),
                                        spec.urbanization_probs.end());
  s.urbanization = urban(rng) + 1;
  s.assoc = bernoulli(rng, spec.assoc_rate);
  s.religious = bernoulli(rng, spec.religious_rate);
  s.epsilon = normal(rng, 0.0, spec.scales.epsilon.sd);
  s.gamma = normal(rng, 0.0, spec.scales.gamma.sd);
  return s;
}

}  // namespace

SimOutput simulate_full(const SimSpec& spec) {
  spec.validate();
  std::vector<SchoolYearRecord> records;
  std::vector<Effects> effects;
  records.reserve(spec.n_schools * static_cast<std::size_t>(spec.n_years));
  for (std::size_t i = 0; i < spec.n_schools; ++i) {
    Engine rng = make_engine(spec.seed, 1, i);
    const auto school = draw_school(spec, rng);
    for (int j = 0; j < spec.n_years; ++j) {
      SchoolYearRecord rec;
      rec.school_id = fmt::format("S{:03d}", i + 1);
      rec.year = spec.first_year + j;
      rec.urbanization = school.urbanization;
      const double log_students = school.log_students + normal(rng, 0.0, spec.students_jitter);
      rec.students = std::max<std::int64_t>(1, std::llround(std::exp(log_students)));
      rec.frac_women = school.frac_women;
      rec.pell_frac = std::clamp(school.pell + normal(rng, 0.0, spec.pell_jitter), 0.0, 1.0);
      rec.assoc_only = school.assoc;
      rec.religious = school.religious;
      records.push_back(std::move(rec));
      Effects e;
      e.epsilon = school.epsilon;
      e.gamma = school.gamma;
      e.eta = normal(rng, 0.0, spec.scales.eta.sd);
      e.delta = normal(rng, 0.0, spec.scales.delta.sd);
      effects.push_back(e);
    }
  }

  // Covariates need the Pell median of the whole population, so counts come second.
  const auto skeleton = Dataset::from_records(records);
  LinearCoefficients coefs;
  coefs.beta1 = spec.truth.beta1;
  coefs.beta2 = spec.truth.beta2;
  coefs.alpha = spec.truth.alpha;

  SimOutput out;
  const auto n = records.size();
  out.z_true.resize(n);
  out.p_true.resize(n);
  out.lambda_true.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    Engine rng = make_engine(spec.seed, 2, r);
    const auto& cov = skeleton.covariate(r);
    coefs.beta0 = spec.truth.beta0[static_cast<std::size_t>(cov.urban_index)];
    out.lambda_true[r] = std::exp(rate_predictor(coefs, cov, effects[r]));
    out.p_true[r] = spec.fixed_reporting ? *spec.fixed_reporting
                                         : inv_logit(report_predictor(coefs, cov, effects[r]));
    out.z_true[r] = poisson(rng, out.lambda_true[r]);
    records[r].reported = report_events(out.z_true[r], out.p_true[r], spec.scheme, spec.rho, rng);
  }
  out.data = Dataset::from_records(std::move(records));
  return out;
}

std::int64_t report_events(std::int64_t z, double p, ReportingScheme scheme, double rho,
                           Engine& rng) {
  switch (scheme) {
    case ReportingScheme::Independent: return binomial(rng, z, p);
    case ReportingScheme::Exchangeable: return correlated_bernoulli_sum(z, p, rho, rng);
    case ReportingScheme::Pairwise: return pairwise_report(z, p, rng);
  }
  throw std::invalid_argument("unknown reporting scheme");
}

std::int64_t correlated_bernoulli_sum(std::int64_t n, double p, double rho, Engine& rng) {
  if (n < 0) throw std::domain_error("correlated_bernoulli_sum: negative n");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("correlated_bernoulli_sum: p outside [0, 1]");
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw std::domain_error("correlated_bernoulli_sum: rho outside [0, 1]");
  }
  // The number of variables copying W is Binomial(n, sqrt(rho)); the rest are
  // independent Bernoulli(p).
  const auto copies = binomial(rng, n, std::sqrt(rho));
  const bool w = bernoulli(rng, p);
  return (w ? copies : 0) + binomial(rng, n - copies, p);
}

std::int64_t pairwise_report(std::int64_t z, double p, Engine& rng) {
  if (z < 0) throw std::domain_error("pairwise_report: negative count");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("pairwise_report: p outside [0, 1]");
  std::int64_t reported = 2 * binomial(rng, z / 2, p);
  if (z % 2 == 1 && bernoulli(rng, p)) ++reported;
  return reported;
}

ToyCounts toy_iid(double lambda0, double p0, std::size_t n, std::uint64_t seed) {
  if (!(lambda0 > 0.0)) throw std::domain_error("toy_iid: lambda0 must be > 0");
  if (!(p0 > 0.0 && p0 <= 1.0)) throw std::domain_error("toy_iid: p0 must lie in (0, 1]");
  Engine rng = make_engine(seed, 0);
  ToyCounts out;
  out.x.resize(n);
  out.z.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.z[i] = poisson(rng, lambda0);
    out.x[i] = binomial(rng, out.z[i], p0);
  }
  return out;
}

ToyCovariateOutput toy_covariate(const ToyCovariateSpec& spec) {
  Engine rng = make_engine(spec.seed, 0);
  ToyCovariateOutput out;
  out.v.resize(spec.n);
  out.w.resize(spec.n);
  out.x.resize(spec.n);
  out.z.resize(spec.n);
  out.lambda.resize(spec.n);
  out.p.resize(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    if (spec.covariates) {
      std::tie(out.v[i], out.w[i]) = spec.covariates(rng);
    } else {
      out.v[i] = standard_normal(rng);
      out.w[i] = standard_normal(rng);
    }
    out.lambda[i] = std::exp(spec.beta0 + spec.beta * out.v[i]);
    out.p[i] = inv_logit(spec.alpha0 + spec.alpha * out.w[i]);
    out.z[i] = poisson(rng, out.lambda[i]);
    out.x[i] = binomial(rng, out.z[i], out.p[i]);
  }
  return out;
}

LogDensityFn toy_iid_target(std::int64_t sum_x, std::size_t n, ToyIidPriors priors) {
  if (sum_x < 0) throw std::invalid_argument("toy_iid_target: negative count sum");
  const auto sx = static_cast<double>(sum_x);
  const auto nd = static_cast<double>(n);
  return [=](std::span<const double> q, std::span<double> grad) {
    const double log_lambda = q[0];
    const double m = q[1];
    const double p = inv_logit(m);
    const double mu = std::exp(log_lambda) * p;
    const double z = (log_lambda - priors.log_lambda_mean) / priors.log_lambda_sd;
    // Beta(a, b) on p seen through logit: p^a (1 - p)^b.
    const double lp = sx * (log_lambda + log_inv_logit(m)) - nd * mu - 0.5 * z * z +
                      priors.p_a * log_inv_logit(m) + priors.p_b * log_inv_logit(-m);
    grad[0] = sx - nd * mu - z / priors.log_lambda_sd;
    grad[1] = (sx - nd * mu) * (1.0 - p) + priors.p_a - (priors.p_a + priors.p_b) * p;
    return lp;
  };
}

double toy_iid_conditional_p_sd(double mu, const ToyIidPriors& priors) {
  if (!(mu > 0.0)) throw std::domain_error("toy_iid_conditional_p_sd: mu must be > 0");
  // Density of p given lambda p = mu is proportional to f_lambda(mu / p) f_p(p) / p.
  const int grid = 200000;
  double w_sum = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  std::vector<double> log_w(grid);
  double top = -INFINITY;
  for (int k = 0; k < grid; ++k) {
    const double p = (k + 0.5) / grid;
    const double lam = mu / p;
    const double z = (std::log(lam) - priors.log_lambda_mean) / priors.log_lambda_sd;
    log_w[k] = -0.5 * z * z - std::log(lam) + (priors.p_a - 1.0) * std::log(p) +
               (priors.p_b - 1.0) * std::log1p(-p) - std::log(p);
    top = std::max(top, log_w[k]);
  }
  for (int k = 0; k < grid; ++k) {
    const double p = (k + 0.5) / grid;
    const double w = std::exp(log_w[k] - top);
    w_sum += w;
    m1 += w * p;
    m2 += w * p * p;
  }
  m1 /= w_sum;
  m2 /= w_sum;
  return std::sqrt(std::max(0.0, m2 - m1 * m1));
}

LogDensityFn toy_covariate_target(const ToyCovariateOutput& data, ToyCovariatePriors priors) {
  if (data.v.size() != data.x.size() || data.w.size() != data.x.size()) {
    throw std::invalid_argument("toy_covariate_target: ragged data");
  }
  return [v = data.v, w = data.w, x = data.x, priors](std::span<const double> q,
                                                       std::span<double> grad) {
    const Normal* prior[] = {&priors.beta0, &priors.beta, &priors.alpha0, &priors.alpha};
    double lp = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      const double z = (q[k] - prior[k]->mean) / prior[k]->sd;
      lp -= 0.5 * z * z;
      grad[k] = -z / prior[k]->sd;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double L = q[0] + q[1] * v[i];
      const double M = q[2] + q[3] * w[i];
      const double s = inv_logit(M);
      const double mu = std::exp(L) * s;
      const auto xi = static_cast<double>(x[i]);
      lp += xi * (L + log_inv_logit(M)) - mu;
      const double dL = xi - mu;
      const double dM = dL * (1.0 - s);
      grad[0] += dL;
      grad[1] += dL * v[i];
      grad[2] += dM;
      grad[3] += dM * w[i];
    }
    return lp;
  };
}

Regression recovery_regression(std::span<const double> z_hat, std::span<const double> z_true) {
  if (z_hat.size() != z_true.size() || z_hat.size() < 2) {
    throw std::invalid_argument("recovery_regression needs two equal-length series of >= 2 values");
  }
  const auto n = static_cast<double>(z_hat.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < z_hat.size(); ++i) {
    mx += z_hat[i];
    my += z_true[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < z_hat.size(); ++i) {
    sxx += (z_hat[i] - mx) * (z_hat[i] - mx);
    sxy += (z_hat[i] - mx) * (z_true[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("recovery_regression: z_hat is constant");
  Regression r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  return r;
}

RecoveryStudy run_recovery_study(const SimSpec& spec, const PriorSpec& priors,
                                 const HmcConfig& config) {
  RecoveryStudy study;
  study.sim = simulate_full(spec);
  const auto batch = run_chains(study.sim.data, priors, PoolingMode::Partial, config);
  study.divergences = batch.total_divergences();
  const auto aug = augment_batch(batch, study.sim.data, PoolingMode::Partial,
                                 derive_seed(config.seed, 0xa06));
  study.z_hat.resize(study.sim.data.size());
  for (std::size_t r = 0; r < study.z_hat.size(); ++r) {
    const auto z = aug.z_of(r);
    double acc = 0.0;
    for (double v : z) acc += v;
    study.z_hat[r] = acc / static_cast<double>(z.size());
  }
  std::vector<double> truth(study.sim.z_true.begin(), study.sim.z_true.end());
  study.regression = recovery_regression(study.z_hat, truth);
  return study;
}

}  // namespace underreport
