#include "underreport/predictive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "parallel.hpp"
#include "underreport/diagnostics.hpp"
#include "underreport/fit.hpp"
#include "underreport/model.hpp"

namespace underreport {

HeldoutSplit split_heldout(const Dataset& data, double fraction, std::uint64_t seed,
                           bool allow_new_schools) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("heldout fraction must lie in (0, 1)");
  }
  const auto n = data.size();
  const auto target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (target == 0 || target >= n) {
    throw std::invalid_argument(
        fmt::format("heldout fraction {} leaves an empty split for {} records", fraction, n));
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Engine rng = make_engine(seed, 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::size_t> remaining(data.n_schools(), 0);
  for (const auto& c : data.covariates()) ++remaining[c.school];
  std::vector<bool> held(n, false);
  std::size_t n_held = 0;
  for (auto r : order) {
    if (n_held == target) break;
    const auto school = data.covariate(r).school;
    if (!allow_new_schools && remaining[school] < 2) continue;
    --remaining[school];
    held[r] = true;
    ++n_held;
  }
  if (n_held == 0) {
    throw std::invalid_argument("no record can be held out without removing a school entirely");
  }

  HeldoutSplit split;
  split.fraction = fraction;
  split.seed = seed;
  for (std::size_t r = 0; r < n; ++r) (held[r] ? split.heldout_rows : split.train_rows).push_back(r);
  std::vector<SchoolYearRecord> train_records;
  for (auto r : split.train_rows) train_records.push_back(data.record(r));
  split.train = Dataset::from_records(std::move(train_records));
  std::vector<SchoolYearRecord> heldout_records;
  for (auto r : split.heldout_rows) heldout_records.push_back(data.record(r));
  split.heldout = Dataset::from_records(std::move(heldout_records), split.train.pell_median());
  return split;
}

PredictiveContext::PredictiveContext(const Dataset& train, Dataset heldout, PriorSpec priors,
                                     PoolingMode mode)
    : heldout_(std::move(heldout)),
      priors_(std::move(priors)),
      layout_(mode, train.n_schools(), train.size()) {
  if (heldout_.empty()) throw DataError("predictive checks need at least one held-out record");
  priors_.validate();
  n_heldout_schools_ = heldout_.n_schools();
  for (std::size_t r = 0; r < heldout_.size(); ++r) {
    training_school_.push_back(train.school_index(heldout_.record(r).school_id));
    heldout_school_.push_back(heldout_.covariate(r).school);
  }
}

std::size_t PredictiveContext::new_school_count() const {
  std::vector<bool> seen(n_heldout_schools_, false);
  std::size_t count = 0;
  for (std::size_t r = 0; r < training_school_.size(); ++r) {
    if (!training_school_[r] && !seen[heldout_school_[r]]) {
      seen[heldout_school_[r]] = true;
      ++count;
    }
  }
  return count;
}

void PredictiveContext::draw_predictors(std::span<const double> theta, Engine& rng,
                                        std::span<double> log_lambda,
                                        std::span<double> logit_p) const {
  if (theta.size() != layout_.dim()) {
    throw std::invalid_argument("posterior draw does not match the training layout");
  }
  if (log_lambda.size() != heldout_.size() || logit_p.size() != heldout_.size()) {
    throw std::invalid_argument("predictor buffers do not match the held-out records");
  }
  const auto& scales = priors_.predictive;
  // Unseen schools: offsets (or whole coefficient blocks) drawn on first use.
  std::vector<bool> drawn(n_heldout_schools_, false);
  std::vector<Effects> new_effects(n_heldout_schools_);
  std::vector<LinearCoefficients> new_coefs(n_heldout_schools_);

  for (std::size_t r = 0; r < heldout_.size(); ++r) {
    Covariates cov = heldout_.covariate(r);
    LinearCoefficients coefs;
    Effects effects;
    if (const auto school = training_school_[r]) {
      cov.school = *school;
      coefs = coefficients_for(layout_, theta, cov);
      if (layout_.has_school_offsets()) {
        effects.epsilon = theta[layout_.epsilon(*school)];
        effects.gamma = theta[layout_.gamma(*school)];
      }
    } else {
      const auto h = heldout_school_[r];
      if (!drawn[h]) {
        drawn[h] = true;
        if (layout_.mode() == PoolingMode::NoPooling) {
          auto prior = [&](SchoolCoef which) {
            const auto n = school_coefficient_prior(priors_, which, cov.urban_index);
            return normal(rng, n.mean, n.sd);
          };
          new_coefs[h].beta0 = prior(SchoolCoef::Beta0);
          new_coefs[h].beta1 = prior(SchoolCoef::Beta1);
          new_coefs[h].beta2 = prior(SchoolCoef::Beta2);
          new_coefs[h].alpha[0] = prior(SchoolCoef::Alpha0);
          new_coefs[h].alpha[3] = prior(SchoolCoef::Alpha3);
          new_coefs[h].alpha[4] = prior(SchoolCoef::Alpha4);
        } else if (layout_.has_school_offsets()) {
          new_effects[h].gamma = normal(rng, 0.0, scales.gamma_new);
          new_effects[h].epsilon = normal(rng, 0.0, scales.epsilon_new);
        }
      }
      coefs = layout_.mode() == PoolingMode::NoPooling ? new_coefs[h]
                                                       : coefficients_for(layout_, theta, cov);
      effects = new_effects[h];
    }
    effects.delta = normal(rng, 0.0, scales.delta);
    effects.eta = normal(rng, 0.0, scales.eta);
    log_lambda[r] = rate_predictor(coefs, cov, effects);
    logit_p[r] = report_predictor(coefs, cov, effects);
  }
}

std::vector<std::int64_t> predictive_sample(std::span<const double> draw,
                                            const PredictiveContext& context, Engine& rng) {
  const auto n = context.heldout().size();
  std::vector<double> log_lambda(n);
  std::vector<double> logit_p(n);
  context.draw_predictors(draw, rng, log_lambda, logit_p);
  std::vector<std::int64_t> x(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto z = poisson(rng, std::exp(log_lambda[r]));
    x[r] = binomial(rng, z, inv_logit(logit_p[r]));
  }
  return x;
}

PpcValues ppc_statistics(std::span<const std::int64_t> counts, const Dataset& records) {
  if (counts.size() != records.size() || counts.empty()) {
    throw std::invalid_argument("ppc_statistics: counts do not match the records");
  }
  PpcValues v;
  std::vector<std::vector<double>> by_school(records.n_schools());
  for (std::size_t r = 0; r < counts.size(); ++r) {
    v.prop_zero += counts[r] == 0 ? 1.0 : 0.0;
    v.prop_leq1 += counts[r] <= 1 ? 1.0 : 0.0;
    v.total_reports += static_cast<double>(counts[r]);
    by_school[records.covariate(r).school].push_back(static_cast<double>(counts[r]));
  }
  const auto n = static_cast<double>(counts.size());
  v.prop_zero /= n;
  v.prop_leq1 /= n;
  for (const auto& xs : by_school) {
    if (xs.size() >= 2) v.within_school_variance += variance(xs);
  }
  return v;
}

PpcReport ppc_run(const SampleBatch& batch, const PredictiveContext& context,
                  std::size_t n_datasets, std::uint64_t seed) {
  check_batch_layout(batch, context.layout());
  if (n_datasets == 0) throw std::invalid_argument("ppc_run needs at least one dataset");
  if (batch.n_draws() == 0) throw std::invalid_argument("ppc_run needs posterior draws");
  const auto& heldout = context.heldout();

  std::vector<PpcValues> reps(n_datasets);
  detail::parallel_for(n_datasets, [&](std::size_t d) {
    Engine rng = make_engine(seed, d);
    std::uniform_int_distribution<std::size_t> pick(0, batch.n_draws() - 1);
    const auto s = pick(rng);
    const auto x = predictive_sample(batch.draw(s), context, rng);
    reps[d] = ppc_statistics(x, heldout);
  });

  std::vector<std::int64_t> observed;
  for (const auto& rec : heldout.records()) observed.push_back(rec.reported);
  const auto obs = ppc_statistics(observed, heldout);

  PpcReport report;
  report.n_datasets = n_datasets;
  report.n_heldout = heldout.size();
  auto add = [&](const char* name, double PpcValues::*field) {
    PpcStatistic stat;
    stat.name = name;
    stat.observed = obs.*field;
    stat.replicates.reserve(n_datasets);
    std::size_t le = 0;
    std::size_t ge = 0;
    for (const auto& v : reps) {
      const double t = v.*field;
      stat.replicates.push_back(t);
      le += t <= stat.observed;
      ge += t >= stat.observed;
    }
    static constexpr double kQ[] = {0.025, 0.975};
    const auto q = quantiles(stat.replicates, kQ);
    stat.q025 = q[0];
    stat.q975 = q[1];
    const auto nd = static_cast<double>(n_datasets);
    stat.tail_probability =
        std::min(1.0, 2.0 * std::min(static_cast<double>(le) / nd, static_cast<double>(ge) / nd));
    report.statistics.push_back(std::move(stat));
  };
  add("prop_zero", &PpcValues::prop_zero);
  add("prop_leq1", &PpcValues::prop_leq1);
  add("total_reports", &PpcValues::total_reports);
  add("within_school_variance", &PpcValues::within_school_variance);
  return report;
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double top = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - top);
  return top + std::log(acc);
}

std::vector<double> binomial_pmf(std::int64_t n, double p) {
  if (n < 0) throw std::domain_error("binomial_pmf: negative trials");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("binomial_pmf: p outside [0, 1]");
  std::vector<double> pmf(static_cast<std::size_t>(n) + 1, 0.0);
  if (p == 0.0) {
    pmf.front() = 1.0;
    return pmf;
  }
  if (p == 1.0) {
    pmf.back() = 1.0;
    return pmf;
  }
  const auto nd = static_cast<double>(n);
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double lgn = std::lgamma(nd + 1.0);
  for (std::int64_t k = 0; k <= n; ++k) {
    const auto kd = static_cast<double>(k);
    pmf[static_cast<std::size_t>(k)] = std::exp(lgn - std::lgamma(kd + 1.0) -
                                                std::lgamma(nd - kd + 1.0) + kd * lp +
                                                (nd - kd) * lq);
  }
  return pmf;
}

ConstantZResult constant_z_predictive(const std::string& school_id, int base_year,
                                      const SampleBatch& batch, const AugmentedDraws& augmented,
                                      const Dataset& data, const PriorSpec& priors,
                                      PoolingMode mode, std::uint64_t seed) {
  const ParameterLayout layout(mode, data.n_schools(), data.size());
  check_batch_layout(batch, layout);
  if (augmented.n_draws != batch.n_draws() || augmented.n_records != data.size()) {
    throw std::invalid_argument("augmented draws do not match the posterior batch");
  }
  const auto r = data.find_record(school_id, base_year);
  if (!r) {
    throw std::invalid_argument(
        fmt::format("no record for school {} in year {}", school_id, base_year));
  }
  const auto& cov = data.covariate(*r);

  ConstantZResult out;
  out.school_id = school_id;
  out.year = base_year;
  out.observed = data.record(*r).reported;
  Engine rng = make_engine(seed, 0);
  for (std::size_t s = 0; s < batch.n_draws(); ++s) {
    const auto theta = batch.draw(s);
    Effects effects;
    if (layout.has_school_offsets()) effects.gamma = theta[layout.gamma(cov.school)];
    effects.delta = normal(rng, 0.0, priors.predictive.delta);
    const double p_new = inv_logit(report_predictor(coefficients_for(layout, theta, cov), cov, effects));
    const auto z = augmented.z[augmented.index(s, *r)];
    const auto pmf = binomial_pmf(z, p_new);
    if (pmf.size() > out.pmf.size()) out.pmf.resize(pmf.size(), 0.0);
    for (std::size_t k = 0; k < pmf.size(); ++k) out.pmf[k] += pmf[k];
  }
  const auto nd = static_cast<double>(batch.n_draws());
  for (auto& v : out.pmf) v /= nd;
  for (std::size_t k = 0; k < out.pmf.size(); ++k) {
    const auto kk = static_cast<std::int64_t>(k);
    if (kk > out.observed) out.prob_increase += out.pmf[k];
    if (kk >= 2 * out.observed) out.prob_double += out.pmf[k];
  }
  return out;
}

HeldoutLikelihood heldout_log_likelihood(const SampleBatch& batch,
                                         const PredictiveContext& context, std::uint64_t seed,
                                         int inner_draws) {
  check_batch_layout(batch, context.layout());
  if (inner_draws < 1) throw std::invalid_argument("inner_draws must be >= 1");
  if (batch.n_draws() == 0) throw std::invalid_argument("heldout_log_likelihood needs draws");
  const auto& heldout = context.heldout();
  const auto n = heldout.size();
  const auto k_inner = static_cast<std::size_t>(inner_draws);

  HeldoutLikelihood out;
  out.per_draw.assign(batch.n_draws(), 0.0);
  detail::parallel_for(batch.n_draws(), [&](std::size_t s) {
    Engine rng = make_engine(seed, s);
    std::vector<double> log_lambda(n);
    std::vector<double> logit_p(n);
    std::vector<double> terms(n * k_inner);  // record-major
    for (std::size_t k = 0; k < k_inner; ++k) {
      context.draw_predictors(batch.draw(s), rng, log_lambda, logit_p);
      for (std::size_t r = 0; r < n; ++r) {
        terms[r * k_inner + k] =
            marginal_log_pmf_from_predictors(heldout.record(r).reported, log_lambda[r], logit_p[r]);
      }
    }
    const double log_k = std::log(static_cast<double>(k_inner));
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      total += log_sum_exp(std::span<const double>(terms.data() + r * k_inner, k_inner)) - log_k;
    }
    out.per_draw[s] = total;
  });

  const auto nd = static_cast<double>(batch.n_draws());
  out.log_likelihood = log_sum_exp(out.per_draw) - std::log(nd);
  // Delta method on log of the mean of w_s = exp(l_s - max).
  const double top = *std::max_element(out.per_draw.begin(), out.per_draw.end());
  std::vector<double> w(out.per_draw.size());
  for (std::size_t s = 0; s < w.size(); ++s) w[s] = std::exp(out.per_draw[s] - top);
  const double w_mean = mean(w);
  out.mc_standard_error = w.size() > 1 ? std::sqrt(variance(w) / nd) / w_mean : 0.0;
  return out;
}

}  // namespace underreport
