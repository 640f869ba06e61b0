#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "underreport/dataset.hpp"
#include "underreport/hmc.hpp"
#include "underreport/layout.hpp"

namespace testing_support {

using namespace underreport;

inline SchoolYearRecord record(std::string school, int year, std::int64_t reported,
                               std::int64_t students = 1000, int urbanization = 1,
                               double frac_women = 0.5, double pell = 0.36, bool assoc = false,
                               bool religious = false) {
  SchoolYearRecord r;
  r.school_id = std::move(school);
  r.year = year;
  r.reported = reported;
  r.students = students;
  r.urbanization = urbanization;
  r.frac_women = frac_women;
  r.pell_frac = pell;
  r.assoc_only = assoc;
  r.religious = religious;
  return r;
}

// A batch in which every draw equals `theta`.
inline SampleBatch constant_batch(const ParameterLayout& layout, const std::vector<double>& theta,
                                  std::size_t chains, std::size_t per_chain) {
  SampleBatch b;
  b.names = layout.names();
  b.dim = layout.dim();
  b.n_chains = chains;
  b.draws_per_chain = per_chain;
  for (std::size_t s = 0; s < chains * per_chain; ++s) {
    b.draws.insert(b.draws.end(), theta.begin(), theta.end());
  }
  b.accept_rate.assign(chains, 1.0);
  b.step_size.assign(chains, 0.1);
  b.divergences.assign(chains, 0);
  return b;
}

// Pearson chi-square p-value of integer samples against a pmf. Cells with
// expected count below 5 are pooled into their neighbour (the upper tail is
// pooled into the last cell).
template <typename Pmf>
double chi_square_pvalue(const std::vector<std::int64_t>& samples, Pmf pmf) {
  const auto n = static_cast<double>(samples.size());
  std::map<std::int64_t, double> counts;
  std::int64_t top = 0;
  for (auto v : samples) {
    counts[v] += 1.0;
    top = std::max(top, v);
  }
  std::vector<double> obs;
  std::vector<double> expd;
  double o_acc = 0.0;
  double e_acc = 0.0;
  double mass = 0.0;
  for (std::int64_t k = 0; k <= top; ++k) {
    const double p = pmf(k);
    mass += p;
    o_acc += counts.count(k) ? counts[k] : 0.0;
    e_acc += n * p;
    if (e_acc >= 5.0) {
      obs.push_back(o_acc);
      expd.push_back(e_acc);
      o_acc = e_acc = 0.0;
    }
  }
  // Remaining observations plus the whole unobserved tail.
  e_acc += n * std::max(0.0, 1.0 - mass);
  if (!obs.empty()) {
    obs.back() += o_acc;
    expd.back() += e_acc;
  }
  double stat = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    stat += (obs[i] - expd[i]) * (obs[i] - expd[i]) / expd[i];
  }
  const double dof = static_cast<double>(obs.size()) - 1.0;
  if (dof < 1.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), stat));
}

inline double poisson_pmf(std::int64_t k, double mean) {
  const auto kd = static_cast<double>(k);
  return std::exp(kd * std::log(mean) - mean - std::lgamma(kd + 1.0));
}

inline double binomial_pmf_at(std::int64_t k, std::int64_t n, double p) {
  if (k < 0 || k > n) return 0.0;
  const auto kd = static_cast<double>(k);
  const auto nd = static_cast<double>(n);
  if (p == 0.0) return k == 0 ? 1.0 : 0.0;
  if (p == 1.0) return k == n ? 1.0 : 0.0;
  return std::exp(std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) +
                  kd * std::log(p) + (nd - kd) * std::log1p(-p));
}

// log P(x) for the thinned count by direct summation over the latent total z
// >= x of Binom(x; z, p) Pois(z; lambda), in log space. Stops once the term
// ratio is below 1/2 and the current term is under 1e-17 of the running sum,
// which bounds the omitted tail by that same fraction.
inline double truncated_marginal_log_pmf(std::int64_t x, double lambda, double p) {
  const auto xd = static_cast<double>(x);
  const double q = 1.0 - p;
  double log_total = -INFINITY;
  for (std::int64_t z = x;; ++z) {
    const auto zd = static_cast<double>(z);
    double log_binom = std::lgamma(zd + 1.0) - std::lgamma(xd + 1.0) - std::lgamma(zd - xd + 1.0) +
                       xd * std::log(p);
    if (z > x) log_binom += (zd - xd) * std::log(q);
    const double log_term = log_binom + zd * std::log(lambda) - lambda - std::lgamma(zd + 1.0);
    const double hi = std::max(log_total, log_term);
    log_total = hi + std::log(std::exp(log_total - hi) + std::exp(log_term - hi));
    const double ratio = q * lambda / (zd + 1.0 - xd);
    if (ratio < 0.5 && log_term - log_total < std::log(1e-17)) break;
    if (q == 0.0) break;
  }
  return log_total;
}

}  // namespace testing_support
