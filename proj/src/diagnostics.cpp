#include "underreport/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace underreport {

namespace {

// Biased (1/n) autocovariance at `lag` around a precomputed mean.
double autocovariance(std::span<const double> x, double mu, std::size_t lag) {
  const auto n = x.size();
  double acc = 0.0;
  for (std::size_t t = 0; t + lag < n; ++t) acc += (x[t] - mu) * (x[t + lag] - mu);
  return acc / static_cast<double>(n);
}

// Geyer truncation over an autocorrelation function produced lazily by `rho`.
template <typename Rho>
double integrated_time(std::size_t n, Rho&& rho) {
  double prev_pair = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    const double r0 = k == 0 ? 1.0 : rho(2 * k);
    const double r1 = rho(2 * k + 1);
    double pair = r0 + r1;
    if (!(pair > 0.0)) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    sum += pair;
  }
  return std::max(-1.0 + 2.0 * sum, 1.0 / std::log10(static_cast<double>(n)));
}

}  // namespace

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<double> quantiles(std::vector<double> values, std::span<const double> qs) {
  if (values.empty()) throw std::invalid_argument("quantile of empty set");
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  out.reserve(qs.size());
  for (double q : qs) {
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level outside [0, 1]");
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    out.push_back(values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]));
  }
  return out;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean of empty set");
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double variance(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mu = mean(values);
  double acc = 0.0;
  for (double v : values) acc += (v - mu) * (v - mu);
  return acc / static_cast<double>(values.size() - 1);
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) throw std::invalid_argument("split_rhat needs at least 2 chains");
  std::size_t n = std::numeric_limits<std::size_t>::max();
  for (const auto& c : chains) n = std::min(n, c.size());
  if (n < 4) throw std::invalid_argument("split_rhat needs at least 4 draws per chain");
  const std::size_t half = n / 2;

  std::vector<double> means;
  std::vector<double> vars;
  for (const auto& c : chains) {
    std::span<const double> all(c.data(), n);
    for (auto part : {all.first(half), all.last(half)}) {
      means.push_back(mean(part));
      vars.push_back(variance(part));
    }
  }
  const double w = mean(vars);
  if (!(w > 0.0)) return std::numeric_limits<double>::infinity();
  const auto m = static_cast<double>(half);
  const double b = m * variance(means);
  const double var_plus = (m - 1.0) / m * w + b / m;
  return std::sqrt(var_plus / w);
}

double ess(std::span<const double> draws) {
  const auto n = draws.size();
  if (n < 4) throw std::invalid_argument("ess needs at least 4 draws");
  const double mu = mean(draws);
  const double c0 = autocovariance(draws, mu, 0);
  if (!(c0 > 0.0)) return 0.0;
  const double tau = integrated_time(n, [&](std::size_t lag) {
    return autocovariance(draws, mu, lag) / c0;
  });
  return static_cast<double>(n) / tau;
}

double ess(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) throw std::invalid_argument("ess needs at least one chain");
  if (chains.size() == 1) return ess(chains.front());
  std::size_t n = std::numeric_limits<std::size_t>::max();
  for (const auto& c : chains) n = std::min(n, c.size());
  if (n < 4) throw std::invalid_argument("ess needs at least 4 draws per chain");

  const auto m = static_cast<double>(chains.size());
  const auto nd = static_cast<double>(n);
  std::vector<double> means;
  std::vector<double> vars;
  for (const auto& c : chains) {
    std::span<const double> s(c.data(), n);
    means.push_back(mean(s));
    vars.push_back(variance(s));
  }
  const double w = mean(vars);
  if (!(w > 0.0)) return 0.0;
  const double var_plus = (nd - 1.0) / nd * w + variance(means);
  const double tau = integrated_time(n, [&](std::size_t lag) {
    double acov = 0.0;
    for (std::size_t j = 0; j < chains.size(); ++j) {
      acov += autocovariance(std::span<const double>(chains[j].data(), n), means[j], lag);
    }
    acov /= m;
    return 1.0 - (w - acov) / var_plus;
  });
  return m * nd / tau;
}

}  // namespace underreport
