#pragma once

#include <span>
#include <vector>

namespace underreport {

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7). Takes its input by value because it sorts.
double quantile(std::vector<double> values, double q);
std::vector<double> quantiles(std::vector<double> values, std::span<const double> qs);

double mean(std::span<const double> values);
/// Sample variance with n - 1 denominator; 0 for fewer than two values.
double variance(std::span<const double> values);

/// Split potential scale reduction factor. Each chain is cut into two halves
/// (the middle draw is dropped for odd lengths). Requires >= 2 chains of >= 4
/// draws each. Returns +infinity when the within-chain variance is zero.
double split_rhat(const std::vector<std::vector<double>>& chains);

/// Effective sample size of one sequence using Geyer's initial positive
/// sequence truncation (with the monotone adjustment). Returns 0 for a
/// constant sequence. Requires at least 4 draws.
double ess(std::span<const double> draws);

/// Multi-chain effective sample size: autocorrelations are pooled across chains
/// against the between+within variance estimate before the same truncation.
double ess(const std::vector<std::vector<double>>& chains);

}  // namespace underreport
