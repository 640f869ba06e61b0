#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "underreport/dataset.hpp"
#include "underreport/hmc.hpp"
#include "underreport/inference.hpp"
#include "underreport/layout.hpp"
#include "underreport/priors.hpp"
#include "underreport/rng.hpp"

namespace underreport {

struct HeldoutSplit {
  Dataset train;
  Dataset heldout;
  std::vector<std::size_t> train_rows;    // positions in the source dataset
  std::vector<std::size_t> heldout_rows;
  double fraction = 0.2;
  std::uint64_t seed = 0;
};

/// Holds out round(fraction * n) records, sampled at the (school, year) level.
/// Unless `allow_new_schools` is set, a record is only held out if its school
/// keeps at least one training record. Both splits are centred on the median
/// Pell fraction of the training records.
HeldoutSplit split_heldout(const Dataset& data, double fraction, std::uint64_t seed,
                           bool allow_new_schools = false);

/// Links held-out records to the training fit: which training school (if any)
/// each belongs to, and how to draw its linear predictors for a posterior draw.
class PredictiveContext {
 public:
  PredictiveContext(const Dataset& train, Dataset heldout, PriorSpec priors, PoolingMode mode);

  const ParameterLayout& layout() const noexcept { return layout_; }
  const Dataset& heldout() const noexcept { return heldout_; }
  const PriorSpec& priors() const noexcept { return priors_; }
  std::optional<std::size_t> training_school(std::size_t heldout_record) const {
    return training_school_.at(heldout_record);
  }
  std::size_t new_school_count() const;

  /// One predictive replicate of both linear predictors for every held-out
  /// record: fresh per-record noise from the predictive scales, training
  /// schools reuse their offsets from `theta`, unseen schools get fresh
  /// offsets (drawn once per school per replicate).
  void draw_predictors(std::span<const double> theta, Engine& rng,
                       std::span<double> log_lambda, std::span<double> logit_p) const;

 private:
  Dataset heldout_;
  PriorSpec priors_;
  ParameterLayout layout_;
  std::vector<std::optional<std::size_t>> training_school_;
  std::vector<std::size_t> heldout_school_;  // dense heldout school index per record
  std::size_t n_heldout_schools_ = 0;
};

/// Predicted reported counts for every held-out record under one posterior
/// draw: z ~ Poisson(lambda), x ~ Binomial(z, p).
std::vector<std::int64_t> predictive_sample(std::span<const double> draw,
                                            const PredictiveContext& context, Engine& rng);

struct PpcStatistic {
  std::string name;
  double observed = 0.0;
  std::vector<double> replicates;
  double q025 = 0.0;
  double q975 = 0.0;
  /// 2 min(P(T_rep <= T_obs), P(T_rep >= T_obs)), capped at 1.
  double tail_probability = 1.0;

  bool covers() const { return q025 <= observed && observed <= q975; }
};

struct PpcReport {
  std::vector<PpcStatistic> statistics;  // prop_zero, prop_leq1, total_reports, within_school_variance
  std::size_t n_datasets = 0;
  std::size_t n_heldout = 0;
};

struct PpcValues {
  double prop_zero = 0.0;
  double prop_leq1 = 0.0;
  double total_reports = 0.0;
  double within_school_variance = 0.0;
};

/// The four check statistics for counts aligned with `records`. Within-school
/// variance sums the n-1 sample variance of each school with >= 2 records.
PpcValues ppc_statistics(std::span<const std::int64_t> counts, const Dataset& records);

/// Generates `n_datasets` predictive datasets (posterior draw chosen uniformly
/// with replacement per dataset) and compares the statistics against the
/// observed held-out counts.
PpcReport ppc_run(const SampleBatch& batch, const PredictiveContext& context,
                  std::size_t n_datasets, std::uint64_t seed);

struct ConstantZResult {
  std::string school_id;
  int year = 0;
  std::int64_t observed = 0;
  std::vector<double> pmf;  // pmf[k] = P(x_new = k)
  double prob_increase = 0.0;  // P(x_new > observed)
  double prob_double = 0.0;    // P(x_new >= 2 observed)
};

/// Future reported counts for one school when the true count stays at its
/// base-year posterior value: per draw, p_new = invlogit(alpha0 + <alpha, w> +
/// gamma + delta_new), x_new ~ Binomial(z, p_new). The binomial pmf is averaged
/// over draws rather than sampled. `augmented` must come from the same batch.
ConstantZResult constant_z_predictive(const std::string& school_id, int base_year,
                                      const SampleBatch& batch, const AugmentedDraws& augmented,
                                      const Dataset& data, const PriorSpec& priors,
                                      PoolingMode mode, std::uint64_t seed);

struct HeldoutLikelihood {
  double log_likelihood = 0.0;
  double mc_standard_error = 0.0;
  std::vector<double> per_draw;  // log p(x_heldout | theta_s)
};

/// log (1/S sum_s p(x_heldout | theta_s)). Fresh per-record noise is integrated
/// by `inner_draws` Monte Carlo replicates per posterior draw and record.
HeldoutLikelihood heldout_log_likelihood(const SampleBatch& batch,
                                         const PredictiveContext& context,
                                         std::uint64_t seed, int inner_draws = 8);

/// log(sum exp(v)) without overflow.
double log_sum_exp(std::span<const double> values);

/// Binomial(n, p) pmf over 0..n.
std::vector<double> binomial_pmf(std::int64_t n, double p);

}  // namespace underreport
