#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "underreport/dataset.hpp"
#include "underreport/hmc.hpp"
#include "underreport/layout.hpp"
#include "underreport/rng.hpp"

namespace underreport {

/// Number of unreported events for one record given (lambda, p). Conditional
/// on lambda and p this is Poisson(lambda (1 - p)) whatever the observed count
/// x; x is accepted only so call sites read like the augmentation step.
std::int64_t sample_unreported(std::int64_t x, double lambda, double p, Engine& rng);

struct AugmentedDraw {
  double lambda = 0.0;
  double p = 0.0;
  std::int64_t unreported = 0;
  std::int64_t total = 0;  // z = unreported + reported
};

/// Per-(draw, record) latent counts recovered from a posterior batch. Row-major
/// by draw: index = draw * n_records + record.
struct AugmentedDraws {
  std::size_t n_draws = 0;
  std::size_t n_records = 0;
  std::vector<double> lambda;
  std::vector<double> p;
  std::vector<std::int64_t> z;

  std::size_t index(std::size_t draw, std::size_t record) const {
    return draw * n_records + record;
  }
  AugmentedDraw at(std::size_t draw, std::size_t record, std::int64_t reported) const;
  /// z for one record across all draws.
  std::vector<double> z_of(std::size_t record) const;
};

/// For every posterior draw and record: lambda and p from the draw, then
/// z = x + u with u ~ Poisson(lambda (1 - p)). Draw s uses the engine for
/// (seed, s), so the result does not depend on thread scheduling.
AugmentedDraws augment_batch(const SampleBatch& batch, const Dataset& data, PoolingMode mode,
                             std::uint64_t seed);

struct CoefficientRow {
  std::string name;
  double mean = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double rhat = 0.0;
};

/// Posterior means, quartiles and split R-hat of the global coefficients in
/// the order beta1, beta2, beta0_1..3, alpha0..4 (those present in the batch).
std::vector<CoefficientRow> coefficient_summary(const SampleBatch& batch);

/// Expected per-capita multiplier of a school relative to one `size_ratio`
/// times larger when counts scale as population^beta1: size_ratio^(1 - beta1).
double percapita_scaling(double beta1, double size_ratio);

struct QuantileSummary {
  double q025 = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double q975 = 0.0;
};

QuantileSummary summarize_quantiles(std::vector<double> values);

struct YearlyAggregate {
  int year = 0;
  std::size_t n_records = 0;
  std::int64_t reported = 0;
  std::int64_t students = 0;
  std::vector<double> incidence_per_1000;  // one per draw: 1000 sum z / sum students
  std::vector<double> reporting_rate;      // one per draw: sum x / sum z
  QuantileSummary incidence;
  QuantileSummary reporting;
};

struct YearlyResult {
  std::vector<YearlyAggregate> years;
  std::vector<std::string> notices;
};

/// Per-year totals computed draw by draw. When `years` is empty every year in
/// the data is used; requested years without records are skipped with a notice.
YearlyResult yearly_aggregates(const AugmentedDraws& augmented, const Dataset& data,
                               std::span<const int> years = {});

/// Per-record posterior summaries (posterior medians of incidence and reporting).
struct RecordSummary {
  std::string school_id;
  int year = 0;
  std::int64_t reported = 0;
  double z_mean = 0.0;
  double incidence_median = 0.0;  // per 1000 students, from z
  double lambda_median = 0.0;
  double p_median = 0.0;
};

std::vector<RecordSummary> record_summaries(const AugmentedDraws& augmented,
                                            const Dataset& data);

}  // namespace underreport
