#include "underreport/inference.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include <fmt/format.h>

#include "parallel.hpp"
#include "underreport/diagnostics.hpp"
#include "underreport/fit.hpp"
#include "underreport/model.hpp"
#include "underreport/priors.hpp"

namespace underreport {

std::int64_t sample_unreported(std::int64_t /*x*/, double lambda, double p, Engine& rng) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::domain_error("sample_unreported: lambda must be finite and > 0");
  }
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("sample_unreported: p outside [0, 1]");
  return poisson(rng, lambda * (1.0 - p));
}

AugmentedDraw AugmentedDraws::at(std::size_t draw, std::size_t record,
                                 std::int64_t reported) const {
  const auto i = index(draw, record);
  return {lambda.at(i), p.at(i), z.at(i) - reported, z.at(i)};
}

std::vector<double> AugmentedDraws::z_of(std::size_t record) const {
  std::vector<double> out(n_draws);
  for (std::size_t s = 0; s < n_draws; ++s) out[s] = static_cast<double>(z[index(s, record)]);
  return out;
}

AugmentedDraws augment_batch(const SampleBatch& batch, const Dataset& data, PoolingMode mode,
                             std::uint64_t seed) {
  const ParameterLayout layout(mode, data.n_schools(), data.size());
  check_batch_layout(batch, layout);
  AugmentedDraws out;
  out.n_draws = batch.n_draws();
  out.n_records = data.size();
  const auto total = out.n_draws * out.n_records;
  out.lambda.resize(total);
  out.p.resize(total);
  out.z.resize(total);
  const auto& covs = data.covariates();
  detail::parallel_for(out.n_draws, [&](std::size_t s) {
    Engine rng = make_engine(seed, s);
    const auto theta = batch.draw(s);
    for (std::size_t r = 0; r < out.n_records; ++r) {
      const auto i = out.index(s, r);
      const auto x = data.records()[r].reported;
      out.lambda[i] = std::exp(log_lambda(layout, theta, covs[r], r));
      out.p[i] = inv_logit(logit_p(layout, theta, covs[r], r));
      out.z[i] = x + sample_unreported(x, out.lambda[i], out.p[i], rng);
    }
  });
  return out;
}

std::vector<CoefficientRow> coefficient_summary(const SampleBatch& batch) {
  static const char* kOrder[] = {"beta1",  "beta2",  "beta0_1", "beta0_2", "beta0_3",
                                 "alpha0", "alpha1", "alpha2",  "alpha3",  "alpha4"};
  if (batch.n_chains < 2) throw std::invalid_argument("coefficient_summary needs >= 2 chains");
  std::vector<CoefficientRow> rows;
  for (const char* name : kOrder) {
    const auto k = batch.find(name);
    if (!k) continue;
    const auto col = batch.column(*k);
    static constexpr double kQ[] = {0.25, 0.5, 0.75};
    const auto q = quantiles(col, kQ);
    rows.push_back({name, mean(col), q[0], q[1], q[2], split_rhat(batch.chains_of(*k))});
  }
  return rows;
}

double percapita_scaling(double beta1, double size_ratio) {
  if (!(size_ratio > 0.0)) throw std::domain_error("percapita_scaling: size_ratio must be > 0");
  return std::pow(size_ratio, 1.0 - beta1);
}

QuantileSummary summarize_quantiles(std::vector<double> values) {
  static constexpr double kQ[] = {0.025, 0.25, 0.5, 0.75, 0.975};
  const auto q = quantiles(std::move(values), kQ);
  return {q[0], q[1], q[2], q[3], q[4]};
}

YearlyResult yearly_aggregates(const AugmentedDraws& aug, const Dataset& data,
                               std::span<const int> years) {
  if (aug.n_records != data.size()) {
    throw std::invalid_argument("yearly_aggregates: augmented draws do not match the data");
  }
  std::map<int, std::vector<std::size_t>> by_year;
  for (std::size_t r = 0; r < data.size(); ++r) by_year[data.record(r).year].push_back(r);

  YearlyResult result;
  std::vector<int> wanted(years.begin(), years.end());
  if (wanted.empty()) {
    for (const auto& [y, _] : by_year) wanted.push_back(y);
  }
  for (int year : wanted) {
    auto it = by_year.find(year);
    if (it == by_year.end()) {
      result.notices.push_back(fmt::format("year {} has no records; skipped", year));
      continue;
    }
    YearlyAggregate agg;
    agg.year = year;
    agg.n_records = it->second.size();
    for (auto r : it->second) {
      agg.reported += data.record(r).reported;
      agg.students += data.record(r).students;
    }
    std::size_t undefined = 0;
    for (std::size_t s = 0; s < aug.n_draws; ++s) {
      std::int64_t z_total = 0;
      for (auto r : it->second) z_total += aug.z[aug.index(s, r)];
      agg.incidence_per_1000.push_back(1000.0 * static_cast<double>(z_total) /
                                       static_cast<double>(agg.students));
      if (z_total > 0) {
        agg.reporting_rate.push_back(static_cast<double>(agg.reported) /
                                     static_cast<double>(z_total));
      } else {
        ++undefined;
      }
    }
    if (undefined > 0) {
      result.notices.push_back(fmt::format(
          "year {}: {} draws with zero total events excluded from the reporting rate", year,
          undefined));
    }
    if (!agg.incidence_per_1000.empty()) agg.incidence = summarize_quantiles(agg.incidence_per_1000);
    if (!agg.reporting_rate.empty()) agg.reporting = summarize_quantiles(agg.reporting_rate);
    result.years.push_back(std::move(agg));
  }
  return result;
}

std::vector<RecordSummary> record_summaries(const AugmentedDraws& aug, const Dataset& data) {
  if (aug.n_records != data.size()) {
    throw std::invalid_argument("record_summaries: augmented draws do not match the data");
  }
  std::vector<RecordSummary> out;
  out.reserve(data.size());
  std::vector<double> incidence(aug.n_draws);
  std::vector<double> lambda(aug.n_draws);
  std::vector<double> p(aug.n_draws);
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto& rec = data.record(r);
    double z_sum = 0.0;
    for (std::size_t s = 0; s < aug.n_draws; ++s) {
      const auto i = aug.index(s, r);
      z_sum += static_cast<double>(aug.z[i]);
      incidence[s] = 1000.0 * static_cast<double>(aug.z[i]) / static_cast<double>(rec.students);
      lambda[s] = aug.lambda[i];
      p[s] = aug.p[i];
    }
    RecordSummary row;
    row.school_id = rec.school_id;
    row.year = rec.year;
    row.reported = rec.reported;
    row.z_mean = z_sum / static_cast<double>(aug.n_draws);
    row.incidence_median = quantile(incidence, 0.5);
    row.lambda_median = quantile(lambda, 0.5);
    row.p_median = quantile(p, 0.5);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace underreport
