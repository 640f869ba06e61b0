#include "underreport/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

namespace underreport {

namespace {

std::string where(std::size_t row) {
  return row == 0 ? std::string{} : fmt::format("row {}: ", row);
}

}  // namespace

void validate_record(const SchoolYearRecord& r, std::size_t row) {
  if (r.school_id.empty()) throw DataError(where(row) + "empty school_id", row);
  if (r.reported < 0) throw DataError(where(row) + "reported must be >= 0", row);
  if (r.urbanization < 1 || r.urbanization > 3) {
    throw DataError(where(row) + "urbanization must be 1, 2 or 3", row);
  }
  if (r.students < 1) throw DataError(where(row) + "students must be >= 1", row);
  if (!(r.frac_women >= 0.0 && r.frac_women <= 1.0)) {
    throw DataError(where(row) + "frac_women outside [0, 1]", row);
  }
  if (!(r.pell_frac >= 0.0 && r.pell_frac <= 1.0)) {
    throw DataError(where(row) + "pell_frac outside [0, 1]", row);
  }
}

Covariates derive_covariates(const SchoolYearRecord& r, std::size_t school,
                             double pell_median) {
  Covariates c;
  c.school = school;
  c.urban_index = r.urbanization - 1;
  c.log_students = std::log(static_cast<double>(r.students));
  const double centered = r.frac_women - 0.5;
  c.women_sq = centered * centered;
  c.assoc = r.assoc_only ? 1.0 : 0.0;
  c.religious = r.religious ? 1.0 : 0.0;
  c.women_centered = centered;
  c.pell_centered = r.pell_frac - pell_median;
  return c;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty set");
  const auto n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

Dataset Dataset::from_records(std::vector<SchoolYearRecord> records,
                              std::optional<double> pell_median) {
  if (records.empty()) throw DataError("no records");
  Dataset d;
  std::set<std::pair<std::string, int>> seen;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    validate_record(rec, r + 1);
    if (!seen.emplace(rec.school_id, rec.year).second) {
      throw DataError(fmt::format("record {}: duplicate (school_id, year) = ({}, {})",
                                  r + 1, rec.school_id, rec.year),
                      r + 1);
    }
    if (d.school_lookup_.emplace(rec.school_id, d.school_ids_.size()).second) {
      d.school_ids_.push_back(rec.school_id);
    }
  }
  if (pell_median) {
    d.pell_median_ = *pell_median;
  } else {
    std::vector<double> pell;
    pell.reserve(records.size());
    for (const auto& rec : records) pell.push_back(rec.pell_frac);
    d.pell_median_ = median(std::move(pell));
  }
  d.covariates_.reserve(records.size());
  for (const auto& rec : records) {
    d.covariates_.push_back(
        derive_covariates(rec, d.school_lookup_.at(rec.school_id), d.pell_median_));
  }
  d.records_ = std::move(records);
  return d;
}

std::optional<std::size_t> Dataset::school_index(const std::string& school_id) const {
  auto it = school_lookup_.find(school_id);
  if (it == school_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Dataset::find_record(const std::string& school_id,
                                                int year) const {
  for (std::size_t r = 0; r < records_.size(); ++r) {
    if (records_[r].year == year && records_[r].school_id == school_id) return r;
  }
  return std::nullopt;
}

Dataset Dataset::subset(std::span<const std::size_t> rows,
                        std::optional<double> pell_median) const {
  std::vector<SchoolYearRecord> picked;
  picked.reserve(rows.size());
  for (auto r : rows) picked.push_back(records_.at(r));
  return from_records(std::move(picked), pell_median);
}

std::vector<int> Dataset::years() const {
  std::set<int> ys;
  for (const auto& r : records_) ys.insert(r.year);
  return {ys.begin(), ys.end()};
}

}  // namespace underreport
