#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace underreport {

/// Raised for invalid input data. Carries a 1-based row number when the
/// problem can be pinned to a specific input row (0 otherwise).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, std::size_t row = 0)
      : std::runtime_error(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// One observed school-year.
struct SchoolYearRecord {
  std::string school_id;
  int year = 0;
  std::int64_t reported = 0;
  int urbanization = 1;  // 1 = urban, 2 = suburban, 3 = rural
  std::int64_t students = 1;
  double frac_women = 0.5;
  double pell_frac = 0.0;
  bool assoc_only = false;
  bool religious = false;

  bool operator==(const SchoolYearRecord&) const = default;
};

/// Model-ready covariates for one record.
struct Covariates {
  std::size_t school = 0;    // dense school index
  int urban_index = 0;       // 0..2
  double log_students = 0;   // v2
  double women_sq = 0;       // v3 = (frac_women - 0.5)^2
  double assoc = 0;          // w1
  double religious = 0;      // w2
  double women_centered = 0; // w3 = frac_women - 0.5
  double pell_centered = 0;  // w4 = pell_frac - pell_median
};

/// Throws DataError if the record violates a field invariant.
void validate_record(const SchoolYearRecord& record, std::size_t row = 0);

Covariates derive_covariates(const SchoolYearRecord& record, std::size_t school,
                             double pell_median);

double median(std::vector<double> values);

/// Immutable collection of records with a dense school index and a frozen
/// Pell-fraction centering constant.
class Dataset {
 public:
  Dataset() = default;

  /// Validates every record and the (school_id, year) uniqueness constraint.
  /// When `pell_median` is absent it is computed from `records`.
  static Dataset from_records(std::vector<SchoolYearRecord> records,
                              std::optional<double> pell_median = std::nullopt);

  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  std::size_t n_schools() const noexcept { return school_ids_.size(); }
  double pell_median() const noexcept { return pell_median_; }

  const std::vector<SchoolYearRecord>& records() const noexcept { return records_; }
  const SchoolYearRecord& record(std::size_t r) const { return records_.at(r); }
  const std::vector<Covariates>& covariates() const noexcept { return covariates_; }
  const Covariates& covariate(std::size_t r) const { return covariates_.at(r); }

  const std::vector<std::string>& school_ids() const noexcept { return school_ids_; }
  std::optional<std::size_t> school_index(const std::string& school_id) const;
  std::optional<std::size_t> find_record(const std::string& school_id, int year) const;

  /// Records of this dataset at the given positions, optionally re-centred on
  /// a different Pell median.
  Dataset subset(std::span<const std::size_t> rows,
                 std::optional<double> pell_median = std::nullopt) const;

  /// Sorted distinct years.
  std::vector<int> years() const;

  bool operator==(const Dataset& other) const {
    return records_ == other.records_ && pell_median_ == other.pell_median_;
  }

 private:
  std::vector<SchoolYearRecord> records_;
  std::vector<Covariates> covariates_;
  std::vector<std::string> school_ids_;
  std::unordered_map<std::string, std::size_t> school_lookup_;
  double pell_median_ = 0.0;
};

}  // namespace underreport
