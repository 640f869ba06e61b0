#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace underreport {

enum class PoolingMode { Partial, Complete, NoPooling };

PoolingMode parse_pooling(std::string_view name);
std::string_view pooling_name(PoolingMode mode);

/// Per-school coefficient block used when schools are modelled separately.
enum class SchoolCoef : std::size_t { Beta0 = 0, Beta1, Beta2, Alpha0, Alpha3, Alpha4 };
inline constexpr std::size_t kSchoolCoefCount = 6;

/// Maps every latent symbol to an offset in the flat parameter vector.
///
/// Partial:   alpha0..4 | beta0_1..3 | beta1 beta2 | gamma[S] | epsilon[S] | delta[R] | eta[R]
/// Complete:  alpha0..4 | beta0_1..3 | beta1 beta2 | delta[R] | eta[R]
/// NoPooling: beta0_school[S] beta1_school[S] beta2_school[S]
///            alpha0_school[S] alpha3_school[S] alpha4_school[S] | delta[R] | eta[R]
class ParameterLayout {
 public:
  static constexpr std::size_t kGlobalCount = 10;

  ParameterLayout(PoolingMode mode, std::size_t n_schools, std::size_t n_records);

  PoolingMode mode() const noexcept { return mode_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t n_schools() const noexcept { return n_schools_; }
  std::size_t n_records() const noexcept { return n_records_; }

  bool has_globals() const noexcept { return mode_ != PoolingMode::NoPooling; }
  bool has_school_offsets() const noexcept { return mode_ == PoolingMode::Partial; }

  // Global coefficients (Partial / Complete only).
  std::size_t alpha(std::size_t k) const;
  std::size_t beta0(std::size_t urban_index) const;
  std::size_t beta1() const;
  std::size_t beta2() const;
  // School offsets (Partial only).
  std::size_t gamma(std::size_t school) const;
  std::size_t epsilon(std::size_t school) const;
  // Per-school coefficients (NoPooling only).
  std::size_t school_coef(SchoolCoef which, std::size_t school) const;
  // Per-record noise (all modes).
  std::size_t delta(std::size_t record) const;
  std::size_t eta(std::size_t record) const;

  std::string name(std::size_t index) const;
  std::vector<std::string> names() const;
  std::optional<std::size_t> find(std::string_view name) const;

  /// Offsets of the coefficients reported in a posterior summary table, in
  /// table order: beta1, beta2, beta0_1..3, alpha0..4. Empty for NoPooling.
  std::vector<std::size_t> summary_coefficients() const;

 private:
  void check(bool ok, const char* what) const;

  PoolingMode mode_;
  std::size_t n_schools_;
  std::size_t n_records_;
  std::size_t school_block_ = 0;
  std::size_t record_block_ = 0;
  std::size_t dim_ = 0;
};

/// Structured view of a parameter vector.
struct ParameterValues {
  std::array<double, 5> alpha{};
  std::array<double, 3> beta0{};
  std::array<double, 2> beta{};
  std::vector<double> gamma;
  std::vector<double> epsilon;
  std::vector<std::array<double, kSchoolCoefCount>> school_coefs;
  std::vector<double> delta;
  std::vector<double> eta;

  bool operator==(const ParameterValues&) const = default;
};

ParameterValues unpack(const ParameterLayout& layout, std::span<const double> theta);
std::vector<double> pack(const ParameterLayout& layout, const ParameterValues& values);

}  // namespace underreport
