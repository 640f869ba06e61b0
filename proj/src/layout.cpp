#include "underreport/layout.hpp"

#include <charconv>
#include <stdexcept>

#include <fmt/format.h>

namespace underreport {

namespace {

constexpr std::array<const char*, kSchoolCoefCount> kSchoolCoefNames{
    "beta0_school", "beta1_school", "beta2_school",
    "alpha0_school", "alpha3_school", "alpha4_school"};

constexpr std::array<const char*, ParameterLayout::kGlobalCount> kGlobalNames{
    "alpha0", "alpha1", "alpha2", "alpha3", "alpha4",
    "beta0_1", "beta0_2", "beta0_3", "beta1", "beta2"};

// Parses "prefix[123]" and returns 123.
std::optional<std::size_t> bracket_index(std::string_view name, std::string_view prefix) {
  if (name.size() < prefix.size() + 3 || name.substr(0, prefix.size()) != prefix ||
      name[prefix.size()] != '[' || name.back() != ']') {
    return std::nullopt;
  }
  const auto digits = name.substr(prefix.size() + 1, name.size() - prefix.size() - 2);
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) return std::nullopt;
  return value;
}

}  // namespace

PoolingMode parse_pooling(std::string_view name) {
  if (name == "partial") return PoolingMode::Partial;
  if (name == "complete") return PoolingMode::Complete;
  if (name == "none" || name == "no-pooling") return PoolingMode::NoPooling;
  throw std::invalid_argument(fmt::format(
      "unknown pooling mode '{}' (expected partial, complete or none)", name));
}

std::string_view pooling_name(PoolingMode mode) {
  switch (mode) {
    case PoolingMode::Partial: return "partial";
    case PoolingMode::Complete: return "complete";
    case PoolingMode::NoPooling: return "none";
  }
  return "?";
}

ParameterLayout::ParameterLayout(PoolingMode mode, std::size_t n_schools,
                                 std::size_t n_records)
    : mode_(mode), n_schools_(n_schools), n_records_(n_records) {
  switch (mode) {
    case PoolingMode::Partial:
      school_block_ = kGlobalCount;
      record_block_ = kGlobalCount + 2 * n_schools;
      break;
    case PoolingMode::Complete:
      school_block_ = kGlobalCount;
      record_block_ = kGlobalCount;
      break;
    case PoolingMode::NoPooling:
      school_block_ = 0;
      record_block_ = kSchoolCoefCount * n_schools;
      break;
  }
  dim_ = record_block_ + 2 * n_records;
}

void ParameterLayout::check(bool ok, const char* what) const {
  if (!ok) {
    throw std::out_of_range(fmt::format("parameter layout ({} pooling): {}",
                                        pooling_name(mode_), what));
  }
}

std::size_t ParameterLayout::alpha(std::size_t k) const {
  check(has_globals() && k < 5, "no such alpha coefficient");
  return k;
}

std::size_t ParameterLayout::beta0(std::size_t urban_index) const {
  check(has_globals() && urban_index < 3, "no such beta0 intercept");
  return 5 + urban_index;
}

std::size_t ParameterLayout::beta1() const {
  check(has_globals(), "no global beta1");
  return 8;
}

std::size_t ParameterLayout::beta2() const {
  check(has_globals(), "no global beta2");
  return 9;
}

std::size_t ParameterLayout::gamma(std::size_t school) const {
  check(has_school_offsets() && school < n_schools_, "unknown school for gamma");
  return school_block_ + school;
}

std::size_t ParameterLayout::epsilon(std::size_t school) const {
  check(has_school_offsets() && school < n_schools_, "unknown school for epsilon");
  return school_block_ + n_schools_ + school;
}

std::size_t ParameterLayout::school_coef(SchoolCoef which, std::size_t school) const {
  check(mode_ == PoolingMode::NoPooling && school < n_schools_,
        "unknown school for per-school coefficient");
  return static_cast<std::size_t>(which) * n_schools_ + school;
}

std::size_t ParameterLayout::delta(std::size_t record) const {
  check(record < n_records_, "record index out of range");
  return record_block_ + record;
}

std::size_t ParameterLayout::eta(std::size_t record) const {
  check(record < n_records_, "record index out of range");
  return record_block_ + n_records_ + record;
}

std::string ParameterLayout::name(std::size_t index) const {
  check(index < dim_, "parameter index out of range");
  if (index >= record_block_) {
    const auto k = index - record_block_;
    return k < n_records_ ? fmt::format("delta[{}]", k)
                          : fmt::format("eta[{}]", k - n_records_);
  }
  if (mode_ == PoolingMode::NoPooling) {
    return fmt::format("{}[{}]", kSchoolCoefNames[index / n_schools_], index % n_schools_);
  }
  if (index < kGlobalCount) return kGlobalNames[index];
  const auto k = index - school_block_;
  return k < n_schools_ ? fmt::format("gamma[{}]", k)
                        : fmt::format("epsilon[{}]", k - n_schools_);
}

std::vector<std::string> ParameterLayout::names() const {
  std::vector<std::string> out;
  out.reserve(dim_);
  for (std::size_t k = 0; k < dim_; ++k) out.push_back(name(k));
  return out;
}

std::optional<std::size_t> ParameterLayout::find(std::string_view name) const {
  if (has_globals()) {
    for (std::size_t k = 0; k < kGlobalCount; ++k) {
      if (name == kGlobalNames[k]) return k;
    }
  }
  if (auto i = bracket_index(name, "delta"); i && *i < n_records_) return delta(*i);
  if (auto i = bracket_index(name, "eta"); i && *i < n_records_) return eta(*i);
  if (has_school_offsets()) {
    if (auto i = bracket_index(name, "gamma"); i && *i < n_schools_) return gamma(*i);
    if (auto i = bracket_index(name, "epsilon"); i && *i < n_schools_) return epsilon(*i);
  }
  if (mode_ == PoolingMode::NoPooling) {
    for (std::size_t c = 0; c < kSchoolCoefCount; ++c) {
      if (auto i = bracket_index(name, kSchoolCoefNames[c]); i && *i < n_schools_) {
        return school_coef(static_cast<SchoolCoef>(c), *i);
      }
    }
  }
  return std::nullopt;
}

std::vector<std::size_t> ParameterLayout::summary_coefficients() const {
  if (!has_globals()) return {};
  return {beta1(), beta2(), beta0(0), beta0(1), beta0(2),
          alpha(0), alpha(1), alpha(2), alpha(3), alpha(4)};
}

ParameterValues unpack(const ParameterLayout& layout, std::span<const double> theta) {
  if (theta.size() != layout.dim()) {
    throw std::invalid_argument(fmt::format("unpack: vector has {} entries, layout expects {}",
                                            theta.size(), layout.dim()));
  }
  ParameterValues v;
  if (layout.has_globals()) {
    for (std::size_t k = 0; k < 5; ++k) v.alpha[k] = theta[layout.alpha(k)];
    for (std::size_t k = 0; k < 3; ++k) v.beta0[k] = theta[layout.beta0(k)];
    v.beta = {theta[layout.beta1()], theta[layout.beta2()]};
  }
  const auto S = layout.n_schools();
  if (layout.has_school_offsets()) {
    for (std::size_t i = 0; i < S; ++i) {
      v.gamma.push_back(theta[layout.gamma(i)]);
      v.epsilon.push_back(theta[layout.epsilon(i)]);
    }
  }
  if (layout.mode() == PoolingMode::NoPooling) {
    v.school_coefs.resize(S);
    for (std::size_t i = 0; i < S; ++i) {
      for (std::size_t c = 0; c < kSchoolCoefCount; ++c) {
        v.school_coefs[i][c] = theta[layout.school_coef(static_cast<SchoolCoef>(c), i)];
      }
    }
  }
  for (std::size_t r = 0; r < layout.n_records(); ++r) {
    v.delta.push_back(theta[layout.delta(r)]);
    v.eta.push_back(theta[layout.eta(r)]);
  }
  return v;
}

std::vector<double> pack(const ParameterLayout& layout, const ParameterValues& v) {
  const auto S = layout.n_schools();
  const auto R = layout.n_records();
  auto fail = [] { throw std::invalid_argument("pack: values do not match layout"); };
  if (v.delta.size() != R || v.eta.size() != R) fail();
  if (layout.has_school_offsets() && (v.gamma.size() != S || v.epsilon.size() != S)) fail();
  if (layout.mode() == PoolingMode::NoPooling && v.school_coefs.size() != S) fail();

  std::vector<double> theta(layout.dim(), 0.0);
  if (layout.has_globals()) {
    for (std::size_t k = 0; k < 5; ++k) theta[layout.alpha(k)] = v.alpha[k];
    for (std::size_t k = 0; k < 3; ++k) theta[layout.beta0(k)] = v.beta0[k];
    theta[layout.beta1()] = v.beta[0];
    theta[layout.beta2()] = v.beta[1];
  }
  if (layout.has_school_offsets()) {
    for (std::size_t i = 0; i < S; ++i) {
      theta[layout.gamma(i)] = v.gamma[i];
      theta[layout.epsilon(i)] = v.epsilon[i];
    }
  }
  if (layout.mode() == PoolingMode::NoPooling) {
    for (std::size_t i = 0; i < S; ++i) {
      for (std::size_t c = 0; c < kSchoolCoefCount; ++c) {
        theta[layout.school_coef(static_cast<SchoolCoef>(c), i)] = v.school_coefs[i][c];
      }
    }
  }
  for (std::size_t r = 0; r < R; ++r) {
    theta[layout.delta(r)] = v.delta[r];
    theta[layout.eta(r)] = v.eta[r];
  }
  return theta;
}

}  // namespace underreport
