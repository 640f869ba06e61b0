#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "underreport/hmc.hpp"
#include "underreport/layout.hpp"
#include "underreport/priors.hpp"
#include "underreport/synthetic.hpp"

namespace underreport::cli {

inline constexpr const char* kCommands[] = {"fit",         "simulate",        "ppc",
                                            "predict-constant-z", "compare-pooling", "diagnose"};

struct RunConfig {
  std::string command;
  std::filesystem::path config_path;
  std::filesystem::path data_path;
  std::filesystem::path out_dir = "out";
  std::filesystem::path draws_path;  // diagnose input

  std::uint64_t seed = 1;
  int chains = 4;
  int iters = 1000;
  int warmup = 1000;
  int leapfrog_steps = 32;
  double target_accept = 0.8;
  PoolingMode pooling = PoolingMode::Partial;
  Scenario scenario = Scenario::A;
  double heldout_frac = 0.2;
  bool new_schools = false;
  std::size_t ppc_reps = 10000;
  int inner_draws = 8;
  bool save_draws = false;

  // predict-constant-z
  std::vector<std::string> schools;
  int year = 0;

  // simulate
  std::size_t n_schools = 50;
  int n_years = 6;
  int first_year = 2014;
  ReportingScheme reporting = ReportingScheme::Independent;
  double rho = 0.0;
  std::optional<double> fixed_reporting;

  HmcConfig hmc() const;
  PriorSpec priors() const;
  SimSpec sim_spec() const;
  /// Throws std::invalid_argument describing the first problem found.
  void validate() const;
};

/// Parses command-line arguments (and the --config file they name). Throws
/// CLI11 parse errors; `help` is set when usage text was requested instead.
RunConfig parse_args(int argc, const char* const* argv, std::string* help = nullptr);

/// Runs one command, writing artifacts under config.out_dir and progress
/// lines to `log`. Throws on any failure.
void run(const RunConfig& config, std::ostream& log);

/// Full entry point: parse, run, report errors. Returns the process exit code.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace underreport::cli
