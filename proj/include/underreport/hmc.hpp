#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "underreport/rng.hpp"

namespace underreport {

/// Log density with gradient: writes d/dq into `grad`, returns log p(q).
using LogDensityFn = std::function<double(std::span<const double> q, std::span<double> grad)>;

class SamplerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HmcConfig {
  int chains = 4;
  int warmup_iters = 1000;
  int sampling_iters = 1000;
  int leapfrog_steps = 32;
  double step_jitter = 0.2;  // step count drawn uniformly in [(1-j) n, (1+j) n]
  double target_accept = 0.8;
  std::uint64_t seed = 1;
  double init_scale = 0.1;
  bool parallel = true;      // one thread per chain; output is identical either way

  void validate() const;
};

/// Position, momentum and cached density/gradient at the position.
struct PhasePoint {
  std::vector<double> position;
  std::vector<double> momentum;
  std::vector<double> gradient;
  double log_density = 0.0;
};

/// Runs `n_steps` leapfrog steps in place. Returns false as soon as the
/// density or gradient becomes non-finite (the caller treats that as a
/// divergence); the phase point is then left mid-trajectory.
bool leapfrog(PhasePoint& z, double step_size, std::span<const double> inv_mass_diag,
              int n_steps, const LogDensityFn& target);

double kinetic_energy(std::span<const double> momentum, std::span<const double> inv_mass_diag);
/// Potential plus kinetic energy.
double hamiltonian(const PhasePoint& z, std::span<const double> inv_mass_diag);

struct AcceptStats {
  std::size_t transitions = 0;
  std::size_t accepted = 0;
  std::size_t divergent = 0;
  double sum_accept_prob = 0.0;

  double mean_accept_prob() const {
    return transitions ? sum_accept_prob / static_cast<double>(transitions) : 0.0;
  }
};

struct ChainState {
  std::vector<double> position;
  std::vector<double> gradient;
  double log_density = 0.0;
  double step_size = 1.0;
  std::vector<double> inv_mass_diag;
  Engine rng;
  AcceptStats stats;
};

/// Evaluates the density at `position`; throws SamplerError if non-finite.
ChainState make_chain_state(const LogDensityFn& target, std::vector<double> position,
                            double step_size, Engine rng);

struct TransitionInfo {
  double accept_prob = 0.0;
  bool accepted = false;
  bool divergent = false;
  double energy_error = 0.0;
  int n_steps = 0;
};

inline constexpr double kDivergenceThreshold = 1000.0;

/// One static-length HMC transition: fresh momentum, `n_steps` leapfrog steps,
/// Metropolis correction. Energy errors above kDivergenceThreshold or
/// non-finite values count as divergent and are rejected.
TransitionInfo hmc_transition(ChainState& state, const LogDensityFn& target, int n_steps);

/// Uniform integer in [ceil((1-jitter) base), floor((1+jitter) base)], at least 1.
int jittered_steps(int base, double jitter, Engine& rng);

/// Nesterov dual averaging of log step size (gamma 0.05, t0 10, kappa 0.75).
class DualAveraging {
 public:
  DualAveraging(double initial_step, double target_accept);
  void restart(double initial_step);
  /// Feeds one acceptance statistic, returns the next step size to use.
  double update(double accept_prob);
  /// Iterate-averaged step size, used after warmup.
  double averaged_step() const;

 private:
  double target_;
  double mu_ = 0.0;
  double h_bar_ = 0.0;
  double log_step_bar_ = 0.0;
  int t_ = 0;
};

/// Streaming variance estimate for a diagonal inverse mass matrix.
class VarianceEstimator {
 public:
  explicit VarianceEstimator(std::size_t dim);
  void add(std::span<const double> x);
  void reset();
  std::size_t count() const noexcept { return n_; }
  /// Variances shrunk towards 1e-3 as (n/(n+5)) var + 1e-3 (5/(n+5)).
  std::vector<double> regularized_variance() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

/// Warmup schedule: an initial fast interval (step size only), doubling slow
/// windows that estimate the mass matrix, and a terminal fast interval.
class WarmupSchedule {
 public:
  explicit WarmupSchedule(int warmup_iters);
  bool in_slow_window(int iteration) const;
  bool ends_slow_window(int iteration) const;
  const std::vector<int>& window_ends() const noexcept { return window_ends_; }

 private:
  int init_buffer_ = 0;
  int term_buffer_ = 0;
  int warmup_ = 0;
  std::vector<int> window_ends_;
};

/// Doubles or halves `initial` until one leapfrog step crosses 50% acceptance.
double find_reasonable_step_size(ChainState& state, const LogDensityFn& target,
                                 double initial);

/// Result of warmup adaptation for one chain.
struct AdaptationResult {
  double step_size = 1.0;
  std::vector<double> inv_mass_diag;
  std::vector<double> step_trace;  // step size used at each warmup iteration
  AcceptStats warmup_stats;
};

/// Runs warmup on `state` in place and leaves it with the adapted step size
/// and inverse mass matrix. Intended for warmup_iters >= 100; shorter warmups
/// use proportionally sized windows.
AdaptationResult adapt(ChainState& state, const LogDensityFn& target, const HmcConfig& config);

/// Posterior draws from all chains, stored row-major (draw x parameter) with
/// chains concatenated in chain order.
struct SampleBatch {
  std::vector<std::string> names;
  std::size_t dim = 0;
  std::size_t n_chains = 0;
  std::size_t draws_per_chain = 0;
  std::vector<double> draws;
  std::vector<double> accept_rate;         // per chain, sampling phase
  std::vector<double> step_size;           // per chain, after adaptation
  std::vector<std::vector<double>> inv_mass_diag;  // per chain
  std::vector<std::size_t> divergences;    // per chain, sampling phase
  std::size_t warmup_divergences = 0;

  std::size_t n_draws() const noexcept { return n_chains * draws_per_chain; }
  std::span<const double> draw(std::size_t s) const {
    return {draws.data() + s * dim, dim};
  }
  std::size_t total_divergences() const;
  double mean_accept_rate() const;
  std::optional<std::size_t> find(const std::string& name) const;
  /// All draws of one parameter, chains concatenated.
  std::vector<double> column(std::size_t k) const;
  /// Draws of one parameter split by chain.
  std::vector<std::vector<double>> chains_of(std::size_t k) const;
  /// Chain index and iteration for a draw row.
  std::pair<std::size_t, std::size_t> locate(std::size_t s) const {
    return {s / draws_per_chain, s % draws_per_chain};
  }

  bool operator==(const SampleBatch&) const = default;
};

/// Multi-chain HMC. Chain c starts at init_center + N(0, init_scale^2) per
/// component and owns the engine for derive_seed(seed, c), so output depends
/// only on (target, init_center, config) and not on thread scheduling.
/// Throws SamplerError if every sampling transition of a chain diverged.
SampleBatch sample_hmc(const LogDensityFn& target, std::span<const double> init_center,
                       std::vector<std::string> names, const HmcConfig& config);

struct ParameterDiagnostics {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double rhat = 0.0;
  double ess = 0.0;
};

/// Diagnostics for the given parameter offsets (all parameters if empty).
std::vector<ParameterDiagnostics> diagnose(const SampleBatch& batch,
                                           std::span<const std::size_t> params = {});

}  // namespace underreport
