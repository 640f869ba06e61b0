#include "underreport/hmc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include <fmt/format.h>

#include "underreport/diagnostics.hpp"

namespace underreport {

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

struct ChainOutput {
  std::vector<double> draws;
  AcceptStats sampling;
  AcceptStats warmup;
  double step_size = 0.0;
  std::vector<double> inv_mass;
};

ChainOutput run_one_chain(const LogDensityFn& target, std::span<const double> init_center,
                          const HmcConfig& config, std::size_t chain) {
  Engine rng = make_engine(config.seed, chain);
  const auto dim = init_center.size();

  // Jittered prior-centred start; retry a few times if the density is not finite.
  std::optional<ChainState> state;
  for (int attempt = 0; attempt < 100 && !state; ++attempt) {
    std::vector<double> q(init_center.begin(), init_center.end());
    for (auto& v : q) v += config.init_scale * standard_normal(rng);
    try {
      state = make_chain_state(target, std::move(q), 1.0, rng);
    } catch (const SamplerError&) {
    }
  }
  if (!state) throw SamplerError(fmt::format("chain {}: no finite initial point found", chain));

  ChainOutput out;
  auto adaptation = adapt(*state, target, config);
  out.warmup = adaptation.warmup_stats;
  out.step_size = state->step_size;
  out.inv_mass = state->inv_mass_diag;

  state->stats = {};
  out.draws.reserve(static_cast<std::size_t>(config.sampling_iters) * dim);
  for (int it = 0; it < config.sampling_iters; ++it) {
    const int n = jittered_steps(config.leapfrog_steps, config.step_jitter, state->rng);
    hmc_transition(*state, target, n);
    out.draws.insert(out.draws.end(), state->position.begin(), state->position.end());
  }
  out.sampling = state->stats;
  if (out.sampling.divergent == out.sampling.transitions) {
    throw SamplerError(fmt::format("chain {}: all {} sampling transitions diverged", chain,
                                   out.sampling.transitions));
  }
  return out;
}

}  // namespace

void HmcConfig::validate() const {
  if (chains < 1 || warmup_iters < 1 || sampling_iters < 1 || leapfrog_steps < 1) {
    throw std::invalid_argument("HMC chain, iteration and step counts must be >= 1");
  }
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw std::invalid_argument("target_accept must lie in (0, 1)");
  }
  if (!(step_jitter >= 0.0 && step_jitter < 1.0)) {
    throw std::invalid_argument("step_jitter must lie in [0, 1)");
  }
  if (!(init_scale >= 0.0)) throw std::invalid_argument("init_scale must be >= 0");
}

bool leapfrog(PhasePoint& z, double step_size, std::span<const double> inv_mass,
              int n_steps, const LogDensityFn& target) {
  const auto dim = z.position.size();
  for (int step = 0; step < n_steps; ++step) {
    for (std::size_t k = 0; k < dim; ++k) z.momentum[k] += 0.5 * step_size * z.gradient[k];
    for (std::size_t k = 0; k < dim; ++k) z.position[k] += step_size * inv_mass[k] * z.momentum[k];
    z.log_density = target(z.position, z.gradient);
    if (!std::isfinite(z.log_density) || !all_finite(z.gradient)) return false;
    for (std::size_t k = 0; k < dim; ++k) z.momentum[k] += 0.5 * step_size * z.gradient[k];
  }
  return true;
}

double kinetic_energy(std::span<const double> momentum, std::span<const double> inv_mass) {
  double k = 0.0;
  for (std::size_t i = 0; i < momentum.size(); ++i) k += inv_mass[i] * momentum[i] * momentum[i];
  return 0.5 * k;
}

double hamiltonian(const PhasePoint& z, std::span<const double> inv_mass) {
  return -z.log_density + kinetic_energy(z.momentum, inv_mass);
}

ChainState make_chain_state(const LogDensityFn& target, std::vector<double> position,
                            double step_size, Engine rng) {
  ChainState s;
  s.gradient.assign(position.size(), 0.0);
  s.log_density = target(position, s.gradient);
  if (!std::isfinite(s.log_density) || !all_finite(s.gradient)) {
    throw SamplerError("log density not finite at initial point");
  }
  s.position = std::move(position);
  s.step_size = step_size;
  s.inv_mass_diag.assign(s.position.size(), 1.0);
  s.rng = std::move(rng);
  return s;
}

TransitionInfo hmc_transition(ChainState& state, const LogDensityFn& target, int n_steps) {
  const auto dim = state.position.size();
  PhasePoint z{state.position, std::vector<double>(dim), state.gradient, state.log_density};
  for (std::size_t k = 0; k < dim; ++k) {
    z.momentum[k] = standard_normal(state.rng) / std::sqrt(state.inv_mass_diag[k]);
  }
  const double h0 = hamiltonian(z, state.inv_mass_diag);

  TransitionInfo info;
  info.n_steps = n_steps;
  const bool finite = leapfrog(z, state.step_size, state.inv_mass_diag, n_steps, target);
  const double u = uniform01(state.rng);
  if (!finite) {
    info.divergent = true;
    info.energy_error = std::numeric_limits<double>::infinity();
  } else {
    info.energy_error = hamiltonian(z, state.inv_mass_diag) - h0;
    if (!std::isfinite(info.energy_error) || info.energy_error > kDivergenceThreshold) {
      info.divergent = true;
    } else {
      info.accept_prob = std::min(1.0, std::exp(-info.energy_error));
      if (u < info.accept_prob) {
        info.accepted = true;
        state.position = std::move(z.position);
        state.gradient = std::move(z.gradient);
        state.log_density = z.log_density;
      }
    }
  }
  ++state.stats.transitions;
  state.stats.sum_accept_prob += info.accept_prob;
  if (info.accepted) ++state.stats.accepted;
  if (info.divergent) ++state.stats.divergent;
  return info;
}

int jittered_steps(int base, double jitter, Engine& rng) {
  const int lo = std::max(1, static_cast<int>(std::ceil((1.0 - jitter) * base)));
  const int hi = std::max(lo, static_cast<int>(std::floor((1.0 + jitter) * base)));
  if (lo == hi) return lo;
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

DualAveraging::DualAveraging(double initial_step, double target_accept)
    : target_(target_accept) {
  restart(initial_step);
}

void DualAveraging::restart(double initial_step) {
  mu_ = std::log(10.0 * initial_step);
  h_bar_ = 0.0;
  log_step_bar_ = 0.0;
  t_ = 0;
}

double DualAveraging::update(double accept_prob) {
  constexpr double gamma = 0.05;
  constexpr double t0 = 10.0;
  constexpr double kappa = 0.75;
  ++t_;
  const double t = static_cast<double>(t_);
  const double eta = 1.0 / (t + t0);
  h_bar_ = (1.0 - eta) * h_bar_ + eta * (target_ - accept_prob);
  const double log_step = mu_ - std::sqrt(t) / gamma * h_bar_;
  const double w = std::pow(t, -kappa);
  log_step_bar_ = w * log_step + (1.0 - w) * log_step_bar_;
  return std::exp(log_step);
}

double DualAveraging::averaged_step() const { return std::exp(log_step_bar_); }

VarianceEstimator::VarianceEstimator(std::size_t dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}

void VarianceEstimator::add(std::span<const double> x) {
  ++n_;
  const double n = static_cast<double>(n_);
  for (std::size_t k = 0; k < mean_.size(); ++k) {
    const double d = x[k] - mean_[k];
    mean_[k] += d / n;
    m2_[k] += d * (x[k] - mean_[k]);
  }
}

void VarianceEstimator::reset() {
  n_ = 0;
  std::fill(mean_.begin(), mean_.end(), 0.0);
  std::fill(m2_.begin(), m2_.end(), 0.0);
}

std::vector<double> VarianceEstimator::regularized_variance() const {
  std::vector<double> out(mean_.size(), 1.0);
  if (n_ < 2) return out;
  const double n = static_cast<double>(n_);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double var = m2_[k] / (n - 1.0);
    out[k] = (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0));
  }
  return out;
}

WarmupSchedule::WarmupSchedule(int warmup_iters) : warmup_(warmup_iters) {
  // A terminal step-size window longer than the usual 50 iterations keeps the
  // averaged step from landing well below the acceptance target.
  int init = 75;
  int term = std::max(50, warmup_iters / 5);
  int base = 25;
  if (warmup_iters < 20) {
    // Too short for mass-matrix windows.
    init_buffer_ = warmup_iters;
    term_buffer_ = 0;
    return;
  }
  if (init + term + base > warmup_iters) {
    init = static_cast<int>(0.15 * warmup_iters);
    term = static_cast<int>(0.2 * warmup_iters);
    base = warmup_iters - init - term;
  }
  init_buffer_ = init;
  term_buffer_ = term;
  const int slow_end = warmup_iters - term;
  int start = init;
  int window = base;
  while (start < slow_end) {
    int end = start + window;
    // Absorb a trailing window that would be shorter than twice the next size.
    if (end + 2 * window > slow_end) end = slow_end;
    window_ends_.push_back(end - 1);
    start = end;
    window *= 2;
  }
}

bool WarmupSchedule::in_slow_window(int it) const {
  return !window_ends_.empty() && it >= init_buffer_ && it < warmup_ - term_buffer_;
}

bool WarmupSchedule::ends_slow_window(int it) const {
  return std::find(window_ends_.begin(), window_ends_.end(), it) != window_ends_.end();
}

double find_reasonable_step_size(ChainState& state, const LogDensityFn& target,
                                 double initial) {
  const auto dim = state.position.size();
  double step = initial;
  auto accept_prob = [&](double eps) {
    PhasePoint z{state.position, std::vector<double>(dim), state.gradient, state.log_density};
    for (std::size_t k = 0; k < dim; ++k) {
      z.momentum[k] = standard_normal(state.rng) / std::sqrt(state.inv_mass_diag[k]);
    }
    const double h0 = hamiltonian(z, state.inv_mass_diag);
    if (!leapfrog(z, eps, state.inv_mass_diag, 1, target)) return 0.0;
    const double dh = hamiltonian(z, state.inv_mass_diag) - h0;
    return std::isfinite(dh) ? std::min(1.0, std::exp(-dh)) : 0.0;
  };
  const bool grow = accept_prob(step) > 0.5;
  for (int i = 0; i < 60; ++i) {
    const double next = grow ? 2.0 * step : 0.5 * step;
    const double a = accept_prob(next);
    if (grow ? a < 0.5 : a > 0.5) {
      return grow ? step : next;
    }
    step = next;
  }
  return step;
}

AdaptationResult adapt(ChainState& state, const LogDensityFn& target, const HmcConfig& config) {
  const auto dim = state.position.size();
  WarmupSchedule schedule(config.warmup_iters);
  VarianceEstimator variance(dim);
  state.step_size = find_reasonable_step_size(state, target, state.step_size);
  DualAveraging dual(state.step_size, config.target_accept);
  state.stats = {};

  AdaptationResult result;
  result.step_trace.reserve(static_cast<std::size_t>(config.warmup_iters));
  for (int it = 0; it < config.warmup_iters; ++it) {
    result.step_trace.push_back(state.step_size);
    const int n = jittered_steps(config.leapfrog_steps, config.step_jitter, state.rng);
    const auto info = hmc_transition(state, target, n);
    state.step_size = dual.update(info.accept_prob);
    if (schedule.in_slow_window(it)) variance.add(state.position);
    if (schedule.ends_slow_window(it)) {
      state.inv_mass_diag = variance.regularized_variance();
      variance.reset();
      state.step_size = find_reasonable_step_size(state, target, state.step_size);
      dual.restart(state.step_size);
    }
  }
  state.step_size = dual.averaged_step();
  result.step_size = state.step_size;
  result.inv_mass_diag = state.inv_mass_diag;
  result.warmup_stats = state.stats;
  return result;
}

std::size_t SampleBatch::total_divergences() const {
  std::size_t n = 0;
  for (auto d : divergences) n += d;
  return n;
}

double SampleBatch::mean_accept_rate() const {
  return accept_rate.empty() ? 0.0 : underreport::mean(accept_rate);
}

std::optional<std::size_t> SampleBatch::find(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

std::vector<double> SampleBatch::column(std::size_t k) const {
  if (k >= dim) throw std::out_of_range("parameter index out of range");
  std::vector<double> out(n_draws());
  for (std::size_t s = 0; s < out.size(); ++s) out[s] = draws[s * dim + k];
  return out;
}

std::vector<std::vector<double>> SampleBatch::chains_of(std::size_t k) const {
  if (k >= dim) throw std::out_of_range("parameter index out of range");
  std::vector<std::vector<double>> out(n_chains, std::vector<double>(draws_per_chain));
  for (std::size_t c = 0; c < n_chains; ++c) {
    for (std::size_t i = 0; i < draws_per_chain; ++i) {
      out[c][i] = draws[(c * draws_per_chain + i) * dim + k];
    }
  }
  return out;
}

SampleBatch sample_hmc(const LogDensityFn& target, std::span<const double> init_center,
                       std::vector<std::string> names, const HmcConfig& config) {
  config.validate();
  const auto dim = init_center.size();
  if (dim == 0) throw std::invalid_argument("sample_hmc: zero-dimensional target");
  if (names.size() != dim) throw std::invalid_argument("sample_hmc: names/dimension mismatch");

  const auto n_chains = static_cast<std::size_t>(config.chains);
  std::vector<ChainOutput> outputs(n_chains);
  std::vector<std::exception_ptr> errors(n_chains);
  auto work = [&](std::size_t c) {
    try {
      outputs[c] = run_one_chain(target, init_center, config, c);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (config.parallel && n_chains > 1) {
    std::vector<std::thread> threads;
    threads.reserve(n_chains);
    for (std::size_t c = 0; c < n_chains; ++c) threads.emplace_back(work, c);
    for (auto& t : threads) t.join();
  } else {
    for (std::size_t c = 0; c < n_chains; ++c) work(c);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  SampleBatch batch;
  batch.names = std::move(names);
  batch.dim = dim;
  batch.n_chains = n_chains;
  batch.draws_per_chain = static_cast<std::size_t>(config.sampling_iters);
  batch.draws.reserve(batch.n_draws() * dim);
  for (auto& out : outputs) {
    batch.draws.insert(batch.draws.end(), out.draws.begin(), out.draws.end());
    batch.accept_rate.push_back(out.sampling.mean_accept_prob());
    batch.step_size.push_back(out.step_size);
    batch.inv_mass_diag.push_back(std::move(out.inv_mass));
    batch.divergences.push_back(out.sampling.divergent);
    batch.warmup_divergences += out.warmup.divergent;
  }
  return batch;
}

std::vector<ParameterDiagnostics> diagnose(const SampleBatch& batch,
                                           std::span<const std::size_t> params) {
  std::vector<std::size_t> which(params.begin(), params.end());
  if (which.empty()) {
    which.resize(batch.dim);
    for (std::size_t k = 0; k < batch.dim; ++k) which[k] = k;
  }
  static constexpr double kQuartiles[] = {0.25, 0.5, 0.75};
  std::vector<ParameterDiagnostics> out;
  out.reserve(which.size());
  for (auto k : which) {
    ParameterDiagnostics d;
    d.name = batch.names.at(k);
    auto col = batch.column(k);
    d.mean = mean(col);
    d.sd = std::sqrt(variance(col));
    const auto q = quantiles(col, kQuartiles);
    d.q25 = q[0];
    d.median = q[1];
    d.q75 = q[2];
    const auto chains = batch.chains_of(k);
    const bool enough = batch.n_chains >= 2 && batch.draws_per_chain >= 4;
    d.rhat = enough ? split_rhat(chains) : std::numeric_limits<double>::quiet_NaN();
    d.ess = batch.draws_per_chain >= 4 ? ess(chains) : std::numeric_limits<double>::quiet_NaN();
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace underreport
