#include "underreport/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "underreport/csv_io.hpp"
#include "underreport/dataset.hpp"
#include "underreport/diagnostics.hpp"
#include "underreport/fit.hpp"
#include "underreport/inference.hpp"
#include "underreport/predictive.hpp"

namespace underreport::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Parse failures carry the text to print and the exit status to use.
class UsageError : public std::runtime_error {
 public:
  UsageError(const std::string& text, int status) : std::runtime_error(text), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

// Sub-seeds for the independent random stages of one command.
enum Stage : std::uint64_t { kFit = 1, kAugment, kSplit, kPpc, kHeldout, kConstantZ };

std::uint64_t stage_seed(const RunConfig& c, Stage s) { return derive_seed(c.seed, s); }

std::string num(double v) { return format_double(v); }

Dataset load_data(const RunConfig& c, std::ostream& log) {
  if (c.data_path.empty()) throw std::invalid_argument("--data is required for " + c.command);
  auto in = ingest(c.data_path);
  const auto& r = in.report;
  fmt::print(log, "ingested {} records from {} schools ({} lines, {} blank skipped); pell median {}\n",
             r.records, r.schools, r.lines, r.blank_lines, num(r.pell_median));
  return std::move(in.data);
}

SampleBatch fit(const Dataset& data, const RunConfig& c, PoolingMode mode, std::ostream& log) {
  auto hmc = c.hmc();
  hmc.seed = derive_seed(stage_seed(c, kFit), static_cast<std::uint64_t>(mode));
  fmt::print(log, "sampling {} pooling: {} chains x ({} warmup + {} draws), {} parameters\n",
             pooling_name(mode), hmc.chains, hmc.warmup_iters, hmc.sampling_iters,
             ParameterLayout(mode, data.n_schools(), data.size()).dim());
  auto batch = run_chains(data, c.priors(), mode, hmc);
  fmt::print(log, "  mean acceptance {:.3f}, divergences {} (warmup {})\n", batch.mean_accept_rate(),
             batch.total_divergences(), batch.warmup_divergences);
  return batch;
}

std::vector<std::size_t> summary_params(const ParameterLayout& layout) {
  auto params = layout.summary_coefficients();
  if (params.empty()) {
    for (std::size_t k = 0; k < kSchoolCoefCount * layout.n_schools(); ++k) params.push_back(k);
  }
  return params;
}

std::string summary_csv(const SampleBatch& batch, const ParameterLayout& layout) {
  std::ostringstream out;
  out << "variable,mean,q25,median,q75,rhat\n";
  for (const auto& d : diagnose(batch, summary_params(layout))) {
    out << d.name << ',' << num(d.mean) << ',' << num(d.q25) << ',' << num(d.median) << ','
        << num(d.q75) << ',' << num(d.rhat) << '\n';
  }
  return out.str();
}

std::string diagnostics_csv(const std::vector<ParameterDiagnostics>& diags) {
  std::ostringstream out;
  out << "parameter,mean,sd,q25,median,q75,rhat,ess\n";
  for (const auto& d : diags) {
    out << csv_field(d.name) << ',' << num(d.mean) << ',' << num(d.sd) << ',' << num(d.q25)
        << ',' << num(d.median) << ',' << num(d.q75) << ',' << num(d.rhat) << ',' << num(d.ess)
        << '\n';
  }
  return out.str();
}

std::string sampler_csv(const SampleBatch& batch) {
  std::ostringstream out;
  out << "chain,step_size,accept_rate,divergences\n";
  for (std::size_t c = 0; c < batch.n_chains; ++c) {
    out << c << ',' << num(batch.step_size.at(c)) << ',' << num(batch.accept_rate.at(c)) << ','
        << batch.divergences.at(c) << '\n';
  }
  return out.str();
}

std::string yearly_csv(const YearlyResult& yearly) {
  std::ostringstream out;
  out << "year,n_records,reported,students";
  for (const char* what : {"incidence", "reporting"}) {
    for (const char* q : {"q025", "q25", "median", "q75", "q975"}) out << ',' << what << '_' << q;
  }
  out << '\n';
  for (const auto& y : yearly.years) {
    out << y.year << ',' << y.n_records << ',' << y.reported << ',' << y.students;
    for (const auto* s : {&y.incidence, &y.reporting}) {
      out << ',' << num(s->q025) << ',' << num(s->q25) << ',' << num(s->median) << ','
          << num(s->q75) << ',' << num(s->q975);
    }
    out << '\n';
  }
  return out.str();
}

std::string yearly_draws_csv(const YearlyResult& yearly) {
  std::ostringstream out;
  out << "year,draw,incidence_per_1000,reporting_rate\n";
  for (const auto& y : yearly.years) {
    for (std::size_t s = 0; s < y.incidence_per_1000.size(); ++s) {
      out << y.year << ',' << s << ',' << num(y.incidence_per_1000[s]) << ',';
      if (s < y.reporting_rate.size()) out << num(y.reporting_rate[s]);
      out << '\n';
    }
  }
  return out.str();
}

std::string records_csv(const std::vector<RecordSummary>& rows) {
  std::ostringstream out;
  out << "school_id,year,reported,z_mean,incidence_median,lambda_median,p_median\n";
  for (const auto& r : rows) {
    out << csv_field(r.school_id) << ',' << r.year << ',' << r.reported << ',' << num(r.z_mean)
        << ',' << num(r.incidence_median) << ',' << num(r.lambda_median) << ','
        << num(r.p_median) << '\n';
  }
  return out.str();
}

std::string column_csv(const char* name, const std::vector<double>& values) {
  std::ostringstream out;
  out << name << '\n';
  for (double v : values) out << num(v) << '\n';
  return out.str();
}

std::string coefficient_draws_csv(const SampleBatch& batch, const ParameterLayout& layout) {
  const auto params = layout.summary_coefficients();
  std::ostringstream out;
  out << "chain,iteration";
  for (auto k : params) out << ',' << batch.names[k];
  out << '\n';
  for (std::size_t s = 0; s < batch.n_draws(); ++s) {
    const auto [chain, iter] = batch.locate(s);
    out << chain << ',' << iter;
    for (auto k : params) out << ',' << num(batch.draw(s)[k]);
    out << '\n';
  }
  return out.str();
}

void write_draws(const fs::path& path, const SampleBatch& batch) {
  std::ostringstream out;
  write_draws_csv(out, batch);
  write_text_file(path, out.str());
}

json config_json(const RunConfig& c) {
  return {{"command", c.command},
          {"seed", c.seed},
          {"chains", c.chains},
          {"iters", c.iters},
          {"warmup", c.warmup},
          {"leapfrog_steps", c.leapfrog_steps},
          {"target_accept", c.target_accept},
          {"pooling", std::string(pooling_name(c.pooling))},
          {"scenario", std::string(1, static_cast<char>(scenario_id(c.scenario)))}};
}

json heldout_json(PoolingMode mode, const HeldoutLikelihood& ll, std::size_t draws, int inner) {
  return {{"pooling", std::string(pooling_name(mode))},
          {"log_likelihood", ll.log_likelihood},
          {"mc_standard_error", ll.mc_standard_error},
          {"n_draws", draws},
          {"inner_draws", inner}};
}

HeldoutSplit make_split(const Dataset& data, const RunConfig& c, std::ostream& log) {
  auto split = split_heldout(data, c.heldout_frac, stage_seed(c, kSplit), c.new_schools);
  fmt::print(log, "held out {} of {} records ({} training)\n", split.heldout.size(), data.size(),
             split.train.size());
  return split;
}

std::string split_csv(const HeldoutSplit& split) {
  std::ostringstream out;
  out << "school_id,year,set\n";
  for (const auto* d : {&split.train, &split.heldout}) {
    const char* tag = d == &split.train ? "train" : "heldout";
    for (const auto& r : d->records()) out << csv_field(r.school_id) << ',' << r.year << ',' << tag << '\n';
  }
  return out.str();
}

void run_fit(const RunConfig& c, std::ostream& log) {
  const auto data = load_data(c, log);
  const auto batch = fit(data, c, c.pooling, log);
  const ParameterLayout layout(c.pooling, data.n_schools(), data.size());
  const auto diags = diagnose(batch);
  const auto& out = c.out_dir;

  write_text_file(out / "summary.csv", summary_csv(batch, layout));
  write_text_file(out / "diagnostics.csv", diagnostics_csv(diags));
  write_text_file(out / "sampler.csv", sampler_csv(batch));

  const auto aug = augment_batch(batch, data, c.pooling, stage_seed(c, kAugment));
  const auto yearly = yearly_aggregates(aug, data);
  for (const auto& note : yearly.notices) fmt::print(log, "note: {}\n", note);
  write_text_file(out / "yearly.csv", yearly_csv(yearly));
  if (c.save_draws) write_draws(out / "draws.csv", batch);

  const auto plot = out / "plotdata";
  write_text_file(plot / "prior_incidence.csv",
                  column_csv("incidence_per_1000", prior_incidence_draws(c.priors(), 10000, c.seed)));
  write_text_file(plot / "prior_reporting.csv",
                  column_csv("reporting_rate", prior_reporting_draws(c.priors(), 10000, c.seed)));
  write_text_file(plot / "yearly_draws.csv", yearly_draws_csv(yearly));
  write_text_file(plot / "record_summary.csv", records_csv(record_summaries(aug, data)));
  if (layout.has_globals()) {
    write_text_file(plot / "coefficient_draws.csv", coefficient_draws_csv(batch, layout));
  }

  double worst = 0.0;
  for (auto k : summary_params(layout)) worst = std::max(worst, diags[k].rhat);
  json run = config_json(c);
  run["records"] = data.size();
  run["schools"] = data.n_schools();
  run["divergences"] = batch.total_divergences();
  run["mean_accept_rate"] = batch.mean_accept_rate();
  run["max_summary_rhat"] = worst;
  run["notices"] = yearly.notices;
  write_text_file(out / "run.json", run.dump(2) + "\n");
  fmt::print(log, "max R-hat over summary coefficients {:.4f}; outputs in {}\n", worst,
             out.string());
}

void run_simulate(const RunConfig& c, std::ostream& log) {
  const auto sim = simulate_full(c.sim_spec());
  std::ostringstream data;
  write_dataset_csv(data, sim.data);
  std::ostringstream truth;
  write_truth_csv(truth, sim);
  write_text_file(c.out_dir / "data.csv", data.str());
  write_text_file(c.out_dir / "truth.csv", truth.str());
  fmt::print(log, "simulated {} records from {} schools ({} reporting); wrote {}\n",
             sim.data.size(), sim.data.n_schools(), reporting_scheme_name(c.reporting),
             (c.out_dir / "data.csv").string());
}

void run_ppc(const RunConfig& c, std::ostream& log) {
  const auto data = load_data(c, log);
  const auto split = make_split(data, c, log);
  const auto batch = fit(split.train, c, c.pooling, log);
  const PredictiveContext context(split.train, split.heldout, c.priors(), c.pooling);
  fmt::print(log, "generating {} predictive datasets\n", c.ppc_reps);
  const auto report = ppc_run(batch, context, c.ppc_reps, stage_seed(c, kPpc));
  const auto ll = heldout_log_likelihood(batch, context, stage_seed(c, kHeldout), c.inner_draws);

  json stats = json::array();
  std::ostringstream reps;
  reps << "dataset";
  for (const auto& s : report.statistics) {
    stats.push_back({{"name", s.name},
                     {"observed", s.observed},
                     {"q025", s.q025},
                     {"q975", s.q975},
                     {"tail_probability", s.tail_probability},
                     {"covered", s.covers()}});
    reps << ',' << s.name;
    fmt::print(log, "  {:<24} observed {:>10}  95% [{}, {}]  tail p {:.3f}\n", s.name,
               num(s.observed), num(s.q025), num(s.q975), s.tail_probability);
  }
  reps << '\n';
  for (std::size_t d = 0; d < report.n_datasets; ++d) {
    reps << d;
    for (const auto& s : report.statistics) reps << ',' << num(s.replicates[d]);
    reps << '\n';
  }
  json ppc = config_json(c);
  ppc["n_datasets"] = report.n_datasets;
  ppc["n_heldout"] = report.n_heldout;
  ppc["n_train"] = split.train.size();
  ppc["statistics"] = stats;
  write_text_file(c.out_dir / "ppc.json", ppc.dump(2) + "\n");
  json hl = {{"models", json::array({heldout_json(c.pooling, ll, batch.n_draws(), c.inner_draws)})}};
  write_text_file(c.out_dir / "heldout_ll.json", hl.dump(2) + "\n");
  write_text_file(c.out_dir / "plotdata" / "ppc_replicates.csv", reps.str());
  write_text_file(c.out_dir / "plotdata" / "split.csv", split_csv(split));
}

void run_constant_z(const RunConfig& c, std::ostream& log) {
  if (c.schools.empty()) throw std::invalid_argument("predict-constant-z needs at least one --school");
  const auto data = load_data(c, log);
  for (const auto& id : c.schools) {
    if (!data.find_record(id, c.year)) {
      throw std::invalid_argument(fmt::format("no record for school {} in year {}", id, c.year));
    }
  }
  const auto batch = fit(data, c, c.pooling, log);
  const auto aug = augment_batch(batch, data, c.pooling, stage_seed(c, kAugment));
  json results = json::array();
  std::ostringstream pmf_csv;
  pmf_csv << "school_id,count,probability\n";
  for (std::size_t i = 0; i < c.schools.size(); ++i) {
    const auto& id = c.schools[i];
    const auto res = constant_z_predictive(id, c.year, batch, aug, data, c.priors(), c.pooling,
                                           derive_seed(stage_seed(c, kConstantZ), i));
    const auto r = *data.find_record(id, c.year);
    std::vector<double> p(aug.n_draws);
    for (std::size_t s = 0; s < aug.n_draws; ++s) p[s] = aug.p[aug.index(s, r)];
    results.push_back({{"school_id", id},
                       {"year", c.year},
                       {"observed", res.observed},
                       {"reporting_median", quantile(p, 0.5)},
                       {"prob_increase", res.prob_increase},
                       {"prob_double", res.prob_double},
                       {"pmf", res.pmf}});
    for (std::size_t k = 0; k < res.pmf.size(); ++k) {
      pmf_csv << csv_field(id) << ',' << k << ',' << num(res.pmf[k]) << '\n';
    }
    fmt::print(log, "  {} ({}): observed {}, P(more reports) {:.3f}, P(at least double) {:.3f}\n",
               id, c.year, res.observed, res.prob_increase, res.prob_double);
  }
  json doc = config_json(c);
  doc["schools"] = results;
  write_text_file(c.out_dir / "constant_z.json", doc.dump(2) + "\n");
  write_text_file(c.out_dir / "plotdata" / "constant_z_pmf.csv", pmf_csv.str());
}

void run_compare(const RunConfig& c, std::ostream& log) {
  const auto data = load_data(c, log);
  const auto split = make_split(data, c, log);
  json models = json::array();
  std::ostringstream csv;
  csv << "pooling,log_likelihood,mc_standard_error\n";
  std::string best;
  double best_ll = -INFINITY;
  for (auto mode : {PoolingMode::Partial, PoolingMode::Complete, PoolingMode::NoPooling}) {
    const auto batch = fit(split.train, c, mode, log);
    const PredictiveContext context(split.train, split.heldout, c.priors(), mode);
    const auto ll = heldout_log_likelihood(batch, context, stage_seed(c, kHeldout), c.inner_draws);
    fmt::print(log, "  held-out log-likelihood {}: {:.2f} (MC se {:.2f})\n", pooling_name(mode),
               ll.log_likelihood, ll.mc_standard_error);
    models.push_back(heldout_json(mode, ll, batch.n_draws(), c.inner_draws));
    csv << pooling_name(mode) << ',' << num(ll.log_likelihood) << ',' << num(ll.mc_standard_error)
        << '\n';
    if (ll.log_likelihood > best_ll) {
      best_ll = ll.log_likelihood;
      best = pooling_name(mode);
    }
  }
  json doc = config_json(c);
  doc["n_train"] = split.train.size();
  doc["n_heldout"] = split.heldout.size();
  doc["models"] = models;
  doc["best"] = best;
  write_text_file(c.out_dir / "heldout_ll.json", doc.dump(2) + "\n");
  write_text_file(c.out_dir / "plotdata" / "heldout_ll.csv", csv.str());
  write_text_file(c.out_dir / "plotdata" / "split.csv", split_csv(split));
}

void run_diagnose(const RunConfig& c, std::ostream& log) {
  if (c.draws_path.empty()) throw std::invalid_argument("diagnose needs --draws");
  std::ifstream in(c.draws_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open draws file " + c.draws_path.string());
  const auto batch = read_draws_csv(in, c.draws_path.string());
  const auto diags = diagnose(batch);
  write_text_file(c.out_dir / "diagnostics.csv", diagnostics_csv(diags));
  const auto worst = std::max_element(diags.begin(), diags.end(), [](const auto& a, const auto& b) {
    return a.rhat < b.rhat;
  });
  const auto thin = std::min_element(diags.begin(), diags.end(), [](const auto& a, const auto& b) {
    return a.ess < b.ess;
  });
  fmt::print(log, "{} parameters, {} chains x {} draws; max R-hat {} ({}), min ESS {} ({})\n",
             batch.dim, batch.n_chains, batch.draws_per_chain, num(worst->rhat), worst->name,
             num(thin->ess), thin->name);
}

}  // namespace

HmcConfig RunConfig::hmc() const {
  HmcConfig h;
  h.chains = chains;
  h.warmup_iters = warmup;
  h.sampling_iters = iters;
  h.leapfrog_steps = leapfrog_steps;
  h.target_accept = target_accept;
  h.seed = seed;
  return h;
}

PriorSpec RunConfig::priors() const { return apply_scenario(PriorSpec{}, scenario_preset(scenario)); }

SimSpec RunConfig::sim_spec() const {
  SimSpec s;
  s.n_schools = n_schools;
  s.n_years = n_years;
  s.first_year = first_year;
  s.scheme = reporting;
  s.rho = rho;
  s.fixed_reporting = fixed_reporting;
  s.seed = seed;
  return s;
}

void RunConfig::validate() const {
  if (std::find(std::begin(kCommands), std::end(kCommands), command) == std::end(kCommands)) {
    throw std::invalid_argument("unknown command '" + command + "'");
  }
  hmc().validate();
  if (!(heldout_frac > 0.0 && heldout_frac < 1.0)) {
    throw std::invalid_argument("--heldout-frac must lie in (0, 1)");
  }
  if (ppc_reps == 0) throw std::invalid_argument("--ppc-reps must be positive");
  if (inner_draws < 1) throw std::invalid_argument("--inner-draws must be positive");
  if (command == "simulate") sim_spec().validate();
}

RunConfig parse_args(int argc, const char* const* argv, std::string* help) {
  RunConfig c;
  CLI::App app{"Bayesian estimation of underreported event counts", "underreport"};
  app.set_config("--config", "", "Key-value configuration file (key = value per line)");
  app.allow_config_extras(false);
  app.get_formatter()->column_width(34);

  std::vector<std::string> commands(std::begin(kCommands), std::end(kCommands));
  app.add_option("command", c.command, "One of: fit, simulate, ppc, predict-constant-z, "
                                        "compare-pooling, diagnose")
      ->required()
      ->check(CLI::IsMember(commands));
  app.add_option("--data", c.data_path, "Input data CSV");
  app.add_option("--out", c.out_dir, "Output directory")->capture_default_str();
  app.add_option("--seed", c.seed, "Random seed")->capture_default_str();
  app.add_option("--chains", c.chains, "Number of chains")->capture_default_str();
  app.add_option("--iters", c.iters, "Sampling iterations per chain")->capture_default_str();
  app.add_option("--warmup", c.warmup, "Warmup iterations per chain")->capture_default_str();
  app.add_option("--leapfrog-steps", c.leapfrog_steps, "Leapfrog steps per transition")
      ->capture_default_str();
  app.add_option("--target-accept", c.target_accept, "Step-size adaptation target")
      ->capture_default_str();
  std::string pooling = "partial";
  app.add_option("--pooling", pooling, "partial, complete or none")
      ->check(CLI::IsMember({"partial", "complete", "none", "no-pooling"}))
      ->capture_default_str();
  std::string scenario = "a";
  app.add_option("--scenario", scenario, "Prior sensitivity scenario a..e")
      ->check(CLI::IsMember({"a", "b", "c", "d", "e"}, CLI::ignore_case))
      ->capture_default_str();
  app.add_option("--heldout-frac", c.heldout_frac, "Fraction of records held out")
      ->capture_default_str();
  app.add_flag("--new-schools", c.new_schools, "Allow held-out records from unseen schools");
  app.add_option("--ppc-reps", c.ppc_reps, "Predictive datasets for ppc")->capture_default_str();
  app.add_option("--inner-draws", c.inner_draws, "Noise draws per posterior draw for held-out likelihood")
      ->capture_default_str();
  app.add_flag("--save-draws", c.save_draws, "Write draws.csv (fit)");
  app.add_option("--draws", c.draws_path, "Draws CSV to diagnose");
  app.add_option("--school", c.schools, "School id for predict-constant-z (repeatable)");
  app.add_option("--year", c.year, "Base year for predict-constant-z");
  app.add_option("--schools", c.n_schools, "Schools to simulate")->capture_default_str();
  app.add_option("--years", c.n_years, "Years per simulated school")->capture_default_str();
  app.add_option("--first-year", c.first_year, "First simulated year")->capture_default_str();
  std::string reporting = "independent";
  app.add_option("--reporting", reporting, "independent, exchangeable or pairwise")
      ->check(CLI::IsMember({"independent", "exchangeable", "pairwise"}))
      ->capture_default_str();
  app.add_option("--rho", c.rho, "Reporting correlation for exchangeable reporting")
      ->capture_default_str();
  double fixed = -1.0;
  auto* fixed_opt = app.add_option("--fixed-reporting", fixed,
                                   "Simulate with this reporting probability for every record");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    if (help) *help = app.help();
    throw UsageError(app.help(), 0);
  } catch (const CLI::ParseError& e) {
    throw UsageError(std::string(e.what()) + "\nRun with --help for usage.", e.get_exit_code());
  }
  if (auto* cfg = app.get_config_ptr(); cfg && cfg->count() > 0) c.config_path = cfg->as<std::string>();
  c.pooling = parse_pooling(pooling);
  c.scenario = parse_scenario(scenario);
  c.reporting = parse_reporting_scheme(reporting);
  if (fixed_opt->count() > 0) c.fixed_reporting = fixed;
  c.validate();
  return c;
}

void run(const RunConfig& c, std::ostream& log) {
  c.validate();
  if (c.command == "fit") return run_fit(c, log);
  if (c.command == "simulate") return run_simulate(c, log);
  if (c.command == "ppc") return run_ppc(c, log);
  if (c.command == "predict-constant-z") return run_constant_z(c, log);
  if (c.command == "compare-pooling") return run_compare(c, log);
  if (c.command == "diagnose") return run_diagnose(c, log);
  throw std::invalid_argument("unknown command '" + c.command + "'");
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    run(parse_args(argc, argv), out);
    return 0;
  } catch (const UsageError& e) {
    (e.status() == 0 ? out : err) << e.what() << '\n';
    return e.status() == 0 ? 0 : 2;
  } catch (const DataError& e) {
    err << "error: invalid data: " << e.what() << '\n';
  } catch (const SamplerError& e) {
    err << "error: sampler failed: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return 1;
}

}  // namespace underreport::cli
