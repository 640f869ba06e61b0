#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "underreport/cli.hpp"
#include "underreport/csv_io.hpp"
#include "underreport/fit.hpp"
#include "underreport/inference.hpp"
#include "underreport/model.hpp"
#include "underreport/synthetic.hpp"

namespace py = pybind11;
using namespace underreport;

namespace {

py::array_t<double> draws_array(const SampleBatch& b) {
  py::array_t<double> out({b.n_draws(), b.dim});
  std::copy(b.draws.begin(), b.draws.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bayesian estimation of underreported counts";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<SamplerError>(m, "SamplerError", PyExc_RuntimeError);

  py::class_<SchoolYearRecord>(m, "Record")
      .def(py::init<>())
      .def_readwrite("school_id", &SchoolYearRecord::school_id)
      .def_readwrite("year", &SchoolYearRecord::year)
      .def_readwrite("reported", &SchoolYearRecord::reported)
      .def_readwrite("urbanization", &SchoolYearRecord::urbanization)
      .def_readwrite("students", &SchoolYearRecord::students)
      .def_readwrite("frac_women", &SchoolYearRecord::frac_women)
      .def_readwrite("pell_frac", &SchoolYearRecord::pell_frac)
      .def_readwrite("assoc_only", &SchoolYearRecord::assoc_only)
      .def_readwrite("religious", &SchoolYearRecord::religious);

  py::class_<Dataset>(m, "Dataset")
      .def_static("from_records", [](std::vector<SchoolYearRecord> r) {
        return Dataset::from_records(std::move(r));
      })
      .def_static("read_csv", [](const std::string& path) { return ingest(path).data; })
      .def("to_csv", [](const Dataset& d) {
        std::ostringstream out;
        write_dataset_csv(out, d);
        return out.str();
      })
      .def("__len__", &Dataset::size)
      .def_property_readonly("n_schools", &Dataset::n_schools)
      .def_property_readonly("pell_median", &Dataset::pell_median)
      .def_property_readonly("records", &Dataset::records)
      .def_property_readonly("years", &Dataset::years);

  py::class_<SampleBatch>(m, "SampleBatch")
      .def_readonly("names", &SampleBatch::names)
      .def_readonly("n_chains", &SampleBatch::n_chains)
      .def_readonly("draws_per_chain", &SampleBatch::draws_per_chain)
      .def_readonly("accept_rate", &SampleBatch::accept_rate)
      .def_property_readonly("divergences", &SampleBatch::total_divergences)
      .def_property_readonly("draws", &draws_array, "Array of shape (n_draws, n_parameters)");

  py::class_<CoefficientRow>(m, "CoefficientRow")
      .def_readonly("name", &CoefficientRow::name)
      .def_readonly("mean", &CoefficientRow::mean)
      .def_readonly("q25", &CoefficientRow::q25)
      .def_readonly("median", &CoefficientRow::median)
      .def_readonly("q75", &CoefficientRow::q75)
      .def_readonly("rhat", &CoefficientRow::rhat);

  m.def("marginal_log_pmf", &marginal_log_pmf, py::arg("x"), py::arg("lam"), py::arg("p"));
  m.def("percapita_scaling", &percapita_scaling, py::arg("beta1"), py::arg("size_ratio"));
  m.def("prior_incidence_draws", [](std::size_t n, std::uint64_t seed) {
    return prior_incidence_draws(PriorSpec{}, n, seed);
  }, py::arg("n"), py::arg("seed") = 1);
  m.def("prior_reporting_draws", [](std::size_t n, std::uint64_t seed) {
    return prior_reporting_draws(PriorSpec{}, n, seed);
  }, py::arg("n"), py::arg("seed") = 1);

  m.def("simulate",
        [](std::size_t n_schools, int n_years, std::uint64_t seed, const std::string& reporting,
           double rho) {
          SimSpec spec;
          spec.n_schools = n_schools;
          spec.n_years = n_years;
          spec.seed = seed;
          spec.scheme = parse_reporting_scheme(reporting);
          spec.rho = rho;
          spec.validate();
          auto sim = simulate_full(spec);
          py::dict out;
          out["data"] = sim.data;
          out["z_true"] = sim.z_true;
          out["p_true"] = sim.p_true;
          out["lambda_true"] = sim.lambda_true;
          return out;
        },
        py::arg("n_schools") = 50, py::arg("n_years") = 6, py::arg("seed") = 1,
        py::arg("reporting") = "independent", py::arg("rho") = 0.0);

  m.def("fit",
        [](const Dataset& data, const std::string& pooling, int chains, int warmup, int iters,
           std::uint64_t seed) {
          HmcConfig c;
          c.chains = chains;
          c.warmup_iters = warmup;
          c.sampling_iters = iters;
          c.seed = seed;
          py::gil_scoped_release release;
          return run_chains(data, PriorSpec{}, parse_pooling(pooling), c);
        },
        py::arg("data"), py::arg("pooling") = "partial", py::arg("chains") = 4,
        py::arg("warmup") = 1000, py::arg("iters") = 1000, py::arg("seed") = 1);

  m.def("coefficient_summary", &coefficient_summary, py::arg("batch"));

  m.def("run_cli", [](std::vector<std::string> args) {
    args.insert(args.begin(), "underreport");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int status = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
    return py::make_tuple(status, out.str(), err.str());
  }, py::arg("args"), "Runs the command-line tool; returns (status, stdout, stderr).");
}
