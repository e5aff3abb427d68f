#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "mfals/distributions.hpp"
#include "mfals/error.hpp"
#include "mfals/estimators.hpp"
#include "mfals/gp.hpp"
#include "mfals/learning.hpp"
#include "mfals/models.hpp"
#include "mfals/run_spec.hpp"

namespace py = pybind11;
using namespace mfals;

namespace {

RunSpec spec_from_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecError(std::string("invalid JSON (") + e.what() + ")");
  }
  return parse_spec_json(doc);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multifidelity active-learning subset simulation";
  m.attr("__version__") = MFALS_VERSION;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<ConditioningError>(m, "ConditioningError", base.ptr());
  py::register_exception<EvaluationError>(m, "EvaluationError", base.ptr());
  py::register_exception<ProtocolError>(m, "ProtocolError", base.ptr());
  py::register_exception<AdapterCrashError>(m, "AdapterCrashError", base.ptr());
  py::register_exception<DeterminismError>(m, "DeterminismError", base.ptr());
  py::register_exception<SpecError>(m, "SpecError", base.ptr());

  m.def("normal_cdf", &normal_cdf, py::arg("z"));
  m.def("normal_quantile", &normal_quantile, py::arg("p"));

  py::class_<RandomVariable>(m, "RandomVariable")
      .def_static("uniform", &RandomVariable::uniform, py::arg("lower"), py::arg("upper"),
                  py::arg("log_space") = false)
      .def_static("normal", &RandomVariable::normal, py::arg("mean"), py::arg("std"),
                  py::arg("log_space") = false)
      .def_static("truncated_normal", &RandomVariable::truncated_normal, py::arg("mean"),
                  py::arg("std"), py::arg("lower"), py::arg("upper"), py::arg("log_space") = false)
      .def_property_readonly("family",
                             [](const RandomVariable& r) { return std::string(to_string(r.family())); })
      .def_property_readonly("log_space", &RandomVariable::log_space)
      .def("log_density", &RandomVariable::log_density, py::arg("z"))
      .def("cdf", &RandomVariable::cdf, py::arg("z"))
      .def("quantile", &RandomVariable::quantile, py::arg("p"))
      .def("in_support", &RandomVariable::in_support, py::arg("z"))
      .def("to_physical", &RandomVariable::to_physical, py::arg("z"))
      .def_property_readonly("latent_mean", &RandomVariable::latent_mean)
      .def_property_readonly("latent_std", &RandomVariable::latent_std)
      .def(
          "sample",
          [](const RandomVariable& r, std::size_t n, std::uint64_t seed) {
            Rng rng(seed);
            std::vector<double> out(n);
            for (auto& v : out) v = r.sample(rng);
            return out;
          },
          py::arg("n"), py::arg("seed"));

  m.def(
      "four_branch", [](double x1, double x2) { return four_branch(std::vector<double>{x1, x2}); },
      py::arg("x1"), py::arg("x2"));
  m.def(
      "rastrigin", [](double x1, double x2) { return rastrigin_limit(std::vector<double>{x1, x2}); },
      py::arg("x1"), py::arg("x2"));
  m.def(
      "borehole", [](const std::vector<double>& x) { return borehole(x); }, py::arg("x"),
      "Inputs ordered rw, r, Tu, Hu, Tl, Hl, L, Kw.");

  py::class_<GPSurrogate>(m, "GaussianProcess")
      .def_static(
          "fit",
          [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, bool standardize, int n_starts,
             std::uint64_t seed) {
            GPOptions o;
            o.standardize = standardize;
            o.n_starts = n_starts;
            o.seed = seed;
            py::gil_scoped_release release;
            return GPSurrogate::fit(x, y, o);
          },
          py::arg("x"), py::arg("y"), py::arg("standardize") = true, py::arg("n_starts") = 8,
          py::arg("seed") = GPOptions{}.seed)
      .def(
          "predict",
          [](const GPSurrogate& gp, const std::vector<double>& x) {
            const GPPrediction p = gp.predict(x);
            return py::make_tuple(p.mean, p.std);
          },
          py::arg("x"), "Returns (mean, std).")
      .def(
          "update",
          [](const GPSurrogate& gp, const std::vector<double>& x, double y) {
            return gp.update(x, y);
          },
          py::arg("x"), py::arg("y"), "Returns a new surrogate with one more observation.")
      .def_property_readonly("size", &GPSurrogate::size)
      .def_property_readonly("signal_variance",
                             [](const GPSurrogate& gp) { return gp.hyperparameters().signal_variance; })
      .def_property_readonly("lengthscales",
                             [](const GPSurrogate& gp) { return gp.hyperparameters().lengthscales; })
      .def_property_readonly("negative_log_likelihood", &GPSurrogate::negative_log_likelihood)
      .def_property_readonly("prior_std", &GPSurrogate::prior_std);

  py::class_<QuantileTracker>(m, "QuantileTracker")
      .def(py::init<double>(), py::arg("p0"))
      .def("insert", &QuantileTracker::insert, py::arg("value"))
      .def("clear", &QuantileTracker::clear)
      .def_property_readonly("threshold", &QuantileTracker::threshold)
      .def_property_readonly("warmup", &QuantileTracker::warmup)
      .def("__len__", &QuantileTracker::size);

  m.def(
      "u_value",
      [](double mean, double std, double threshold, double sigma_floor) {
        LearningConfig c;
        c.sigma_floor = sigma_floor;
        return u_value(c, mean, std, threshold);
      },
      py::arg("mean"), py::arg("std"), py::arg("threshold"), py::arg("sigma_floor") = 1e-12);
  m.def("exceedance_probability", &exceedance_probability, py::arg("mean"), py::arg("std"),
        py::arg("threshold"), py::arg("sigma_floor") = 1e-12);

  m.def(
      "chain_autocorrelation",
      [](const std::vector<double>& records, std::size_t n_chains, std::size_t chain_length) {
        return chain_autocorrelation(records, ChainLayout{n_chains, chain_length});
      },
      py::arg("records"), py::arg("n_chains"), py::arg("chain_length"));
  m.def(
      "level_cov",
      [](const std::vector<double>& records, std::size_t n_chains, std::size_t chain_length,
         bool first_level) {
        const LevelCov c = level_cov(records, ChainLayout{n_chains, chain_length}, first_level);
        return py::make_tuple(c.cov, c.gamma);
      },
      py::arg("records"), py::arg("n_chains"), py::arg("chain_length"),
      py::arg("first_level") = false, "Returns (cov, gamma).");
  m.def("cov_from", &cov_from, py::arg("probability"), py::arg("n"), py::arg("gamma") = 0.0);
  m.def("pf_indicator", &pf_indicator, py::arg("p0"), py::arg("n_levels"),
        py::arg("final_fraction"));

  m.def(
      "validate_spec",
      [](const std::string& text) { return spec_to_json(spec_from_text(text)).dump(); },
      py::arg("spec_json"), "Parses a run spec and returns the effective spec as JSON text.");
  m.def(
      "execute",
      [](const std::string& text, std::optional<std::uint64_t> seed,
         std::optional<std::string> method, std::optional<std::string> output_dir,
         std::optional<std::string> verbosity, bool resume) {
        RunSpec spec = spec_from_text(text);
        Overrides o;
        o.seed = seed;
        o.method = std::move(method);
        o.output_dir = std::move(output_dir);
        o.verbosity = std::move(verbosity);
        apply_overrides(spec, o);
        ExecutionResult r;
        {
          py::gil_scoped_release release;
          r = execute(spec, resume);
        }
        return py::make_tuple(r.exit_code, r.output_dir.string());
      },
      py::arg("spec_json"), py::arg("seed") = py::none(), py::arg("method") = py::none(),
      py::arg("output_dir") = py::none(), py::arg("verbosity") = py::none(),
      py::arg("resume") = false, "Runs a spec. Returns (exit_code, output_dir).");
}
