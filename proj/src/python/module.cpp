#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <string>
#include <vector>

#include "fc/bicop.hpp"
#include "fc/citest.hpp"
#include "fc/errors.hpp"
#include "fc/factor_model.hpp"
#include "fc/inference.hpp"
#include "fc/model_io.hpp"
#include "fc/ranks.hpp"
#include "fc/sampling.hpp"

namespace py = pybind11;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

fc::Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw fc::DomainError("expected a 2-d array");
  fc::Matrix m(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

Array to_array(const fc::Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

// Evaluate `f` on every row of a (k, d) array, or on a single point.
template <class F>
py::object per_row(const Array& u, std::size_t d, F f) {
  if (u.ndim() == 1) {
    if (std::size_t(u.shape(0)) != d) throw fc::DomainError("point has the wrong dimension");
    return py::float_(f(std::span<const double>(u.data(), d)));
  }
  const auto m = to_matrix(u);
  if (m.cols() != d) throw fc::DomainError("points have the wrong dimension");
  py::array_t<double> out(m.rows());
  auto* o = out.mutable_data();
  for (std::size_t r = 0; r < m.rows(); ++r) o[r] = f(m.row(r));
  return out;
}

fc::IntegratorConfig integrator(const fc::FactorModel& m, const std::string& kind, std::size_t points,
                                std::uint64_t seed) {
  if (kind == "auto") return fc::IntegratorConfig::defaults_for(m.depth(), seed);
  if (kind == "adaptive") return fc::IntegratorConfig::adaptive();
  if (kind == "mc") return fc::IntegratorConfig::monte_carlo(points, seed);
  if (kind == "qmc") return fc::IntegratorConfig::quasi_monte_carlo(points);
  throw fc::DomainError("integrator must be auto, adaptive, mc or qmc");
}

py::dict fit_dict(const fc::FitResult& r) {
  py::dict d;
  d["names"] = r.names;
  d["theta"] = r.theta_hat;
  d["tau"] = r.tau_hat;
  d["loglik"] = r.loglik;
  d["n_evals"] = r.n_evals;
  d["n_floored"] = r.n_floored;
  d["converged"] = r.converged;
  if (r.model) d["model"] = fc::print_model_spec(*r.model);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Factor copula models: evaluation, simulation, fitting and tests";
  m.attr("__version__") = FC_VERSION;

  py::register_exception<fc::Error>(m, "FcError", PyExc_ValueError);

  py::class_<fc::BivariateCopula>(m, "BivariateCopula")
      .def(py::init([](const std::string& family, double theta) {
             return fc::BivariateCopula(fc::parse_family(family), theta);
           }),
           py::arg("family"), py::arg("theta") = 0.0)
      .def_static(
          "from_tau",
          [](const std::string& family, double tau) { return fc::BivariateCopula::from_tau(fc::parse_family(family), tau); },
          py::arg("family"), py::arg("tau"))
      .def_property_readonly("family", [](const fc::BivariateCopula& c) { return std::string(fc::family_name(c.family())); })
      .def_property_readonly("theta", &fc::BivariateCopula::theta)
      .def("tau", &fc::BivariateCopula::tau)
      .def("cdf", py::vectorize([](fc::BivariateCopula& c, double u, double v) { return c.cdf(u, v); }))
      .def("pdf", py::vectorize([](fc::BivariateCopula& c, double u, double v) { return c.pdf(u, v); }))
      .def("hfunc", py::vectorize([](fc::BivariateCopula& c, double u, double v) { return c.hfunc(u, v); }))
      .def("hinv", py::vectorize([](fc::BivariateCopula& c, double p, double v) { return c.hinv(p, v); }))
      .def("__repr__", [](const fc::BivariateCopula& c) { return "BivariateCopula(" + c.describe() + ")"; });

  py::class_<fc::FactorModel>(m, "FactorModel")
      .def_static(
          "from_spec", [](const std::string& text) { return fc::parse_model_spec(text).model; }, py::arg("text"),
          "Build a model from model-file text.")
      .def_static(
          "load", [](const std::string& path) { return fc::load_model_spec(path).model; }, py::arg("path"))
      .def_property_readonly("dimension", &fc::FactorModel::dimension)
      .def_property_readonly("depth", &fc::FactorModel::depth)
      .def("to_spec", [](const fc::FactorModel& self) { return fc::print_model_spec(self); })
      .def(
          "density",
          [](const fc::FactorModel& self, const Array& u, const std::string& kind, std::size_t points,
             std::uint64_t seed) {
            const auto cfg = integrator(self, kind, points, seed);
            return per_row(u, self.dimension(), [&](std::span<const double> x) { return self.density(x, cfg).value; });
          },
          py::arg("u"), py::arg("integrator") = "auto", py::arg("points") = 1000, py::arg("seed") = 0)
      .def(
          "cdf",
          [](const fc::FactorModel& self, const Array& u, const std::string& kind, std::size_t points,
             std::uint64_t seed) {
            const auto cfg = integrator(self, kind, points, seed);
            return per_row(u, self.dimension(), [&](std::span<const double> x) { return self.outer_cdf(x, cfg).value; });
          },
          py::arg("u"), py::arg("integrator") = "auto", py::arg("points") = 1000, py::arg("seed") = 0)
      .def(
          "sample",
          [](const fc::FactorModel& self, std::size_t n, std::uint64_t seed, std::size_t threads) {
            fc::SampleOptions opt;
            opt.threads = threads;
            fc::SampleMatrix s;
            {
              py::gil_scoped_release release;
              s = fc::sample(self, n, {seed, 0}, opt);
            }
            return to_array(s);
          },
          py::arg("n"), py::arg("seed"), py::arg("threads") = 0)
      .def("__eq__", [](const fc::FactorModel& a, const fc::FactorModel& b) { return a == b; });

  m.def(
      "pseudo_observations", [](const Array& x) { return to_array(fc::pseudo_observations(to_matrix(x))); },
      py::arg("data"));
  m.def(
      "kendall_tau_matrix", [](const Array& x) { return to_array(fc::kendall_tau_matrix(to_matrix(x))); },
      py::arg("data"));
  m.def(
      "t_statistic", [](const Array& x) { return fc::t_statistic(to_matrix(x)); }, py::arg("pseudo"));

  m.def(
      "fit",
      [](const std::string& spec, const Array& data, std::uint64_t seed, const std::string& optimizer,
         std::size_t restarts, std::size_t threads) {
        const auto pm = fc::parse_model_spec(spec);
        if (!pm.has_free()) throw fc::DomainError("model marks no parameter as free");
        fc::FitConfig cfg;
        cfg.seed = seed;
        cfg.optimizer = fc::parse_optimizer(optimizer);
        cfg.restarts = restarts;
        cfg.threads = threads;
        const auto pseudo = fc::pseudo_observations(to_matrix(data));
        fc::FitResult r;
        {
          py::gil_scoped_release release;
          r = fc::fit(pm.fit_template(), pseudo, cfg);
        }
        return fit_dict(r);
      },
      py::arg("spec"), py::arg("data"), py::arg("seed"), py::arg("optimizer") = "simplex", py::arg("restarts") = 0,
      py::arg("threads") = 0, "Fit the free entries of a model-file text to raw data (ranked here).");

  m.def(
      "ci_test",
      [](const Array& data, const std::vector<std::string>& linking, std::size_t bootstrap, double alpha,
         const std::string& side, std::uint64_t seed, std::size_t threads) {
        std::vector<fc::Family> fams;
        for (const auto& s : linking) fams.push_back(fc::parse_family(s));
        fc::CITestConfig cfg;
        cfg.bootstrap = bootstrap;
        cfg.alpha = alpha;
        cfg.side = fc::parse_side(side);
        cfg.seed = seed;
        cfg.threads = threads;
        const auto x = to_matrix(data);
        fc::CITestResult r;
        {
          py::gil_scoped_release release;
          r = fc::ci_test(x, fams, cfg);
        }
        py::dict d;
        d["t_obs"] = r.t_obs;
        d["p_value"] = r.p_value;
        d["reject"] = r.reject;
        d["bootstrap"] = r.bootstrap;
        d["h0_fit"] = fit_dict(r.h0_fit);
        return d;
      },
      py::arg("data"), py::arg("linking"), py::arg("bootstrap") = 200, py::arg("alpha") = 0.1, py::arg("side") = "left",
      py::arg("seed") = 0, py::arg("threads") = 0);

  m.def(
      "fisher_information",
      [](const std::string& spec, std::vector<double> theta, const std::string& method, std::size_t n,
         std::uint64_t seed, double rel_step) {
        const auto pm = fc::parse_model_spec(spec);
        if (!pm.has_free()) throw fc::DomainError("model marks no parameter as free");
        const auto tmpl = pm.fit_template();
        if (theta.empty()) theta = tmpl.current();
        fc::FisherConfig cfg;
        if (method == "quadrature") cfg.method = fc::FisherMethod::QuadratureBased;
        else if (method != "sample") throw fc::DomainError("method must be sample or quadrature");
        cfg.n = n;
        cfg.seed = seed;
        cfg.rel_step = rel_step;
        fc::FisherResult r;
        {
          py::gil_scoped_release release;
          r = fc::fisher_information(tmpl, theta, cfg);
        }
        py::dict d;
        d["names"] = tmpl.names();
        d["theta"] = theta;
        d["information"] = to_array(r.matrix);
        d["std_error"] = to_array(r.std_error);
        d["determinant"] = r.determinant;
        d["notes"] = r.notes;
        return d;
      },
      py::arg("spec"), py::arg("theta") = std::vector<double>{}, py::arg("method") = "sample",
      py::arg("n") = 100000, py::arg("seed") = 0, py::arg("rel_step") = 1e-4);
}
