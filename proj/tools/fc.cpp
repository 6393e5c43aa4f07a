// fc: command-line front end for factor copula models.
#include <CLI11.hpp>
#include <json.hpp>

#include <boost/version.hpp>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fc/citest.hpp"
#include "fc/errors.hpp"
#include "fc/inference.hpp"
#include "fc/model_io.hpp"
#include "fc/parallel.hpp"
#include "fc/ranks.hpp"
#include "fc/sampling.hpp"

#ifndef FC_VERSION
#define FC_VERSION "0.0.0"
#endif

using json = nlohmann::ordered_json;

namespace {

class UsageError : public fc::Error {
 public:
  using fc::Error::Error;
  const char* kind() const noexcept override { return "usage"; }
  int exit_code() const noexcept override { return 2; }
};

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex(std::uint64_t x) {
  std::ostringstream os;
  os << std::hex << x;
  return os.str();
}

struct Globals {
  std::size_t threads = 0;
  std::string int_kind;
  std::size_t int_points = 0;
  double int_tol = 0.0;
  std::string manifest;
};

struct Run {
  std::string command;
  std::vector<std::string> argv;
  std::optional<std::uint64_t> seed;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, contents digest
  std::vector<std::string> outputs;
  json extra = json::object();
  std::uint64_t digest = 1469598103934665603ULL;

  std::string read_input(const std::string& path) {
    std::string text = fc::read_text_file(path);
    digest = fnv1a(text, digest);
    inputs.emplace_back(path, hex(fnv1a(text)));
    return text;
  }
};

std::optional<fc::IntegratorConfig> integrator_from(const Globals& g, std::optional<std::uint64_t> seed) {
  if (g.int_kind.empty() && g.int_points == 0 && g.int_tol == 0.0) return std::nullopt;
  fc::IntegratorConfig c;
  const std::string kind = g.int_kind.empty() ? "adaptive" : g.int_kind;
  if (kind == "adaptive") {
    c = fc::IntegratorConfig::adaptive();
    if (g.int_tol > 0.0) c.abs_tol = c.rel_tol = g.int_tol;
  } else if (kind == "mc") {
    if (!seed) throw UsageError("--int-kind mc needs --seed");
    c = fc::IntegratorConfig::monte_carlo(g.int_points ? g.int_points : 1000, *seed);
  } else if (kind == "qmc") {
    c = fc::IntegratorConfig::quasi_monte_carlo(g.int_points ? g.int_points : 1024);
  } else {
    throw UsageError("--int-kind must be adaptive, mc or qmc");
  }
  c.validate();
  return c;
}

json integrator_json(const std::optional<fc::IntegratorConfig>& c) {
  if (!c) return "default";
  json j;
  j["kind"] = c->kind == fc::IntegratorKind::Adaptive ? "adaptive"
              : c->kind == fc::IntegratorKind::MonteCarlo ? "mc"
                                                          : "qmc";
  j["abs_tol"] = c->abs_tol;
  j["rel_tol"] = c->rel_tol;
  j["n_points"] = c->n_points;
  return j;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(fc::parse_double(item.substr(item.find_first_not_of(' ') == std::string::npos
                                                     ? 0
                                                     : item.find_first_not_of(' '))));
    } catch (const fc::DomainError&) {
      throw UsageError("bad number list '" + s + "'");
    }
  }
  return out;
}

void emit(const std::string& text, const std::string& out, Run& run) {
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out);
    if (!f) throw fc::DomainError("cannot write '" + out + "'");
    f << text;
    run.outputs.push_back(out);
  }
}

std::string csv_text(const fc::Matrix& m, const std::vector<std::string>& header) {
  std::ostringstream os;
  fc::write_csv(os, m, header);
  return os.str();
}

void write_manifest(const Run& run, const Globals& g, const std::string& out,
                    const std::optional<fc::IntegratorConfig>& integ) {
  json m;
  m["tool"] = "fc";
  m["version"] = FC_VERSION;
  m["command"] = run.command;
  m["argv"] = run.argv;
  m["seed"] = run.seed ? json(*run.seed) : json(nullptr);
  m["threads"] = g.threads ? g.threads : fc::default_threads();
  m["integrator"] = integrator_json(integ);
  json inputs = json::array();
  for (const auto& [p, d] : run.inputs) inputs.push_back({{"path", p}, {"fnv1a", d}});
  m["inputs"] = inputs;
  m["outputs"] = run.outputs;
  std::uint64_t h = run.digest;
  for (const auto& a : run.argv) h = fnv1a(a + '\0', h);
  m["config_digest"] = hex(h);
  m["build"] = {{"compiler", __VERSION__}, {"boost", BOOST_LIB_VERSION}};
  if (!run.extra.empty()) m["summary"] = run.extra;
  std::string path = g.manifest;
  if (path.empty()) path = out.empty() ? "fc-" + run.command + ".manifest.json" : out + ".manifest.json";
  std::ofstream f(path);
  if (!f) throw fc::DomainError("cannot write manifest '" + path + "'");
  f << m.dump(2) << '\n';
}

json fit_json(const fc::FitResult& r) {
  json j;
  j["names"] = r.names;
  j["theta"] = r.theta_hat;
  json taus = json::array();
  for (double t : r.tau_hat) taus.push_back(std::isnan(t) ? json(nullptr) : json(t));
  j["tau"] = taus;
  json b = json::array();
  for (auto [lo, hi] : r.bounds) b.push_back({lo, hi});
  j["bounds"] = b;
  j["loglik"] = r.loglik;
  j["n_evals"] = r.n_evals;
  j["n_floored"] = r.n_floored;
  j["converged"] = r.converged;
  return j;
}

json read_json_config(Run& run, const std::string& path) {
  const std::string text = run.read_input(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw fc::ParseError(e.what(), 0, static_cast<int>(e.byte));
  }
}

std::uint64_t seed_from(const std::optional<std::uint64_t>& flag, const json& cfg) {
  if (flag) return *flag;
  if (cfg.contains("seed")) return cfg["seed"].get<std::uint64_t>();
  throw UsageError("a seed is required: pass --seed or set \"seed\" in the config");
}

fc::BivariateCopula copula_from_json(const json& j) {
  const fc::Family f = fc::parse_family(j.at("family").get<std::string>());
  if (j.contains("tau")) return fc::BivariateCopula::from_tau(f, j["tau"].get<double>());
  return fc::BivariateCopula(f, j.value("theta", 0.0));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Factor copula models: simulation, densities, fitting and tests", "fc"};
  app.set_version_flag("--version", FC_VERSION);
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--threads", g.threads, "Worker threads (default: all cores)")->check(CLI::PositiveNumber);
  app.add_option("--int-kind", g.int_kind, "Integrator: adaptive, mc or qmc")
      ->check(CLI::IsMember({"adaptive", "mc", "qmc"}));
  app.add_option("--int-points", g.int_points, "Points for mc / qmc integration");
  app.add_option("--int-tol", g.int_tol, "Tolerance for adaptive integration");
  app.add_option("--manifest", g.manifest, "Manifest path (default: beside the output)");

  Run run;
  for (int k = 0; k < argc; ++k) run.argv.emplace_back(argv[k]);
  std::optional<std::uint64_t> seed;
  std::string model_path, data_path, out, config_path;

  auto* sim = app.add_subcommand("simulate", "Draw a sample from a model");
  std::size_t n = 0;
  bool no_shortcut = false;
  sim->add_option("--model", model_path, "Model file")->required();
  sim->add_option("--n", n, "Number of rows")->required()->check(CLI::PositiveNumber);
  sim->add_option("--seed", seed, "RNG seed")->required();
  sim->add_option("--out", out, "Output CSV (default: stdout)");
  sim->add_flag("--no-shortcut", no_shortcut, "Always evaluate the factor mapping per row");

  auto* dens = app.add_subcommand("density", "Evaluate the outer density or cdf");
  std::vector<std::string> at;
  bool cdf = false;
  dens->add_option("--model", model_path, "Model file")->required();
  dens->add_option("--at", at, "Point u1,...,ud (repeatable)");
  dens->add_option("--points", data_path, "CSV of points");
  dens->add_flag("--cdf", cdf, "Evaluate the outer cdf instead");
  dens->add_option("--seed", seed, "Seed for mc integration");
  dens->add_option("--out", out, "Output CSV (default: stdout)");

  auto* fitc = app.add_subcommand("fit", "Maximum pseudo-likelihood fit of the free parameters");
  std::string optimizer = "simplex", space = "auto";
  std::size_t restarts = 0;
  fitc->add_option("--model", model_path, "Model file with free markers")->required();
  fitc->add_option("--data", data_path, "Data CSV (ranked internally)")->required();
  fitc->add_option("--optimizer", optimizer, "de, simplex or both")->check(CLI::IsMember({"de", "simplex", "both"}));
  fitc->add_option("--restarts", restarts, "Extra random simplex starts");
  fitc->add_option("--space", space, "auto (tau where available) or native")
      ->check(CLI::IsMember({"auto", "native"}));
  fitc->add_option("--seed", seed, "RNG seed")->required();
  fitc->add_option("--out", out, "Fitted model file with a [fit] section (default: stdout)");

  auto* ci = app.add_subcommand("citest", "Bootstrap test of conditional independence");
  std::string linking, side = "left";
  std::size_t boot = 200;
  double alpha = 0.1;
  ci->add_option("--data", data_path, "Data CSV")->required();
  ci->add_option("--linking", linking, "Linking families, comma separated")->required();
  ci->add_option("--N", boot, "Bootstrap samples")->check(CLI::PositiveNumber);
  ci->add_option("--alpha", alpha, "Risk level");
  ci->add_option("--side", side, "left (positive alternative) or right")->check(CLI::IsMember({"left", "right"}));
  ci->add_option("--seed", seed, "RNG seed")->required();
  ci->add_option("--out", out, "Result JSON with bootstrap statistics (default: stdout)");

  auto* pw = app.add_subcommand("power-study", "Rejection rates of the conditional-independence test");
  pw->add_option("--config", config_path, "JSON scenario")->required();
  pw->add_option("--out", out, "Output CSV")->required();
  pw->add_option("--seed", seed, "RNG seed (overrides the config)");

  auto* scan = app.add_subcommand("conjecture-scan", "Grid check of outer < inner for bivariate models");
  std::size_t grid = 0, mc_points = 0;
  scan->add_option("--config", config_path, "JSON setups")->required();
  scan->add_option("--grid", grid, "Grid points per axis (default 10)")->check(CLI::PositiveNumber);
  scan->add_option("--mc-points", mc_points, "Monte Carlo points per cdf value");
  scan->add_option("--out", out, "Output CSV")->required();
  scan->add_option("--seed", seed, "RNG seed (overrides the config)");

  auto* fi = app.add_subcommand("fisher", "Numerical Fisher information of the free parameters");
  std::string method = "sample", theta_list;
  std::size_t fisher_n = 100000;
  double rel_step = 1e-4;
  fi->add_option("--model", model_path, "Model file with free markers")->required();
  fi->add_option("--at", theta_list, "Parameter values (default: the model file's)");
  fi->add_option("--method", method, "sample or quadrature")->check(CLI::IsMember({"sample", "quadrature"}));
  fi->add_option("--n", fisher_n, "Sample size or qmc points")->check(CLI::PositiveNumber);
  fi->add_option("--rel-step", rel_step, "Relative finite-difference step");
  fi->add_option("--seed", seed, "RNG seed")->required();
  fi->add_option("--out", out, "Result JSON (default: stdout)");

  auto* tau = app.add_subcommand("tau", "Empirical Kendall tau matrix");
  tau->add_option("--data", data_path, "Data CSV")->required();
  tau->add_option("--out", out, "Output CSV (default: stdout)");

  std::optional<fc::IntegratorConfig> integ;
  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      throw UsageError(e.what());
    }
    fc::set_default_threads(g.threads);
    run.command = app.get_subcommands().front()->get_name();
    run.seed = seed;
    integ = integrator_from(g, seed);

    if (*sim) {
      const auto pm = fc::parse_model_spec(run.read_input(model_path));
      fc::SampleOptions opts;
      opts.invariance_shortcut = !no_shortcut;
      const auto s = fc::sample(pm.model, n, {*seed, 0}, opts);
      emit(csv_text(s, {}), out, run);
    } else if (*dens) {
      const auto pm = fc::parse_model_spec(run.read_input(model_path));
      const std::size_t d = pm.model.dimension();
      std::vector<std::vector<double>> pts;
      for (const auto& a : at) pts.push_back(parse_list(a));
      if (!data_path.empty()) {
        std::istringstream in(run.read_input(data_path));
        const auto t = fc::read_csv(in);
        for (std::size_t r = 0; r < t.values.rows(); ++r)
          pts.emplace_back(t.values.row(r).begin(), t.values.row(r).end());
      }
      if (pts.empty()) throw UsageError("density needs --at or --points");
      fc::Matrix res(pts.size(), d + 2);
      for (std::size_t r = 0; r < pts.size(); ++r) {
        if (pts[r].size() != d)
          throw fc::DomainError("point " + std::to_string(r + 1) + " has " + std::to_string(pts[r].size()) +
                                " coordinates, model dimension is " + std::to_string(d));
        const auto v = integ ? (cdf ? pm.model.outer_cdf(pts[r], *integ) : pm.model.density(pts[r], *integ))
                             : (cdf ? pm.model.outer_cdf(pts[r]) : pm.model.density(pts[r]));
        for (std::size_t i = 0; i < d; ++i) res(r, i) = pts[r][i];
        res(r, d) = v.value;
        res(r, d + 1) = v.error;
        if (v.error > 1e-4 * std::abs(v.value))
          std::cerr << "fc: warning: integration error " << v.error << " above 1e-4 relative at point " << r + 1
                    << '\n';
      }
      std::vector<std::string> header;
      for (std::size_t i = 0; i < d; ++i) header.push_back("u" + std::to_string(i + 1));
      header.push_back(cdf ? "cdf" : "density");
      header.push_back("error");
      emit(csv_text(res, header), out, run);
    } else if (*fitc) {
      const auto pm = fc::parse_model_spec(run.read_input(model_path));
      if (!pm.has_free()) throw fc::DomainError("model file marks no parameter as free");
      std::istringstream in(run.read_input(data_path));
      const auto data = fc::read_csv(in).values;
      fc::FitConfig cfg;
      cfg.optimizer = fc::parse_optimizer(optimizer);
      cfg.restarts = restarts;
      cfg.seed = *seed;
      cfg.space = space == "native" ? fc::ParamSpace::Native : fc::ParamSpace::Auto;
      cfg.integrator = integ;
      cfg.threads = g.threads;
      const auto r = fc::fit(pm.fit_template(), fc::pseudo_observations(data), cfg);
      std::ostringstream os;
      os << fc::print_model_spec(*r.model) << "\n[fit]\nloglik = " << fc::format_double(r.loglik)
         << "\nconverged = " << (r.converged ? "true" : "false") << "\nn_evals = " << r.n_evals
         << "\nn_floored = " << r.n_floored << "\noptimizer = " << optimizer << '\n';
      for (std::size_t k = 0; k < r.names.size(); ++k) {
        os << "theta." << r.names[k] << " = " << fc::format_double(r.theta_hat[k]) << '\n';
        if (!std::isnan(r.tau_hat[k])) os << "tau." << r.names[k] << " = " << fc::format_double(r.tau_hat[k]) << '\n';
        os << "bounds." << r.names[k] << " = " << fc::format_double(r.bounds[k].first) << ", "
           << fc::format_double(r.bounds[k].second) << '\n';
      }
      run.extra = {{"loglik", r.loglik}, {"converged", r.converged}};
      emit(os.str(), out, run);
    } else if (*ci) {
      std::istringstream in(run.read_input(data_path));
      const auto data = fc::read_csv(in).values;
      std::vector<fc::Family> fams;
      std::stringstream ss(linking);
      for (std::string item; std::getline(ss, item, ',');) {
        item.erase(0, item.find_first_not_of(' '));
        item.erase(item.find_last_not_of(' ') + 1);
        fams.push_back(fc::parse_family(item));
      }
      fc::CITestConfig cfg;
      cfg.bootstrap = boot;
      cfg.alpha = alpha;
      cfg.side = fc::parse_side(side);
      cfg.seed = *seed;
      cfg.threads = g.threads;
      cfg.fit.integrator = integ;
      const auto r = fc::ci_test(data, fams, cfg);
      json j;
      j["t_obs"] = r.t_obs;
      j["p_value"] = r.p_value;
      j["reject"] = r.reject;
      j["alpha"] = r.alpha;
      j["side"] = std::string(fc::side_name(r.side));
      j["h0_fit"] = fit_json(r.h0_fit);
      j["bootstrap"] = r.bootstrap;
      run.extra = {{"p_value", r.p_value}, {"reject", r.reject}};
      emit(j.dump(2) + "\n", out, run);
    } else if (*pw) {
      const json c = read_json_config(run, config_path);
      const std::uint64_t s = seed_from(seed, c);
      run.seed = s;
      fc::PowerScenario sc;
      sc.sizes = c.value("sizes", sc.sizes);
      sc.betas = c.value("betas", sc.betas);
      sc.linking_taus = c.value("linking_taus", sc.linking_taus);
      if (c.contains("linking_family")) sc.linking_family = fc::parse_family(c["linking_family"].get<std::string>());
      sc.replications = c.value("replications", sc.replications);
      sc.bootstrap = c.value("bootstrap", sc.bootstrap);
      sc.alpha = c.value("alpha", sc.alpha);
      if (c.contains("side")) sc.side = fc::parse_side(c["side"].get<std::string>());
      const auto rows = fc::power_study(sc, s, g.threads);
      fc::Matrix m(rows.size(), 5);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        m(r, 0) = static_cast<double>(rows[r].n);
        m(r, 1) = rows[r].beta;
        m(r, 2) = rows[r].power;
        m(r, 3) = static_cast<double>(rows[r].rejections);
        m(r, 4) = static_cast<double>(rows[r].replications);
      }
      emit(csv_text(m, {"n", "beta", "power", "rejections", "replications"}), out, run);
    } else if (*scan) {
      const json c = read_json_config(run, config_path);
      const std::uint64_t s = seed_from(seed, c);
      run.seed = s;
      std::vector<fc::ScanSetup> setups;
      if (c.contains("setups")) {
        for (const auto& e : c["setups"])
          setups.push_back({copula_from_json(e.at("inner")), copula_from_json(e.at("c1")), copula_from_json(e.at("c2"))});
      } else {
        for (const auto& a : c.at("inner"))
          for (const auto& b : c.at("c1"))
            for (const auto& d : c.at("c2"))
              setups.push_back({copula_from_json(a), copula_from_json(b), copula_from_json(d)});
      }
      fc::ScanConfig sc;
      sc.grid = grid ? grid : c.value("grid", sc.grid);
      sc.mc_points = mc_points ? mc_points : c.value("mc_points", sc.mc_points);
      sc.antithetic = c.value("antithetic", false);
      sc.seed = s;
      sc.threads = g.threads;
      const auto rows = fc::conjecture_scan(setups, sc);
      std::ostringstream os;
      os << "inner,c1,c2,mean_p,max_p,points,skipped\n";
      for (const auto& r : rows)
        os << r.setup.inner.describe() << ',' << r.setup.c1.describe() << ',' << r.setup.c2.describe() << ','
           << fc::format_double(r.mean_p) << ',' << fc::format_double(r.max_p) << ',' << r.points << ','
           << r.skipped << '\n';
      emit(os.str(), out, run);
    } else if (*fi) {
      const auto pm = fc::parse_model_spec(run.read_input(model_path));
      if (!pm.has_free()) throw fc::DomainError("model file marks no parameter as free");
      const auto tmpl = pm.fit_template();
      const std::vector<double> theta = theta_list.empty() ? tmpl.current() : parse_list(theta_list);
      fc::FisherConfig cfg;
      cfg.method = method == "sample" ? fc::FisherMethod::SampleBased : fc::FisherMethod::QuadratureBased;
      cfg.n = fisher_n;
      cfg.seed = *seed;
      cfg.rel_step = rel_step;
      cfg.density_integrator = integ;
      cfg.threads = g.threads;
      const auto r = fc::fisher_information(tmpl, theta, cfg);
      json j;
      j["names"] = tmpl.names();
      j["theta"] = theta;
      json mat = json::array(), se = json::array();
      for (std::size_t a = 0; a < r.matrix.rows(); ++a) {
        std::vector<double> row, srow;
        for (std::size_t b = 0; b < r.matrix.cols(); ++b) {
          row.push_back(r.matrix(a, b));
          srow.push_back(r.std_error(a, b));
        }
        mat.push_back(row);
        se.push_back(srow);
      }
      j["information"] = mat;
      j["std_error"] = se;
      j["determinant"] = r.determinant;
      j["method"] = method;
      j["n"] = r.n;
      j["steps"] = r.steps;
      j["notes"] = r.notes;
      run.extra = {{"determinant", r.determinant}};
      emit(j.dump(2) + "\n", out, run);
    } else if (*tau) {
      std::istringstream in(run.read_input(data_path));
      const auto t = fc::read_csv(in);
      std::vector<std::string> header = t.header;
      if (header.empty())
        for (std::size_t c = 0; c < t.values.cols(); ++c) header.push_back("u" + std::to_string(c + 1));
      emit(csv_text(fc::kendall_tau_matrix(t.values), header), out, run);
    }
    write_manifest(run, g, out, integ);
    return 0;
  } catch (const fc::Error& e) {
    std::cerr << "fc: error kind=" << e.kind() << " code=" << e.exit_code() << ": " << e.what() << '\n';
    return e.exit_code();
  } catch (const json::exception& e) {
    std::cerr << "fc: error kind=parse code=3: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "fc: error kind=numeric code=4: " << e.what() << '\n';
    return 4;
  }
}
