#include "fc/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "fc/errors.hpp"
#include "fc/parallel.hpp"
#include "fc/sampling.hpp"

namespace fc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTauEdge = 0.95;

std::optional<Family> slot_tau_family(const FactorModel& m, const ParamSlot& slot) {
  if (const auto* l = std::get_if<LinkingSlot>(&slot)) {
    const Family f = m.linking(l->row, l->layer).family();
    if (has_parameter(f)) return f;
    return std::nullopt;
  }
  if (const auto* s = std::get_if<MappingSlot>(&slot)) {
    const auto& inner = m.inner();
    if (!inner.mappings()[s->mapping].is_constant()) return std::nullopt;
    switch (inner.family()) {
      case InnerFamily::Clayton: return Family::Clayton;
      case InnerFamily::Gumbel: return Family::Gumbel;
      case InnerFamily::Frank: return Family::Frank;
      case InnerFamily::GaussianExchangeable: return Family::Gaussian;
      case InnerFamily::CVine: {
        const Family f = inner.pair_families()[s->mapping];
        if (has_parameter(f)) return f;
        return std::nullopt;
      }
      default: return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace

std::string slot_name(const ParamSlot& slot) {
  std::ostringstream os;
  if (const auto* l = std::get_if<LinkingSlot>(&slot)) {
    os << "linking." << l->layer + 1 << '[' << l->row + 1 << ']';
  } else if (const auto* s = std::get_if<MappingSlot>(&slot)) {
    os << "inner.mapping" << s->mapping + 1 << ".p" << s->index + 1;
  } else {
    os << "inner.factor_param";
  }
  return os.str();
}

std::vector<ParameterEntry> parameter_registry(const FactorModel& model) {
  std::vector<ParameterEntry> out;
  for (std::size_t i = 0; i < model.dimension(); ++i)
    for (std::size_t j = 0; j < model.depth(); ++j)
      if (has_parameter(model.linking(i, j).family())) {
        ParamSlot s = LinkingSlot{i, j};
        out.push_back({slot_name(s), s});
      }
  const auto& maps = model.inner().mappings();
  for (std::size_t k = 0; k < maps.size(); ++k)
    for (std::size_t q = 0; q < maps[k].params().size(); ++q) {
      ParamSlot s = MappingSlot{k, q};
      out.push_back({slot_name(s), s});
    }
  if (model.inner().factor_law().kind == FactorLawKind::Exponential) {
    ParamSlot s = FactorLawSlot{};
    out.push_back({slot_name(s), s});
  }
  return out;
}

double get_parameter(const FactorModel& model, const ParamSlot& slot) {
  if (const auto* l = std::get_if<LinkingSlot>(&slot)) {
    if (l->row >= model.dimension() || l->layer >= model.depth())
      throw DomainError("linking slot out of range");
    return model.linking(l->row, l->layer).theta();
  }
  if (const auto* s = std::get_if<MappingSlot>(&slot)) {
    const auto& maps = model.inner().mappings();
    if (s->mapping >= maps.size() || s->index >= maps[s->mapping].params().size())
      throw DomainError("mapping slot out of range");
    return maps[s->mapping].params()[s->index];
  }
  return model.inner().factor_law().lambda;
}

FactorModel set_parameter(const FactorModel& model, const ParamSlot& slot, double value) {
  if (const auto* l = std::get_if<LinkingSlot>(&slot)) {
    if (l->row >= model.dimension() || l->layer >= model.depth())
      throw DomainError("linking slot out of range");
    const Family f = model.linking(l->row, l->layer).family();
    if (!has_parameter(f))
      throw DomainError(std::string(family_name(f)) + " linking copula has no parameter");
    return model.with_linking(l->row, l->layer, BivariateCopula(f, value));
  }
  if (const auto* s = std::get_if<MappingSlot>(&slot))
    return model.with_inner(model.inner().with_mapping_param(s->mapping, s->index, value));
  return model.with_inner(model.inner().with_factor_param(value));
}

std::vector<double> flat_parameters(const FactorModel& model) {
  std::vector<double> out;
  for (const auto& e : parameter_registry(model)) out.push_back(get_parameter(model, e.slot));
  return out;
}

FactorModel with_flat_parameters(const FactorModel& model, std::span<const double> values) {
  const auto reg = parameter_registry(model);
  if (values.size() != reg.size())
    throw DomainError("expected " + std::to_string(reg.size()) + " parameters, got " +
                      std::to_string(values.size()));
  FactorModel m = model;
  for (std::size_t k = 0; k < reg.size(); ++k) m = set_parameter(m, reg[k].slot, values[k]);
  return m;
}

FitTemplate::FitTemplate(FactorModel base, std::vector<FreeParameter> free)
    : base_(std::move(base)), free_(std::move(free)) {
  for (const auto& fp : free_) {
    if (fp.slots.empty()) throw DomainError("free parameter '" + fp.name + "' has no slots");
    for (const auto& s : fp.slots) (void)get_parameter(base_, s);
  }
}

std::vector<std::string> FitTemplate::names() const {
  std::vector<std::string> out;
  for (const auto& f : free_) out.push_back(f.name);
  return out;
}

FactorModel FitTemplate::instantiate(std::span<const double> theta) const {
  if (theta.size() != free_.size())
    throw DomainError("expected " + std::to_string(free_.size()) + " parameter values, got " +
                      std::to_string(theta.size()));
  FactorModel m = base_;
  for (std::size_t k = 0; k < free_.size(); ++k)
    for (const auto& s : free_[k].slots) m = set_parameter(m, s, theta[k]);
  return m;
}

std::vector<double> FitTemplate::current() const {
  std::vector<double> out;
  for (const auto& f : free_) out.push_back(get_parameter(base_, f.slots.front()));
  return out;
}

std::optional<Family> FitTemplate::tau_family(std::size_t k) const {
  std::optional<Family> fam;
  for (const auto& s : free_.at(k).slots) {
    auto f = slot_tau_family(base_, s);
    if (!f || (fam && *fam != *f)) return std::nullopt;
    fam = f;
  }
  return fam;
}

std::pair<double, double> FitTemplate::tau_box(std::size_t k) const {
  const auto fam = tau_family(k);
  if (!fam) return native_box(k);
  const Interval r = tau_range(*fam);
  double lo = std::max(-kTauEdge, r.lo_closed ? r.lo : r.lo + 1e-9);
  double hi = std::min(kTauEdge, r.hi_closed ? r.hi : r.hi - 1e-9);
  for (const auto& s : free_[k].slots) {
    if (!std::holds_alternative<MappingSlot>(s)) continue;
    const auto& inner = base_.inner();
    const double d = static_cast<double>(inner.dimension());
    if (inner.family() == InnerFamily::GaussianExchangeable && d > 2)
      lo = std::max(lo, 2.0 / std::numbers::pi * std::asin(-1.0 / (d - 1.0)) + 1e-6);
    if (inner.family() == InnerFamily::Frank && d > 2) lo = std::max(lo, 0.0);
  }
  return {lo, hi};
}

std::pair<double, double> FitTemplate::native_box(std::size_t k) const {
  if (const auto fam = tau_family(k)) {
    const auto [lo, hi] = tau_box(k);
    return {theta_of_tau(*fam, lo), theta_of_tau(*fam, hi)};
  }
  const auto& s = free_.at(k).slots.front();
  if (std::holds_alternative<FactorLawSlot>(s)) return {0.01, 100.0};
  if (const auto* m = std::get_if<MappingSlot>(&s)) {
    switch (base_.inner().mappings()[m->mapping].kind()) {
      case MappingKind::ExpInverse: return {0.01, 100.0};
      case MappingKind::ExpDecay: return {0.0, 10.0};
      default: break;
    }
  }
  return {-10.0, 10.0};
}

LoglikResult loglik(const FactorModel& model, const SampleMatrix& pseudo, const IntegratorConfig& integrator,
                    std::size_t threads) {
  if (pseudo.cols() != model.dimension())
    throw DomainError("data has " + std::to_string(pseudo.cols()) + " columns, model has " +
                      std::to_string(model.dimension()));
  if (!model.density_capable())
    throw UnsupportedError("likelihood needs density-capable linking and inner copulas");
  const std::size_t n = pseudo.rows();
  std::vector<double> logs(n);
  std::vector<unsigned char> floored(n, 0);
  parallel_for(
      n,
      [&](std::size_t h) {
        IntegratorConfig cfg = integrator;
        cfg.stream = h;
        double v;
        try {
          v = model.density(pseudo.row(h), cfg).value;
        } catch (const IntegrationError&) {
          v = 0.0;
        }
        if (!(v > kDensityFloor) || !std::isfinite(v)) {
          v = kDensityFloor;
          floored[h] = 1;
        }
        logs[h] = std::log(v);
      },
      threads);
  LoglikResult r;
  r.n = n;
  for (std::size_t h = 0; h < n; ++h) {
    r.value += logs[h];
    r.n_floored += floored[h];
  }
  if (n > 0 && r.n_floored == n) throw NumericError("degenerate fit: every density value hit the floor");
  return r;
}

LoglikResult loglik(const FitTemplate& tmpl, const SampleMatrix& pseudo, std::span<const double> theta,
                    const IntegratorConfig& integrator, std::size_t threads) {
  return loglik(tmpl.instantiate(theta), pseudo, integrator, threads);
}

std::string_view optimizer_name(Optimizer o) {
  switch (o) {
    case Optimizer::GlobalPopulation: return "de";
    case Optimizer::LocalSimplex: return "simplex";
    case Optimizer::Both: return "both";
  }
  return "?";
}

Optimizer parse_optimizer(std::string_view s) {
  if (s == "de" || s == "global") return Optimizer::GlobalPopulation;
  if (s == "simplex" || s == "local") return Optimizer::LocalSimplex;
  if (s == "both") return Optimizer::Both;
  throw DomainError("unknown optimizer '" + std::string(s) + "'");
}

FitResult fit(const FitTemplate& tmpl, const SampleMatrix& pseudo, const FitConfig& config) {
  const std::size_t p = tmpl.size();
  const IntegratorConfig integ =
      config.integrator.value_or(IntegratorConfig::defaults_for(tmpl.base().depth(), config.seed));
  FitResult res;
  res.names = tmpl.names();
  if (p == 0) {
    auto ll = loglik(tmpl.base(), pseudo, integ, config.threads);
    res.loglik = ll.value;
    res.n_floored = ll.n_floored;
    res.n_evals = 1;
    res.converged = true;
    res.model = tmpl.base();
    return res;
  }
  std::vector<std::optional<Family>> fam(p);
  Box box;
  for (std::size_t k = 0; k < p; ++k) {
    if (config.space == ParamSpace::Auto) fam[k] = tmpl.tau_family(k);
    std::pair<double, double> b;
    if (config.bounds) {
      if (config.bounds->size() != p) throw DomainError("bounds must list one pair per free parameter");
      b = (*config.bounds)[k];
      if (fam[k]) b = {tau_of_theta(*fam[k], b.first), tau_of_theta(*fam[k], b.second)};
    } else {
      b = fam[k] ? tmpl.tau_box(k) : tmpl.native_box(k);
    }
    if (!(b.first < b.second)) throw DomainError("empty search box for '" + res.names[k] + "'");
    box.lo.push_back(b.first);
    box.hi.push_back(b.second);
  }
  auto to_native = [&](std::span<const double> z) {
    std::vector<double> th(p);
    for (std::size_t k = 0; k < p; ++k) th[k] = fam[k] ? theta_of_tau(*fam[k], z[k]) : z[k];
    return th;
  };
  auto to_search = [&](std::span<const double> th) {
    std::vector<double> z(p);
    for (std::size_t k = 0; k < p; ++k) z[k] = fam[k] ? tau_of_theta(*fam[k], th[k]) : th[k];
    box.clamp(z);
    return z;
  };
  std::atomic<std::size_t> evals{0};
  // Observations are already fanned out inside loglik, so candidate
  // evaluations run one at a time.
  Objective objective = [&](std::span<const double> z) {
    ++evals;
    try {
      return -loglik(tmpl.instantiate(to_native(z)), pseudo, integ, config.threads).value;
    } catch (const Error&) {
      return kInf;
    }
  };

  Rng rng(config.seed, 0x5eedULL);
  std::vector<double> start = to_search(config.start ? *config.start : tmpl.current());
  OptimResult best;
  best.f = kInf;
  auto take = [&](OptimResult r) {
    res.trace.insert(res.trace.end(), r.trace.begin(), r.trace.end());
    if (r.f < best.f || best.x.empty()) best = std::move(r);
  };
  if (config.optimizer != Optimizer::LocalSimplex) {
    DEConfig de = config.de;
    de.threads = 1;
    take(differential_evolution(objective, box, de, rng));
    if (config.optimizer == Optimizer::Both) start = best.x;
  }
  if (config.optimizer != Optimizer::GlobalPopulation) {
    take(nelder_mead(objective, box, start, config.simplex));
    for (std::size_t r = 0; r < config.restarts; ++r) {
      std::vector<double> x0(p);
      for (std::size_t k = 0; k < p; ++k) x0[k] = box.lo[k] + rng.uniform() * (box.hi[k] - box.lo[k]);
      take(nelder_mead(objective, box, x0, config.simplex));
    }
  }
  for (auto& t : res.trace) t = -t;
  if (!std::isfinite(best.f))
    throw NumericError("objective is not finite anywhere the optimizer looked (" +
                       std::to_string(res.trace.size()) + " iterations)");
  res.theta_hat = to_native(best.x);
  res.converged = best.converged;
  res.n_evals = evals.load();
  for (std::size_t k = 0; k < p; ++k) {
    res.tau_hat.push_back(fam[k] ? best.x[k]
                                 : (tmpl.tau_family(k) ? tau_of_theta(*tmpl.tau_family(k), res.theta_hat[k])
                                                       : std::numeric_limits<double>::quiet_NaN()));
    res.bounds.push_back(fam[k] ? std::pair{theta_of_tau(*fam[k], box.lo[k]), theta_of_tau(*fam[k], box.hi[k])}
                                : std::pair{box.lo[k], box.hi[k]});
  }
  res.model = tmpl.instantiate(res.theta_hat);
  const auto ll = loglik(*res.model, pseudo, integ, config.threads);
  res.loglik = ll.value;
  res.n_floored = ll.n_floored;
  return res;
}

namespace {

struct ScoreModels {
  std::vector<FactorModel> plus, minus;
  std::vector<double> steps;
};

ScoreModels build_score_models(const FitTemplate& tmpl, std::span<const double> theta, double rel,
                               std::vector<std::string>& notes) {
  ScoreModels sm;
  const std::size_t p = tmpl.size();
  for (std::size_t k = 0; k < p; ++k) {
    double h = rel * (theta[k] == 0.0 ? 1.0 : std::abs(theta[k]));
    const auto box = tmpl.native_box(k);
    bool shrunk = false;
    for (int attempt = 0;; ++attempt) {
      std::vector<double> a(theta.begin(), theta.end()), b = a;
      a[k] += h;
      b[k] -= h;
      bool ok = true;
      try {
        sm.plus.push_back(tmpl.instantiate(a));
        sm.minus.push_back(tmpl.instantiate(b));
      } catch (const DomainError&) {
        ok = false;
        if (sm.plus.size() > sm.minus.size()) sm.plus.pop_back();
      }
      if (ok && tmpl.tau_family(k) && (a[k] > box.second + 1e-12 || b[k] < box.first - 1e-12) && attempt < 30) {
        // inside the family domain but outside the search box: allowed, just noted
      }
      if (ok) break;
      if (attempt >= 40) throw DomainError("no admissible finite-difference step for '" + tmpl.names()[k] + "'");
      h *= 0.5;
      shrunk = true;
    }
    if (shrunk)
      notes.push_back("step for '" + tmpl.names()[k] + "' shrunk to " + std::to_string(h) +
                      " to stay inside the parameter domain");
    sm.steps.push_back(h);
  }
  return sm;
}

double safe_log_density(const FactorModel& m, std::span<const double> u, const IntegratorConfig& cfg) {
  double v;
  try {
    v = m.density(u, cfg).value;
  } catch (const IntegrationError&) {
    v = 0.0;
  }
  return std::log(std::max(v, kDensityFloor));
}

void scores_at(const ScoreModels& sm, std::span<const double> u, const IntegratorConfig& cfg,
               std::span<double> out) {
  for (std::size_t k = 0; k < sm.steps.size(); ++k)
    out[k] = (safe_log_density(sm.plus[k], u, cfg) - safe_log_density(sm.minus[k], u, cfg)) / (2.0 * sm.steps[k]);
}

}  // namespace

FisherResult fisher_information(const FitTemplate& tmpl, std::span<const double> theta_r, const FisherConfig& cfg) {
  const std::size_t p = tmpl.size();
  if (p == 0) throw DomainError("fisher information needs at least one free parameter");
  if (theta_r.size() != p) throw DomainError("theta_r has the wrong length");
  const FactorModel model_r = tmpl.instantiate(theta_r);
  const std::size_t d = model_r.dimension(), w = model_r.depth();
  FisherResult res;
  res.method = cfg.method;
  ScoreModels sm = build_score_models(tmpl, theta_r, cfg.rel_step, res.notes);
  res.steps = sm.steps;
  const IntegratorConfig dens = cfg.density_integrator.value_or(
      w == 1 ? IntegratorConfig::adaptive(1e-13, 1e-11, 400) : IntegratorConfig::monte_carlo(1000, cfg.seed));
  res.matrix = Matrix(p, p);
  res.std_error = Matrix(p, p);

  if (cfg.method == FisherMethod::SampleBased) {
    const SampleMatrix u = sample(model_r, cfg.n, RngHandle{cfg.seed, 0}, {.threads = cfg.threads});
    Matrix s(cfg.n, p);
    parallel_for(
        cfg.n,
        [&](std::size_t h) {
          IntegratorConfig c = dens;
          c.stream = h;
          scores_at(sm, u.row(h), c, s.row(h));
        },
        cfg.threads);
    const double n = static_cast<double>(cfg.n);
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = a; b < p; ++b) {
        double m = 0.0, m2 = 0.0;
        for (std::size_t h = 0; h < cfg.n; ++h) {
          const double x = s(h, a) * s(h, b);
          m += x;
          m2 += x * x;
        }
        m /= n;
        const double var = std::max(0.0, m2 / n - m * m);
        res.matrix(a, b) = res.matrix(b, a) = m;
        res.std_error(a, b) = res.std_error(b, a) = std::sqrt(var / n);
      }
    res.n = cfg.n;
  } else {
    IntegratorConfig ucfg = cfg.u_integrator.value_or(IntegratorConfig::quasi_monte_carlo(cfg.n));
    if (ucfg.kind == IntegratorKind::MonteCarlo) ucfg.seed = cfg.seed;
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = a; b < p; ++b) {
        std::size_t calls = 0;
        auto f = [&](std::span<const double> u) {
          IntegratorConfig c = dens;
          c.stream = calls++;
          std::vector<double> sc(p);
          scores_at(sm, u, c, sc);
          return sc[a] * sc[b] * std::exp(safe_log_density(model_r, u, c));
        };
        const auto r = integrate_unit_cube(f, d, ucfg);
        res.matrix(a, b) = res.matrix(b, a) = r.value;
        const double e = std::isnan(r.error) ? 0.0 : r.error;
        res.std_error(a, b) = res.std_error(b, a) = e;
        if (!r.converged) res.notes.push_back("u-integral for entry (" + std::to_string(a + 1) + "," +
                                              std::to_string(b + 1) + ") did not reach tolerance");
      }
    res.n = ucfg.kind == IntegratorKind::Adaptive ? 0 : ucfg.n_points;
  }
  res.determinant = determinant(res.matrix);
  return res;
}

}  // namespace fc
