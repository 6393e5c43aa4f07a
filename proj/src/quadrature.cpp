#include "fc/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/random/sobol.hpp>

#include "fc/errors.hpp"
#include "fc/rng.hpp"

namespace fc {

namespace detail {
const Gk21& gk21() {
  static const Gk21 table = [] {
    using boost::math::quadrature::gauss;
    using boost::math::quadrature::gauss_kronrod;
    Gk21 t{};
    const auto& xk = gauss_kronrod<double, 21>::abscissa();
    const auto& wk = gauss_kronrod<double, 21>::weights();
    const auto& wg = gauss<double, 10>::weights();
    for (int i = 0; i < 11; ++i) {
      t.xk[i] = xk[i];
      t.wk[i] = wk[i];
    }
    for (int i = 0; i < 5; ++i) t.wg[i] = wg[i];
    return t;
  }();
  return table;
}
}  // namespace detail

IntegratorConfig IntegratorConfig::adaptive(double abs_tol, double rel_tol, int max_subdivisions) {
  IntegratorConfig c;
  c.kind = IntegratorKind::Adaptive;
  c.abs_tol = abs_tol;
  c.rel_tol = rel_tol;
  c.max_subdivisions = max_subdivisions;
  return c;
}

IntegratorConfig IntegratorConfig::monte_carlo(std::size_t n, std::uint64_t seed, bool antithetic) {
  IntegratorConfig c;
  c.kind = IntegratorKind::MonteCarlo;
  c.n_points = n;
  c.seed = seed;
  c.antithetic = antithetic;
  return c;
}

IntegratorConfig IntegratorConfig::quasi_monte_carlo(std::size_t n) {
  IntegratorConfig c;
  c.kind = IntegratorKind::QuasiMonteCarlo;
  c.n_points = n;
  return c;
}

IntegratorConfig IntegratorConfig::defaults_for(std::size_t w, std::uint64_t seed) {
  return w <= 1 ? adaptive() : monte_carlo(1000, seed);
}

void IntegratorConfig::validate() const {
  if (kind == IntegratorKind::Adaptive) {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
      throw DomainError("integrator tolerances must be positive");
    if (max_subdivisions < 1) throw DomainError("max_subdivisions must be at least 1");
  } else if (n_points < 100) {
    throw DomainError("integrator needs at least 100 points");
  }
}

namespace {

struct Nested {
  const CubeIntegrand& f;
  const BreakpointFn& bp;
  std::size_t w;
  const IntegratorConfig& cfg;
  std::vector<double> t;
  std::vector<std::vector<double>> breaks;
  double inner_err_max = 0.0;
  bool all_converged = true;
  std::size_t evals = 0;

  double level(std::size_t j) {
    auto g = [&](double x) {
      t[j] = x;
      if (j + 1 == w) {
        ++evals;
        return f(std::span<const double>(t));
      }
      return level(j + 1);
    };
    auto& br = breaks[j];
    br.clear();
    if (bp) bp(j, std::span<const double>(t.data(), j), br);
    IntegrationResult r = adaptive_1d(g, kEps, 1.0 - kEps, cfg.abs_tol, cfg.rel_tol,
                                      cfg.max_subdivisions, std::span<const double>(br));
    if (!r.converged) all_converged = false;
    if (j > 0) inner_err_max = std::max(inner_err_max, r.error);
    last_err = r.error;
    return r.value;
  }
  double last_err = 0.0;
};

}  // namespace

IntegrationResult integrate_unit_cube(const CubeIntegrand& f, std::size_t w,
                                      const IntegratorConfig& cfg, const BreakpointFn& bp) {
  cfg.validate();
  if (w == 0) throw DomainError("integration dimension must be at least 1");
  IntegrationResult res;
  switch (cfg.kind) {
    case IntegratorKind::Adaptive: {
      Nested n{f, bp, w, cfg, std::vector<double>(w), std::vector<std::vector<double>>(w)};
      res.value = n.level(0);
      res.error = n.last_err + n.inner_err_max;
      res.converged = n.all_converged;
      res.n_evals = n.evals;
      break;
    }
    case IntegratorKind::MonteCarlo: {
      Rng rng(cfg.seed, cfg.stream);
      std::vector<double> t(w), s(w);
      double mean = 0.0, m2 = 0.0;
      std::size_t k = 0;
      const std::size_t draws = cfg.antithetic ? cfg.n_points / 2 : cfg.n_points;
      for (std::size_t i = 0; i < draws; ++i) {
        for (auto& x : t) x = rng.uniform();
        double v = f(std::span<const double>(t));
        if (cfg.antithetic) {
          for (std::size_t j = 0; j < w; ++j) s[j] = 1.0 - t[j];
          v = 0.5 * (v + f(std::span<const double>(s)));
        }
        ++k;
        const double delta = v - mean;
        mean += delta / static_cast<double>(k);
        m2 += delta * (v - mean);
      }
      res.value = mean;
      res.error = k > 1 ? std::sqrt(m2 / static_cast<double>(k - 1) / static_cast<double>(k)) : 0.0;
      res.n_evals = cfg.antithetic ? 2 * k : k;
      break;
    }
    case IntegratorKind::QuasiMonteCarlo: {
      // Sobol sequence, first (all-zero) point dropped, half-cell offset.
      boost::random::sobol gen(static_cast<unsigned>(w));
      gen.discard(w);
      const double scale = 1.0 / (static_cast<double>((gen.max)()) + 1.0);
      std::vector<double> t(w);
      double sum = 0.0;
      for (std::size_t i = 0; i < cfg.n_points; ++i) {
        for (auto& x : t) x = std::clamp((static_cast<double>(gen()) + 0.5) * scale, kEps, 1.0 - kEps);
        sum += f(std::span<const double>(t));
      }
      res.value = sum / static_cast<double>(cfg.n_points);
      res.error = std::numeric_limits<double>::quiet_NaN();
      res.n_evals = cfg.n_points;
      break;
    }
  }
  return res;
}

}  // namespace fc
