#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace fc {

inline constexpr double kEps = 1e-12;

enum class IntegratorKind { Adaptive, MonteCarlo, QuasiMonteCarlo };

struct IntegratorConfig {
  IntegratorKind kind = IntegratorKind::Adaptive;
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  int max_subdivisions = 200;
  std::size_t n_points = 1000;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  bool antithetic = false;

  static IntegratorConfig adaptive(double abs_tol = 1e-10, double rel_tol = 1e-8,
                                   int max_subdivisions = 200);
  static IntegratorConfig monte_carlo(std::size_t n, std::uint64_t seed, bool antithetic = false);
  static IntegratorConfig quasi_monte_carlo(std::size_t n);
  // Adaptive for w=1, MC(1000) for w>=2.
  static IntegratorConfig defaults_for(std::size_t w, std::uint64_t seed = 0);

  void validate() const;
};

struct IntegrationResult {
  double value = 0.0;
  double error = 0.0;  // absolute; MC standard error; NaN for QMC
  bool converged = true;
  std::size_t n_evals = 0;
};

// Fills `out` with the points in (0,1) where the integrand over coordinate
// `level` jumps, given the already fixed coordinates t[0..level).
using BreakpointFn =
    std::function<void(std::size_t level, std::span<const double> prefix, std::vector<double>& out)>;
using CubeIntegrand = std::function<double(std::span<const double>)>;

namespace detail {

struct Gk21 {
  std::array<double, 11> xk, wk;
  std::array<double, 5> wg;  // Gauss weights at xk[1], xk[3], ...
};
const Gk21& gk21();

template <class F>
void gk21_segment(F& f, double a, double b, double& value, double& err, double& resabs) {
  const auto& r = gk21();
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  std::array<double, 21> fv;
  fv[0] = f(c);
  for (int i = 1; i < 11; ++i) {
    fv[2 * i - 1] = f(c - h * r.xk[i]);
    fv[2 * i] = f(c + h * r.xk[i]);
  }
  double k = r.wk[0] * fv[0], g = 0.0, ka = std::abs(k);
  for (int i = 1; i < 11; ++i) {
    const double s = fv[2 * i - 1] + fv[2 * i];
    k += r.wk[i] * s;
    ka += r.wk[i] * (std::abs(fv[2 * i - 1]) + std::abs(fv[2 * i]));
    if (i % 2 == 1) g += r.wg[i / 2] * s;
  }
  const double mean = 0.5 * k;
  double asc = r.wk[0] * std::abs(fv[0] - mean);
  for (int i = 1; i < 11; ++i)
    asc += r.wk[i] * (std::abs(fv[2 * i - 1] - mean) + std::abs(fv[2 * i] - mean));
  value = k * h;
  resabs = ka * std::abs(h);
  const double resasc = asc * std::abs(h);
  double e = std::abs((k - g) * h);
  if (resasc != 0.0 && e != 0.0) e = resasc * std::min(1.0, std::pow(200.0 * e / resasc, 1.5));
  const double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) e = std::max(50.0 * eps * resabs, e);
  err = e;
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod 21 on [a,b], pre-split at `breaks`.
template <class F>
IntegrationResult adaptive_1d(F&& f, double a, double b, double abs_tol, double rel_tol,
                              int max_subdivisions, std::span<const double> breaks = {}) {
  struct Seg {
    double a, b, v, e;
  };
  std::vector<double> cuts{a};
  for (double x : breaks)
    if (x > a && x < b) cuts.push_back(x);
  std::sort(cuts.begin() + 1, cuts.end());
  cuts.push_back(b);
  std::vector<Seg> segs;
  segs.reserve(cuts.size() + static_cast<std::size_t>(max_subdivisions) + 1);
  IntegrationResult res;
  double total = 0.0, total_err = 0.0, resabs;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    Seg s{cuts[i], cuts[i + 1], 0.0, 0.0};
    detail::gk21_segment(f, s.a, s.b, s.v, s.e, resabs);
    res.n_evals += 21;
    segs.push_back(s);
  }
  auto cmp = [](const Seg& x, const Seg& y) { return x.e < y.e; };
  std::make_heap(segs.begin(), segs.end(), cmp);
  for (int it = 0;; ++it) {
    total = 0.0;
    total_err = 0.0;
    for (const auto& s : segs) {
      total += s.v;
      total_err += s.e;
    }
    if (total_err <= std::max(abs_tol, rel_tol * std::abs(total))) break;
    if (it >= max_subdivisions || segs.empty()) {
      res.converged = false;
      break;
    }
    std::pop_heap(segs.begin(), segs.end(), cmp);
    const Seg worst = segs.back();
    segs.pop_back();
    const double m = 0.5 * (worst.a + worst.b);
    if (!(m > worst.a && m < worst.b)) {  // cannot split further
      segs.push_back(worst);
      std::push_heap(segs.begin(), segs.end(), cmp);
      res.converged = false;
      break;
    }
    Seg l{worst.a, m, 0.0, 0.0}, r{m, worst.b, 0.0, 0.0};
    detail::gk21_segment(f, l.a, l.b, l.v, l.e, resabs);
    detail::gk21_segment(f, r.a, r.b, r.v, r.e, resabs);
    res.n_evals += 42;
    segs.push_back(l);
    std::push_heap(segs.begin(), segs.end(), cmp);
    segs.push_back(r);
    std::push_heap(segs.begin(), segs.end(), cmp);
  }
  res.value = total;
  res.error = total_err;
  return res;
}

// Integral of f over [0,1]^w. Adaptive is iterated 1-D integration over
// [eps, 1-eps]^w (coordinate 0 outermost); breakpoints only apply there.
IntegrationResult integrate_unit_cube(const CubeIntegrand& f, std::size_t w,
                                      const IntegratorConfig& config,
                                      const BreakpointFn& breakpoints = {});

}  // namespace fc
