#include "fc/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fc/errors.hpp"
#include "fc/parallel.hpp"

namespace fc {

namespace {
double safe(double v) { return std::isnan(v) ? std::numeric_limits<double>::infinity() : v; }
}  // namespace

void Box::clamp(std::span<double> x) const {
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::clamp(x[k], lo[k], hi[k]);
}

OptimResult differential_evolution(const Objective& f, const Box& box, const DEConfig& cfg, Rng& rng) {
  const std::size_t p = box.size();
  if (p == 0) throw DomainError("nothing to optimize");
  const std::size_t np = std::max<std::size_t>(cfg.population ? cfg.population : 10 * p, 4);
  std::vector<std::vector<double>> pop(np, std::vector<double>(p)), trial = pop;
  std::vector<double> fit(np), tfit(np);
  for (auto& x : pop)
    for (std::size_t k = 0; k < p; ++k) x[k] = box.lo[k] + rng.uniform() * (box.hi[k] - box.lo[k]);
  parallel_for(np, [&](std::size_t i) { fit[i] = safe(f(pop[i])); }, cfg.threads);
  OptimResult res;
  res.evals = np;
  auto pick = [&](std::size_t exclude, std::size_t a = SIZE_MAX, std::size_t b = SIZE_MAX) {
    std::size_t r;
    do {
      r = static_cast<std::size_t>(rng.uniform() * static_cast<double>(np));
    } while (r == exclude || r == a || r == b || r >= np);
    return r;
  };
  for (std::size_t g = 0; g < cfg.generations; ++g) {
    for (std::size_t i = 0; i < np; ++i) {
      const std::size_t a = pick(i), b = pick(i, a), c = pick(i, a, b);
      const std::size_t forced = static_cast<std::size_t>(rng.uniform() * static_cast<double>(p));
      for (std::size_t k = 0; k < p; ++k) {
        double v = pop[i][k];
        if (k == forced || rng.uniform() < cfg.crossover) {
          v = pop[a][k] + cfg.weight * (pop[b][k] - pop[c][k]);
          // reflect back into the box, then fall back to a random point
          if (v < box.lo[k]) v = box.lo[k] + (box.lo[k] - v);
          if (v > box.hi[k]) v = box.hi[k] - (v - box.hi[k]);
          if (v < box.lo[k] || v > box.hi[k]) v = box.lo[k] + rng.uniform() * (box.hi[k] - box.lo[k]);
        }
        trial[i][k] = v;
      }
    }
    parallel_for(np, [&](std::size_t i) { tfit[i] = safe(f(trial[i])); }, cfg.threads);
    res.evals += np;
    for (std::size_t i = 0; i < np; ++i)
      if (tfit[i] <= fit[i]) {
        pop[i] = trial[i];
        fit[i] = tfit[i];
      }
    res.trace.push_back(*std::min_element(fit.begin(), fit.end()));
  }
  const std::size_t best = static_cast<std::size_t>(std::min_element(fit.begin(), fit.end()) - fit.begin());
  res.x = pop[best];
  res.f = fit[best];
  res.converged = std::isfinite(res.f);
  return res;
}

OptimResult nelder_mead(const Objective& f, const Box& box, std::vector<double> start, const SimplexConfig& cfg) {
  const std::size_t p = box.size();
  if (p == 0) throw DomainError("nothing to optimize");
  if (start.size() != p) throw DomainError("start point has the wrong size");
  box.clamp(start);
  std::vector<std::vector<double>> s(p + 1, start);
  for (std::size_t k = 0; k < p; ++k) {
    const double width = box.hi[k] - box.lo[k];
    double step = cfg.initial_step * width;
    if (s[k + 1][k] + step > box.hi[k]) step = -step;
    s[k + 1][k] += step;
    box.clamp(s[k + 1]);
  }
  OptimResult res;
  std::vector<double> fv(p + 1);
  auto eval = [&](std::vector<double>& x) {
    box.clamp(x);
    ++res.evals;
    return safe(f(x));
  };
  for (std::size_t i = 0; i <= p; ++i) fv[i] = eval(s[i]);
  std::vector<std::size_t> order(p + 1);
  std::vector<double> centroid(p), xr(p), xe(p), xc(p);
  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[p - 1];
    res.trace.push_back(fv[best]);
    double diam = 0.0;
    for (std::size_t i = 0; i <= p; ++i)
      for (std::size_t k = 0; k < p; ++k) diam = std::max(diam, std::abs(s[i][k] - s[best][k]));
    const double spread = fv[worst] - fv[best];
    if (std::isfinite(spread) && spread <= cfg.ftol && diam <= cfg.xtol) {
      res.converged = true;
      break;
    }
    if (diam == 0.0 && std::isfinite(fv[best])) {
      res.converged = true;
      break;
    }
    if (res.evals >= cfg.max_evals) break;
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= p; ++i)
      if (i != worst)
        for (std::size_t k = 0; k < p; ++k) centroid[k] += s[i][k] / static_cast<double>(p);
    for (std::size_t k = 0; k < p; ++k) xr[k] = centroid[k] + (centroid[k] - s[worst][k]);
    const double fr = eval(xr);
    if (fr < fv[best]) {
      for (std::size_t k = 0; k < p; ++k) xe[k] = centroid[k] + 2.0 * (centroid[k] - s[worst][k]);
      const double fe = eval(xe);
      if (fe < fr) {
        s[worst] = xe;
        fv[worst] = fe;
      } else {
        s[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      s[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    for (std::size_t k = 0; k < p; ++k)
      xc[k] = outside ? centroid[k] + 0.5 * (xr[k] - centroid[k])
                      : centroid[k] + 0.5 * (s[worst][k] - centroid[k]);
    const double fc = eval(xc);
    if (fc < (outside ? fr : fv[worst])) {
      s[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= p; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < p; ++k) s[i][k] = s[best][k] + 0.5 * (s[i][k] - s[best][k]);
      fv[i] = eval(s[i]);
    }
  }
  const std::size_t best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  res.x = s[best];
  res.f = fv[best];
  return res;
}

}  // namespace fc
