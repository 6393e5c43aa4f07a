#include "fc/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fc/errors.hpp"
#include "fc/parallel.hpp"

namespace fc {

namespace {

// Second attempt after a failed inverse: plain bisection with the
// conditioning value pulled further from the boundary.
double hinv_fallback(const BivariateCopula& c, double p, double v) {
  const double vv = std::clamp(v, 1e-9, 1.0 - 1e-9);
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (c.hfunc(mid, vv) < p)
      lo = mid;
    else
      hi = mid;
  }
  const double x = 0.5 * (lo + hi);
  const double res = std::abs(c.hfunc(x, vv) - p);
  if (res > 1e-6)
    throw ConvergenceError("inverse h-function failed for " + c.describe() + " at p=" +
                               std::to_string(p) + ", v=" + std::to_string(v),
                           res);
  return x;
}

double layer_inverse(const BivariateCopula& c, double p, double t) {
  switch (c.family()) {
    case Family::FrechetUpper: return t;
    case Family::FrechetLower: return 1.0 - t;
    default: break;
  }
  if (c.is_independence()) return p;
  try {
    return c.hinv(p, t);
  } catch (const ConvergenceError&) {
    return hinv_fallback(c, p, t);
  }
}

SampleMatrix run(const FactorModel& model, std::size_t n, RngHandle handle, const SampleOptions& opt) {
  const std::size_t d = model.dimension(), w = model.depth();
  const InnerCopula& inner = model.inner();
  SampleMatrix out(n, d);
  if (n == 0) return out;
  const std::size_t block = std::max<std::size_t>(1, opt.block_rows);
  const std::size_t blocks = (n + block - 1) / block;
  const bool shortcut = opt.invariance_shortcut && inner.conditionally_invariant();
  std::vector<double> fixed;
  if (shortcut) {
    inner.parameters(0.5, fixed);
    inner.check_frozen(fixed);
  }
  parallel_for(
      blocks,
      [&](std::size_t b) {
        Rng rng(substream(handle, b));
        std::vector<double> t(w), v(d), params;
        const std::size_t lo = b * block, hi = std::min(n, lo + block);
        for (std::size_t r = lo; r < hi; ++r) {
          if (shortcut) {
            inner.sample_frozen(fixed, rng, v);
            for (auto& x : t) x = rng.uniform();
          } else {
            for (auto& x : t) x = rng.uniform();
            inner.parameters(t[w - 1], params);
            inner.check_frozen(params);
            inner.sample_frozen(params, rng, v);
          }
          auto row = out.row(r);
          for (std::size_t i = 0; i < d; ++i) {
            try {
              row[i] = std::clamp(g_inverse(model, i, v[i], t), kEps, 1.0 - kEps);
            } catch (const ConvergenceError& e) {
              throw ConvergenceError("row " + std::to_string(r) + ", variable " + std::to_string(i + 1) +
                                         ": " + e.what(),
                                     e.residual());
            }
          }
        }
      },
      opt.threads);
  return out;
}

}  // namespace

double g_inverse(const FactorModel& model, std::size_t i, double p, std::span<const double> t) {
  if (i >= model.dimension()) throw DomainError("row index out of range");
  if (t.size() != model.depth()) throw DomainError("g_inverse: expected one factor value per layer");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("g_inverse: p outside [0,1]");
  double x = p;
  for (std::size_t j = model.depth(); j-- > 0;)
    x = layer_inverse(model.linking(i, j), x, std::clamp(t[j], kEps, 1.0 - kEps));
  return x;
}

SampleMatrix sample_eofc(const FactorModel& model, std::size_t n, RngHandle rng, const SampleOptions& options) {
  if (model.depth() != 1) throw DomainError("sample_eofc needs a single-layer model");
  return run(model, n, rng, options);
}

SampleMatrix sample_neofc(const FactorModel& model, std::size_t n, RngHandle rng, const SampleOptions& options) {
  return run(model, n, rng, options);
}

SampleMatrix sample(const FactorModel& model, std::size_t n, RngHandle rng, const SampleOptions& options) {
  return run(model, n, rng, options);
}

}  // namespace fc
