#include "fc/factor_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "fc/errors.hpp"

namespace fc {

namespace {

constexpr std::size_t kSmall = 32;

// Stack buffer for small sizes, heap otherwise.
struct Scratch {
  std::array<double, kSmall> small;
  std::vector<double> big;
  std::span<double> get(std::size_t n) {
    if (n <= kSmall) return {small.data(), n};
    big.resize(n);
    return {big.data(), n};
  }
};

double clamp_t(double t) { return std::clamp(t, kEps, 1.0 - kEps); }

void check_point(std::span<const double> u, std::size_t d, const char* what) {
  if (u.size() != d)
    throw DomainError(std::string(what) + ": expected " + std::to_string(d) + " coordinates, got " +
                      std::to_string(u.size()));
  for (double x : u)
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError(std::string(what) + ": coordinate outside [0,1]");
}

}  // namespace

FactorModel::FactorModel(std::size_t d, std::size_t w, std::vector<BivariateCopula> linking,
                         InnerCopula inner)
    : d_(d), w_(w), linking_(std::move(linking)), inner_(std::move(inner)) {
  if (d_ < 2) throw DomainError("model dimension must be at least 2");
  if (w_ < 1) throw DomainError("model needs at least one layer");
  if (linking_.size() != d_ * w_)
    throw DomainError("linking grid must hold d*w = " + std::to_string(d_ * w_) + " copulas");
  if (inner_.dimension() != d_)
    throw DomainError("inner copula dimension " + std::to_string(inner_.dimension()) +
                      " does not match model dimension " + std::to_string(d_));
}

FactorModel FactorModel::one_factor(std::vector<BivariateCopula> linking) {
  const std::size_t d = linking.size();
  return FactorModel(d, 1, std::move(linking), InnerCopula::independence(d));
}

FactorModel FactorModel::one_factor(std::vector<BivariateCopula> linking, InnerCopula inner) {
  const std::size_t d = linking.size();
  return FactorModel(d, 1, std::move(linking), std::move(inner));
}

bool FactorModel::density_capable() const {
  if (!inner_.density_capable()) return false;
  return std::all_of(linking_.begin(), linking_.end(), [](const BivariateCopula& c) {
    return c.is_independence() || fc::density_capable(c.family());
  });
}

bool FactorModel::sample_capable() const {
  return std::all_of(linking_.begin(), linking_.end(), [](const BivariateCopula& c) {
    return c.is_independence() || hinv_capable(c.family());
  });
}

double FactorModel::g_transform(std::size_t i, double u, std::span<const double> t) const {
  if (i >= d_) throw DomainError("row index out of range");
  if (t.size() != w_) throw DomainError("g_transform: expected one factor value per layer");
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("g_transform: u outside [0,1]");
  double x = u;
  for (std::size_t j = 0; j < w_; ++j) {
    const auto& c = linking(i, j);
    if (!c.is_independence()) x = c.hfunc(x, clamp_t(t[j]));
  }
  return x;
}

double FactorModel::g_derivative(std::size_t i, double u, std::span<const double> t) const {
  if (i >= d_) throw DomainError("row index out of range");
  if (t.size() != w_) throw DomainError("g_derivative: expected one factor value per layer");
  double x = u, der = 1.0, c;
  for (std::size_t j = 0; j < w_; ++j) {
    const auto& l = linking(i, j);
    if (l.is_independence()) continue;
    x = l.hfunc_pdf(x, clamp_t(t[j]), c);
    der *= c;
  }
  return der;
}

double FactorModel::density_integrand(std::span<const double> u, std::span<const double> t) const {
  Scratch gs, ps;
  auto g = gs.get(d_);
  double prod = 1.0, c;
  for (std::size_t i = 0; i < d_; ++i) {
    double x = u[i];
    for (std::size_t j = 0; j < w_; ++j) {
      const auto& l = linking_[i * w_ + j];
      if (l.is_independence()) continue;
      x = l.hfunc_pdf(x, clamp_t(t[j]), c);
      prod *= c;
    }
    g[i] = x;
  }
  if (prod == 0.0 || inner_.conditionally_independent()) return prod;
  auto p = ps.get(inner_.mappings().size());
  inner_.parameters(t[w_ - 1], p);
  return prod * inner_.pdf_frozen(p, g);
}

double FactorModel::cdf_integrand(std::span<const double> u, std::span<const double> t) const {
  Scratch gs, ps;
  auto g = gs.get(d_);
  for (std::size_t i = 0; i < d_; ++i) {
    double x = u[i];
    for (std::size_t j = 0; j < w_ && x > 0.0 && x < 1.0; ++j) {
      const auto& l = linking_[i * w_ + j];
      if (!l.is_independence()) x = l.hfunc(x, clamp_t(t[j]));
    }
    if (x == 0.0) return 0.0;
    g[i] = x;
  }
  if (inner_.conditionally_independent()) {
    double r = 1.0;
    for (double x : g) r *= x;
    return r;
  }
  auto p = ps.get(inner_.mappings().size());
  inner_.parameters(t[w_ - 1], p);
  return inner_.cdf_frozen(p, g);
}

void FactorModel::breakpoints(std::span<const double> u, std::size_t level,
                              std::span<const double> prefix, std::vector<double>& out) const {
  for (std::size_t i = 0; i < d_; ++i) {
    double x = u[i];
    for (std::size_t j = 0; j < level; ++j) {
      const auto& l = linking(i, j);
      if (!l.is_independence()) x = l.hfunc(x, clamp_t(prefix[j]));
    }
    linking(i, level).breakpoints(x, out);
  }
}

IntegrationResult FactorModel::density(std::span<const double> u, const IntegratorConfig& config) const {
  check_point(u, d_, "density");
  if (!density_capable())
    throw UnsupportedError("model has a linking or inner copula without a density");
  std::vector<double> uc(u.begin(), u.end());
  for (auto& x : uc) x = std::clamp(x, kEps, 1.0 - kEps);
  auto f = [&](std::span<const double> t) { return density_integrand(uc, t); };
  IntegrationResult r = integrate_unit_cube(f, w_, config);
  if (!std::isfinite(r.value))
    throw IntegrationError("density integral is not finite", r.value, r.error);
  return r;
}

IntegrationResult FactorModel::density(std::span<const double> u) const {
  return density(u, IntegratorConfig::defaults_for(w_));
}

IntegrationResult FactorModel::outer_cdf(std::span<const double> u, const IntegratorConfig& config) const {
  check_point(u, d_, "outer_cdf");
  if (!cdf_capable())
    throw UnsupportedError("inner copula has no cdf; estimate the outer cdf from samples instead");
  for (double x : u)
    if (x == 0.0) return {0.0, 0.0, true, 0};
  std::vector<double> uc(u.begin(), u.end());
  auto f = [&](std::span<const double> t) { return cdf_integrand(uc, t); };
  BreakpointFn bp = [&](std::size_t level, std::span<const double> prefix, std::vector<double>& out) {
    breakpoints(uc, level, prefix, out);
  };
  IntegrationResult r = integrate_unit_cube(f, w_, config, bp);
  if (!std::isfinite(r.value))
    throw IntegrationError("cdf integral is not finite", r.value, r.error);
  double lo = 0.0, hi = 1.0, s = 0.0;
  for (double x : u) {
    hi = std::min(hi, x);
    s += x;
  }
  if (d_ == 2) lo = std::max(s - 1.0, 0.0);
  r.value = std::clamp(r.value, lo, hi);
  return r;
}

IntegrationResult FactorModel::outer_cdf(std::span<const double> u) const {
  return outer_cdf(u, IntegratorConfig::defaults_for(w_));
}

FactorModel FactorModel::marginalize(std::span<const std::size_t> keep) const {
  if (keep.size() < 2) throw DomainError("marginal needs at least two variables");
  std::vector<bool> seen(d_, false);
  std::vector<BivariateCopula> grid;
  for (std::size_t i : keep) {
    if (i >= d_) throw DomainError("marginal index out of range");
    if (seen[i]) throw DomainError("duplicate marginal index");
    seen[i] = true;
    for (std::size_t j = 0; j < w_; ++j) grid.push_back(linking(i, j));
  }
  return FactorModel(keep.size(), w_, std::move(grid), inner_.marginalize(keep));
}

FactorModel FactorModel::with_linking(std::size_t i, std::size_t j, const BivariateCopula& c) const {
  if (i >= d_ || j >= w_) throw DomainError("linking index out of range");
  FactorModel m = *this;
  m.linking_[i * w_ + j] = c;
  return m;
}

FactorModel FactorModel::with_inner(InnerCopula inner) const {
  return FactorModel(d_, w_, linking_, std::move(inner));
}

FactorModel extract_linking(const FactorModel& model, std::size_t l, std::size_t k) {
  const std::size_t d = model.dimension(), w = model.depth();
  if (l >= d || k >= d || l == k) throw ContractError("extract_linking: need two distinct rows");
  if (!model.inner().conditionally_independent())
    throw ContractError("extract_linking: inner copula must be the independence copula");
  std::size_t found = w;
  for (std::size_t j = 0; j < w; ++j) {
    bool all_m = true, all_pi = true;
    for (std::size_t i = 0; i < d; ++i) {
      if (i == l) continue;
      const auto& c = model.linking(i, j);
      all_m = all_m && c.family() == Family::FrechetUpper;
      all_pi = all_pi && c.is_independence();
    }
    if (all_m && found == w) {
      found = j;
    } else if (!(all_pi && model.linking(l, j).is_independence())) {
      throw ContractError("extract_linking: layer " + std::to_string(j + 1) +
                          " must be comonotone outside row l or fully independent");
    }
  }
  if (found == w) throw ContractError("extract_linking: no comonotone layer found");
  const std::array<std::size_t, 2> keep{l, k};
  return model.marginalize(keep);
}

}  // namespace fc
