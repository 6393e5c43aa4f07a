#include "fc/bicop.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/owens_t.hpp>

#include "fc/errors.hpp"
#include "fc/quadrature.hpp"

namespace fc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct FamilyInfo {
  Family family;
  std::string_view name;
  bool param;
  bool density;
  bool hinv;
};

constexpr std::array<FamilyInfo, 11> kFamilies{{
    {Family::Independence, "indep", false, true, true},
    {Family::FrechetUpper, "m", false, false, false},
    {Family::FrechetLower, "w", false, false, false},
    {Family::Clayton, "clayton", true, true, true},
    {Family::Frank, "frank", true, true, true},
    {Family::Gumbel, "gumbel", true, true, true},
    {Family::Gaussian, "gaussian", true, true, true},
    {Family::FGM, "fgm", true, true, true},
    {Family::AMH, "amh", true, true, true},
    {Family::Mardia, "mardia", true, false, true},
    {Family::Plackett, "plackett", true, true, true},
}};

const FamilyInfo& info(Family f) {
  for (const auto& i : kFamilies)
    if (i.family == f) return i;
  throw DomainError("unknown family");
}

double clamp_open(double x) { return std::clamp(x, kEps, 1.0 - kEps); }

void check_unit(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0))
    throw DomainError(std::string(what) + " must lie in [0,1], got " + std::to_string(x));
}

// log(a^-theta + b^-theta - 1) given la = log a, lb = log b (theta >= 0).
double clayton_log_s(double theta, double la, double lb) {
  const double x = -theta * la, y = -theta * lb;
  const double m = std::max(x, y);
  if (m < 50.0) return std::log1p(std::expm1(x) + std::expm1(y));
  return m + std::log(std::exp(x - m) + std::exp(y - m) - std::exp(-m));
}

// (x^theta + y^theta)^(1/theta) without overflow.
double gumbel_a(double theta, double x, double y) {
  const double m = std::max(x, y), n = std::min(x, y);
  if (m == 0.0) return 0.0;
  return m * std::pow(1.0 + std::pow(n / m, theta), 1.0 / theta);
}

double debye1(double x) {
  if (x == 0.0) return 1.0;
  auto f = [](double t) { return t == 0.0 ? 1.0 : t / std::expm1(t); };
  auto r = adaptive_1d(f, 0.0, x, 1e-15, 1e-14, 200);
  return r.value / x;
}

double frank_tau(double theta) {
  const double a = std::abs(theta);
  double t;
  if (a < 1e-3) {
    t = a / 9.0 - a * a * a / 900.0;
  } else {
    t = 1.0 - 4.0 / a * (1.0 - debye1(a));
  }
  return theta < 0 ? -t : t;
}

double amh_tau(double theta) {
  if (std::abs(theta) < 1e-4) return 2.0 * theta / 9.0 + theta * theta / 18.0;
  return 1.0 - 2.0 * (theta + (1.0 - theta) * (1.0 - theta) * std::log1p(-theta)) /
                   (3.0 * theta * theta);
}

double plackett_tau(const BivariateCopula& c) {
  // tau = 1 - 4 * int int dC/du * dC/dv
  auto inner = [&](double v) {
    auto g = [&](double u) { return c.hfunc(u, v) * c.hfunc(v, u); };
    return adaptive_1d(g, 0.0, 1.0, 1e-13, 1e-11, 400).value;
  };
  auto r = adaptive_1d(inner, kEps, 1.0 - kEps, 1e-12, 1e-10, 400);
  return 1.0 - 4.0 * r.value;
}

// Monotone increasing g; find x in [lo,hi] with g(x)=target.
template <class G>
double bisect(G&& g, double lo, double hi, double target) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::string_view family_name(Family f) { return info(f).name; }

Family parse_family(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  for (const auto& i : kFamilies)
    if (i.name == s) return i.family;
  if (s == "independence" || s == "pi") return Family::Independence;
  if (s == "gumbelhougaard" || s == "gumbel-hougaard") return Family::Gumbel;
  if (s == "normal") return Family::Gaussian;
  throw DomainError("unknown copula family '" + std::string(name) + "'");
}

bool has_parameter(Family f) { return info(f).param; }
bool density_capable(Family f) { return info(f).density; }
bool hinv_capable(Family f) { return info(f).hinv; }

Interval theta_domain(Family f) {
  switch (f) {
    case Family::Clayton: return {0.0, kInf, true, false};
    case Family::Frank: return {-kInf, kInf, false, false};
    case Family::Gumbel: return {1.0, kInf, true, false};
    case Family::Gaussian: return {-1.0, 1.0, false, false};
    case Family::FGM: return {-1.0, 1.0, true, true};
    case Family::AMH: return {-1.0, 1.0, true, false};
    case Family::Mardia: return {-1.0, 1.0, true, true};
    case Family::Plackett: return {0.0, kInf, false, false};
    default: return {0.0, 0.0, true, true};
  }
}

Interval tau_range(Family f) {
  switch (f) {
    case Family::Clayton:
    case Family::Gumbel: return {0.0, 1.0, true, false};
    case Family::Frank:
    case Family::Gaussian:
    case Family::Plackett: return {-1.0, 1.0, false, false};
    case Family::FGM: return {-2.0 / 9.0, 2.0 / 9.0, true, true};
    case Family::AMH: return {amh_tau(-1.0), 1.0 / 3.0, true, false};
    case Family::Mardia: return {-1.0, 1.0, true, true};
    case Family::FrechetUpper: return {1.0, 1.0, true, true};
    case Family::FrechetLower: return {-1.0, -1.0, true, true};
    default: return {0.0, 0.0, true, true};
  }
}

double tau_of_theta(Family f, double theta) { return BivariateCopula(f, theta).tau(); }

double theta_of_tau(Family f, double tau) {
  const Interval r = tau_range(f);
  if (!has_parameter(f)) {
    if (tau == r.lo) return 0.0;
    throw DomainError(std::string(family_name(f)) + " has no parameter; tau is fixed at " +
                      std::to_string(r.lo));
  }
  if (!std::isfinite(tau) || !r.contains(tau))
    throw DomainError("tau " + std::to_string(tau) + " outside the attainable range of " +
                      std::string(family_name(f)));
  switch (f) {
    case Family::Clayton: return 2.0 * tau / (1.0 - tau);
    case Family::Gumbel: return 1.0 / (1.0 - tau);
    case Family::Gaussian: return std::sin(std::numbers::pi * tau / 2.0);
    case Family::FGM: return 4.5 * tau;
    case Family::Frank: {
      if (tau == 0.0) return 0.0;
      const double a = std::abs(tau);
      double hi = 1.0;
      while (frank_tau(hi) < a) hi *= 2.0;
      const double th = bisect(frank_tau, 0.0, hi, a);
      return tau < 0 ? -th : th;
    }
    case Family::AMH: return bisect(amh_tau, -1.0, 1.0 - 1e-15, tau);
    case Family::Mardia:
      return bisect([](double t) { return t * t * t * (t * t + 2.0) / 3.0; }, -1.0, 1.0, tau);
    case Family::Plackett: {
      if (tau == 0.0) return 1.0;
      auto g = [](double lt) { return plackett_tau(BivariateCopula(Family::Plackett, std::exp(lt))); };
      double lo = -1.0, hi = 1.0;
      while (g(lo) > tau) lo *= 2.0;
      while (g(hi) < tau) hi *= 2.0;
      return std::exp(bisect(g, lo, hi, tau));
    }
    default: break;
  }
  throw DomainError("no tau map for family");
}

BivariateCopula::BivariateCopula(Family family, double theta) : family_(family), theta_(theta) {
  if (!has_parameter(family)) {
    theta_ = 0.0;
    eval_ = family;
    return;
  }
  const Interval dom = theta_domain(family);
  if (!std::isfinite(theta) || !dom.contains(theta)) {
    std::ostringstream os;
    os << family_name(family) << " parameter " << theta << " outside domain "
       << (dom.lo_closed ? "[" : "(") << dom.lo << ", " << dom.hi << (dom.hi_closed ? "]" : ")");
    throw DomainError(os.str());
  }
  eval_ = family;
  switch (family) {
    case Family::Clayton:
    case Family::Frank:
    case Family::Gaussian:
    case Family::FGM:
    case Family::AMH:
    case Family::Mardia:
      if (theta == 0.0) eval_ = Family::Independence;
      break;
    case Family::Gumbel:
    case Family::Plackett:
      if (theta == 1.0) eval_ = Family::Independence;
      break;
    default: break;
  }
  if (eval_ == Family::Frank) k_ = std::expm1(-theta);
  if (eval_ == Family::Gaussian) k_ = std::sqrt(1.0 - theta * theta);
}

BivariateCopula BivariateCopula::from_tau(Family family, double tau) {
  return BivariateCopula(family, theta_of_tau(family, tau));
}

std::string BivariateCopula::describe() const {
  std::ostringstream os;
  os << family_name(family_);
  if (has_parameter(family_)) os << '(' << theta_ << ')';
  return os.str();
}

double BivariateCopula::cdf(double u, double v) const {
  check_unit(u, "u");
  check_unit(v, "v");
  if (u == 0.0 || v == 0.0) return 0.0;
  if (u == 1.0) return v;
  if (v == 1.0) return u;
  const double th = theta_;
  double c;
  switch (eval_) {
    case Family::Independence: c = u * v; break;
    case Family::FrechetUpper: c = std::min(u, v); break;
    case Family::FrechetLower: c = std::max(u + v - 1.0, 0.0); break;
    case Family::Clayton:
      c = std::exp(-clayton_log_s(th, std::log(u), std::log(v)) / th);
      break;
    case Family::Frank: {
      const double a = std::expm1(-th * u), b = std::expm1(-th * v);
      c = -std::log1p(a * b / k_) / th;
      break;
    }
    case Family::Gumbel: c = std::exp(-gumbel_a(th, -std::log(u), -std::log(v))); break;
    case Family::Gaussian:
      c = bivariate_normal_cdf(normal_quantile(u), normal_quantile(v), th);
      break;
    case Family::FGM: c = u * v * (1.0 + th * (1.0 - u) * (1.0 - v)); break;
    case Family::AMH: c = u * v / (1.0 - th * (1.0 - u) * (1.0 - v)); break;
    case Family::Mardia: {
      const double t2 = th * th;
      c = t2 * (1.0 + th) / 2.0 * std::min(u, v) + (1.0 - t2) * u * v +
          t2 * (1.0 - th) / 2.0 * std::max(u + v - 1.0, 0.0);
      break;
    }
    case Family::Plackett: {
      const double s = 1.0 + (th - 1.0) * (u + v);
      const double r = std::sqrt(s * s - 4.0 * th * (th - 1.0) * u * v);
      // (s - r) / (2(th-1)) rewritten to avoid cancellation
      c = 2.0 * th * u * v / (s + r);
      break;
    }
    default: c = u * v;
  }
  return std::clamp(c, std::max(u + v - 1.0, 0.0), std::min(u, v));
}

double BivariateCopula::pdf(double u, double v) const {
  if (!density_capable(eval_))
    throw UnsupportedError(std::string("no density for family ") + std::string(family_name(family_)));
  check_unit(u, "u");
  check_unit(v, "v");
  u = clamp_open(u);
  v = clamp_open(v);
  const double th = theta_;
  switch (eval_) {
    case Family::Independence: return 1.0;
    case Family::Clayton: {
      const double lu = std::log(u), lv = std::log(v);
      return std::exp(std::log1p(th) - (th + 1.0) * (lu + lv) -
                      (2.0 + 1.0 / th) * clayton_log_s(th, lu, lv));
    }
    case Family::Frank: {
      const double a = std::expm1(-th * u), b = std::expm1(-th * v);
      const double den = k_ + a * b;
      return -th * k_ * std::exp(-th * (u + v)) / (den * den);
    }
    case Family::Gumbel: {
      const double x = -std::log(u), y = -std::log(v);
      const double a = gumbel_a(th, x, y);
      return std::exp(-a) / (u * v) * std::pow(x / a, th - 1.0) * std::pow(y / a, th - 1.0) *
             (a + th - 1.0) / a;
    }
    case Family::Gaussian: {
      const double x = normal_quantile(u), y = normal_quantile(v);
      const double r2 = th * th;
      return std::exp(-(r2 * (x * x + y * y) - 2.0 * th * x * y) / (2.0 * (1.0 - r2))) / k_;
    }
    case Family::FGM: return 1.0 + th * (1.0 - 2.0 * u) * (1.0 - 2.0 * v);
    case Family::AMH: {
      const double d = 1.0 - th * (1.0 - u) * (1.0 - v);
      return (1.0 + th * ((1.0 + u) * (1.0 + v) - 3.0) + th * th * (1.0 - u) * (1.0 - v)) /
             (d * d * d);
    }
    case Family::Plackett: {
      const double s = 1.0 + (th - 1.0) * (u + v);
      const double r = std::sqrt(s * s - 4.0 * th * (th - 1.0) * u * v);
      return th * (1.0 + (th - 1.0) * (u + v - 2.0 * u * v)) / (r * r * r);
    }
    default: break;
  }
  throw UnsupportedError("no density");
}

double BivariateCopula::hfunc(double u, double v) const {
  if (!(v > 0.0 && v < 1.0))
    throw BoundaryError("hfunc conditioning value must lie in (0,1), got " + std::to_string(v));
  check_unit(u, "u");
  if (u == 0.0) return 0.0;
  if (u == 1.0) return 1.0;
  v = clamp_open(v);
  const double th = theta_;
  double h;
  switch (eval_) {
    case Family::Independence: return u;
    case Family::FrechetUpper: return u >= v ? 1.0 : 0.0;
    case Family::FrechetLower: return u >= 1.0 - v ? 1.0 : 0.0;
    case Family::Mardia: {
      const double t2 = th * th;
      return t2 * (1.0 + th) / 2.0 * (u >= v ? 1.0 : 0.0) + (1.0 - t2) * u +
             t2 * (1.0 - th) / 2.0 * (u >= 1.0 - v ? 1.0 : 0.0);
    }
    case Family::Clayton: {
      const double lu = std::log(u), lv = std::log(v);
      h = std::exp(-(th + 1.0) * lv - (1.0 / th + 1.0) * clayton_log_s(th, lu, lv));
      break;
    }
    case Family::Frank: {
      const double a = std::expm1(-th * u), b = std::expm1(-th * v);
      h = (b + 1.0) * a / (k_ + a * b);
      break;
    }
    case Family::Gumbel: {
      const double x = -std::log(u), y = -std::log(v);
      const double a = gumbel_a(th, x, y);
      h = std::exp(-a) * std::pow(y / a, th - 1.0) / v;
      break;
    }
    case Family::Gaussian:
      h = normal_cdf((normal_quantile(u) - th * normal_quantile(v)) / k_);
      break;
    case Family::FGM: h = u * (1.0 + th * (1.0 - u) * (1.0 - 2.0 * v)); break;
    case Family::AMH: {
      const double d = 1.0 - th * (1.0 - u) * (1.0 - v);
      h = u * (1.0 - th * (1.0 - u)) / (d * d);
      break;
    }
    case Family::Plackett: {
      const double s = 1.0 + (th - 1.0) * (u + v);
      const double r = std::sqrt(s * s - 4.0 * th * (th - 1.0) * u * v);
      h = 0.5 * (1.0 - (s - 2.0 * th * u) / r);
      break;
    }
    default: h = u;
  }
  return std::clamp(h, 0.0, 1.0);
}

double BivariateCopula::hfunc_pdf(double u, double v, double& density) const {
  switch (eval_) {
    case Family::Independence:
      density = 1.0;
      return hfunc(u, v);
    case Family::Frank: {
      if (!(v > 0.0 && v < 1.0)) break;
      const double uu = clamp_open(u), vv = clamp_open(v);
      const double th = theta_;
      const double a = std::expm1(-th * uu), b = std::expm1(-th * vv);
      const double den = k_ + a * b;
      density = -th * k_ * (a + 1.0) * (b + 1.0) / (den * den);
      return std::clamp((b + 1.0) * a / den, 0.0, 1.0);
    }
    case Family::Clayton: {
      if (!(v > 0.0 && v < 1.0)) break;
      const double uu = clamp_open(u), vv = clamp_open(v);
      const double th = theta_;
      const double lu = std::log(uu), lv = std::log(vv);
      const double ls = clayton_log_s(th, lu, lv);
      density = std::exp(std::log1p(th) - (th + 1.0) * (lu + lv) - (2.0 + 1.0 / th) * ls);
      return std::clamp(std::exp(-(th + 1.0) * lv - (1.0 / th + 1.0) * ls), 0.0, 1.0);
    }
    default: break;
  }
  density = pdf(u, v);
  return hfunc(u, v);
}

double BivariateCopula::hinv(double p, double v) const {
  if (!(v > 0.0 && v < 1.0))
    throw BoundaryError("hinv conditioning value must lie in (0,1), got " + std::to_string(v));
  if (eval_ == Family::FrechetUpper || eval_ == Family::FrechetLower)
    throw UnsupportedError(std::string("no inverse h-function for family ") +
                           std::string(family_name(family_)));
  check_unit(p, "p");
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  v = clamp_open(v);
  const double th = theta_;
  switch (eval_) {
    case Family::Independence: return p;
    case Family::Clayton: {
      const double e1 = std::expm1(-th / (th + 1.0) * std::log(p));
      const double b = -th * std::log(v);
      double l1p;
      if (b < 600.0)
        l1p = std::log1p(std::exp(b) * e1);
      else
        l1p = b + std::log(e1);
      return std::clamp(std::exp(-l1p / th), 0.0, 1.0);
    }
    case Family::Frank: {
      const double b = std::expm1(-th * v);
      const double a = p * k_ / (1.0 + b * (1.0 - p));
      return std::clamp(-std::log1p(a) / th, 0.0, 1.0);
    }
    case Family::Gaussian:
      return normal_cdf(normal_quantile(p) * k_ + th * normal_quantile(v));
    case Family::FGM: {
      const double a = th * (1.0 - 2.0 * v);
      const double q = 1.0 + a;
      return std::clamp(2.0 * p / (q + std::sqrt(q * q - 4.0 * a * p)), 0.0, 1.0);
    }
    case Family::Mardia: return mardia_hinv(p, v);
    default: return hinv_numeric(p, v);
  }
}

double BivariateCopula::mardia_hinv(double p, double v) const {
  const double th = theta_, t2 = th * th;
  const double slope = 1.0 - t2;
  std::array<std::pair<double, double>, 2> jumps{{{v, t2 * (1.0 + th) / 2.0},
                                                  {1.0 - v, t2 * (1.0 - th) / 2.0}}};
  std::sort(jumps.begin(), jumps.end());
  double base = 0.0, prev = 0.0;
  auto in_segment = [&](double end, double& out) {
    if (p <= base + slope * end) {
      out = slope > 0.0 ? std::max(prev, (p - base) / slope) : prev;
      return true;
    }
    return false;
  };
  double out;
  for (const auto& [pos, size] : jumps) {
    if (in_segment(pos, out)) return out;
    base += size;
    if (p <= base + slope * pos) return pos;
    prev = pos;
  }
  if (in_segment(1.0, out)) return std::min(out, 1.0);
  return 1.0;
}

// Safeguarded Newton on [0,1]; pdf is the derivative of hfunc in u.
double BivariateCopula::hinv_numeric(double p, double v) const {
  double lo = 0.0, hi = 1.0, x = p, fx = 0.0;
  for (int it = 0; it < 200; ++it) {
    fx = hfunc(x, v) - p;
    if (std::abs(fx) <= 1e-14) return x;
    if (fx < 0)
      lo = x;
    else
      hi = x;
    if (hi - lo <= 1e-16) return x;
    const double d = pdf(x, v);
    double nx = (d > 0.0 && std::isfinite(d)) ? x - fx / d : lo - 1.0;
    if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
    x = nx;
  }
  fx = hfunc(x, v) - p;
  if (std::abs(fx) > 1e-9)
    throw ConvergenceError("inverse h-function did not converge for " + describe(), std::abs(fx));
  return x;
}

double BivariateCopula::tau() const {
  const double th = theta_;
  switch (eval_) {
    case Family::Independence: return 0.0;
    case Family::FrechetUpper: return 1.0;
    case Family::FrechetLower: return -1.0;
    case Family::Clayton: return th / (th + 2.0);
    case Family::Frank: return frank_tau(th);
    case Family::Gumbel: return 1.0 - 1.0 / th;
    case Family::Gaussian: return 2.0 / std::numbers::pi * std::asin(th);
    case Family::FGM: return 2.0 * th / 9.0;
    case Family::AMH: return amh_tau(th);
    case Family::Mardia: return th * th * th * (th * th + 2.0) / 3.0;
    case Family::Plackett: return plackett_tau(*this);
    default: return 0.0;
  }
}

void BivariateCopula::breakpoints(double u, std::vector<double>& out) const {
  switch (eval_) {
    case Family::FrechetUpper: out.push_back(u); break;
    case Family::FrechetLower: out.push_back(1.0 - u); break;
    case Family::Mardia:
      out.push_back(u);
      out.push_back(1.0 - u);
      break;
    default: break;
  }
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double bivariate_normal_cdf(double h, double k, double rho) {
  if (h == -kInf || k == -kInf) return 0.0;
  if (h == kInf) return normal_cdf(k);
  if (k == kInf) return normal_cdf(h);
  if (rho == 0.0) return normal_cdf(h) * normal_cdf(k);
  if (h == 0.0) h = 1e-300;
  if (k == 0.0) k = 1e-300;
  const double s = std::sqrt(1.0 - rho * rho);
  const double ah = (k - rho * h) / (h * s), ak = (h - rho * k) / (k * s);
  const double beta = ((h > 0.0) == (k > 0.0)) ? 0.0 : 0.5;
  using boost::math::owens_t;
  double r = 0.5 * normal_cdf(h) + 0.5 * normal_cdf(k) - owens_t(h, ah) - owens_t(k, ak) - beta;
  return std::clamp(r, 0.0, std::min(normal_cdf(h), normal_cdf(k)));
}

}  // namespace fc
