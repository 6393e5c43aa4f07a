#include "fc/innercop.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

// pchip.hpp in Boost 1.74 calls isnan unqualified.
namespace boost::math::interpolators {
using std::isnan;
}
#include <boost/math/interpolators/pchip.hpp>

#include "fc/errors.hpp"
#include "fc/quadrature.hpp"

namespace fc {

namespace {

using Pchip = boost::math::interpolators::pchip<std::vector<double>>;

struct Table {
  std::vector<double> x, y;
  std::unique_ptr<Pchip> spline;  // null when fewer than 4 knots (linear then)

  double operator()(double u) const {
    u = std::clamp(u, x.front(), x.back());
    if (spline) return (*spline)(u);
    auto it = std::upper_bound(x.begin(), x.end(), u);
    if (it == x.end()) return y.back();
    const std::size_t i = static_cast<std::size_t>(it - x.begin());
    if (i == 0) return y.front();
    const double w = (u - x[i - 1]) / (x[i] - x[i - 1]);
    return y[i - 1] + w * (y[i] - y[i - 1]);
  }
};

constexpr std::array<std::pair<MappingKind, std::string_view>, 7> kMappingNames{{
    {MappingKind::Constant, "constant"},
    {MappingKind::OneMinusU, "one_minus_u"},
    {MappingKind::ParetoInverse, "pareto_inverse"},
    {MappingKind::ClaytonTauInverse, "clayton_tau_inverse"},
    {MappingKind::ExpInverse, "exp_inverse"},
    {MappingKind::ExpDecay, "exp_decay"},
    {MappingKind::UserTable, "table"},
}};

constexpr std::array<std::pair<InnerFamily, std::string_view>, 7> kInnerNames{{
    {InnerFamily::Independence, "indep"},
    {InnerFamily::GaussianExchangeable, "gaussian"},
    {InnerFamily::Clayton, "clayton"},
    {InnerFamily::Gumbel, "gumbel"},
    {InnerFamily::Frank, "frank"},
    {InnerFamily::FrechetUpper, "m"},
    {InnerFamily::CVine, "cvine"},
}};

// Grid of factor values used to validate mapping outputs.
const std::vector<double>& validation_grid() {
  static const std::vector<double> g = [] {
    std::vector<double> v{kEps, 1e-9, 1e-6, 1e-3, 0.01};
    for (int i = 1; i < 20; ++i) v.push_back(i / 20.0);
    for (double x : {0.99, 0.999, 1.0 - 1e-6, 1.0 - 1e-9, 1.0 - kEps}) v.push_back(x);
    return v;
  }();
  return g;
}

double log_sum_clayton(double beta, std::span<const double> v) {
  // log(sum v_i^-beta - d + 1)
  double m = 0.0;
  for (double x : v) m = std::max(m, -beta * std::log(x));
  if (m < 50.0) {
    double s = 0.0;
    for (double x : v) s += std::expm1(-beta * std::log(x));
    return std::log1p(s);
  }
  double s = -(static_cast<double>(v.size()) - 1.0) * std::exp(-m);
  for (double x : v) s += std::exp(-beta * std::log(x) - m);
  return m + std::log(s);
}

// Eulerian numbers A(m, j), j = 0..m-1.
std::vector<double> eulerian_row(std::size_t m) {
  std::vector<double> row{1.0};
  for (std::size_t n = 2; n <= m; ++n) {
    std::vector<double> next(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double a = j < row.size() ? row[j] : 0.0;
      const double b = j >= 1 && j - 1 < row.size() ? row[j - 1] : 0.0;
      next[j] = static_cast<double>(j + 1) * a + static_cast<double>(n - j) * b;
    }
    row = std::move(next);
  }
  return row;
}

double binom(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

}  // namespace

double FactorLaw::quantile(double u0) const {
  switch (kind) {
    case FactorLawKind::Uniform: return u0;
    case FactorLawKind::Exponential: return -std::log1p(-u0) / lambda;
    case FactorLawKind::Pareto: return 1.0 / (1.0 - u0);
  }
  return u0;
}

void FactorLaw::validate() const {
  if (kind == FactorLawKind::Exponential && !(lambda > 0.0 && std::isfinite(lambda)))
    throw DomainError("exponential factor law needs a positive rate");
}

std::string_view mapping_name(MappingKind k) {
  for (const auto& [kind, name] : kMappingNames)
    if (kind == k) return name;
  return "?";
}

MappingKind parse_mapping(std::string_view name) {
  for (const auto& [kind, n] : kMappingNames)
    if (n == name) return kind;
  throw DomainError("unknown factor mapping '" + std::string(name) + "'");
}

std::size_t mapping_param_count(MappingKind k, std::size_t given) {
  switch (k) {
    case MappingKind::Constant:
    case MappingKind::ExpInverse: return 1;
    case MappingKind::ExpDecay: return 2;
    case MappingKind::UserTable: return given;
    default: return 0;
  }
}

FactorMapping::FactorMapping(MappingKind kind, std::vector<double> params)
    : kind_(kind), params_(std::move(params)) {
  for (double p : params_)
    if (!std::isfinite(p)) throw DomainError("mapping parameters must be finite");
  if (kind_ == MappingKind::UserTable) {
    if (params_.size() < 4 || params_.size() % 2 != 0)
      throw DomainError("table mapping needs at least two (u0, theta) pairs");
    auto t = std::make_shared<Table>();
    for (std::size_t i = 0; i < params_.size(); i += 2) {
      t->x.push_back(params_[i]);
      t->y.push_back(params_[i + 1]);
    }
    for (std::size_t i = 1; i < t->x.size(); ++i)
      if (!(t->x[i] > t->x[i - 1])) throw DomainError("table mapping knots must increase in u0");
    if (t->x.size() >= 4) t->spline = std::make_unique<Pchip>(std::vector<double>(t->x), std::vector<double>(t->y));
    table_ = std::move(t);
    return;
  }
  if (params_.size() != mapping_param_count(kind_, params_.size()))
    throw DomainError("mapping " + std::string(mapping_name(kind_)) + " expects " +
                      std::to_string(mapping_param_count(kind_, 0)) + " parameter(s)");
  if (kind_ == MappingKind::ExpInverse && !(params_[0] > 0.0))
    throw DomainError("exp_inverse rate must be positive");
}

double FactorMapping::operator()(double u0, const FactorLaw& law) const {
  switch (kind_) {
    case MappingKind::Constant: return params_[0];
    case MappingKind::OneMinusU: return 1.0 - u0;
    case MappingKind::ParetoInverse: return 1.0 / (1.0 - u0);
    case MappingKind::ClaytonTauInverse: return 2.0 * u0 / (1.0 - u0);
    case MappingKind::ExpInverse: return -std::log1p(-u0) / params_[0];
    case MappingKind::ExpDecay: return std::exp(-params_[0] - params_[1] * law.quantile(u0));
    case MappingKind::UserTable: return (*static_cast<const Table*>(table_.get()))(u0);
  }
  return params_[0];
}

std::string_view inner_family_name(InnerFamily f) {
  for (const auto& [fam, name] : kInnerNames)
    if (fam == f) return name;
  return "?";
}

InnerFamily parse_inner_family(std::string_view name) {
  for (const auto& [fam, n] : kInnerNames)
    if (n == name) return fam;
  if (name == "independence" || name == "pi") return InnerFamily::Independence;
  if (name == "gaussian_exchangeable" || name == "normal") return InnerFamily::GaussianExchangeable;
  throw DomainError("unknown inner family '" + std::string(name) + "'");
}

InnerCopula::InnerCopula(InnerFamily family, std::size_t dim, std::vector<FactorMapping> mappings,
                         FactorLaw law, std::vector<Family> pair_families)
    : family_(family),
      dim_(dim),
      mappings_(std::move(mappings)),
      law_(law),
      pair_families_(std::move(pair_families)) {
  validate();
}

InnerCopula InnerCopula::bivariate(const BivariateCopula& c) {
  return InnerCopula(InnerFamily::CVine, 2, {FactorMapping::constant(c.theta())}, {}, {c.family()});
}

void InnerCopula::validate() const {
  if (dim_ < 2) throw DomainError("inner copula dimension must be at least 2");
  law_.validate();
  std::size_t want = 0;
  switch (family_) {
    case InnerFamily::Independence:
    case InnerFamily::FrechetUpper: want = 0; break;
    case InnerFamily::CVine:
      if (pair_families_.size() != dim_ - 1)
        throw DomainError("cvine inner copula needs " + std::to_string(dim_ - 1) + " pair families");
      want = dim_ - 1;
      break;
    default: want = 1;
  }
  if (mappings_.size() != want)
    throw DomainError(std::string(inner_family_name(family_)) + " inner copula expects " +
                      std::to_string(want) + " mapping(s), got " + std::to_string(mappings_.size()));
  if (family_ == InnerFamily::Frank && dim_ > 2)
    for (const auto& m : mappings_)
      if (m.kind() == MappingKind::Constant && m.params()[0] < 0.0)
        throw DomainError("frank inner copula with d > 2 needs a nonnegative parameter");
  std::vector<double> p;
  for (double u0 : validation_grid()) {
    parameters(u0, p);
    check_frozen(p);
  }
}

bool InnerCopula::conditionally_invariant() const {
  return std::all_of(mappings_.begin(), mappings_.end(), [](const auto& m) { return m.is_constant(); });
}

bool InnerCopula::density_capable() const {
  if (family_ == InnerFamily::FrechetUpper) return false;
  if (family_ == InnerFamily::CVine)
    return std::all_of(pair_families_.begin(), pair_families_.end(),
                       [](Family f) { return fc::density_capable(f); });
  return true;
}

bool InnerCopula::cdf_capable() const {
  return !(family_ == InnerFamily::GaussianExchangeable && dim_ > 2);
}

void InnerCopula::parameters(double u0, std::vector<double>& out) const {
  out.resize(mappings_.size());
  const double x = std::clamp(u0, kEps, 1.0 - kEps);
  for (std::size_t k = 0; k < mappings_.size(); ++k) out[k] = mappings_[k](x, law_);
}

void InnerCopula::parameters(double u0, std::span<double> out) const {
  const double x = std::clamp(u0, kEps, 1.0 - kEps);
  for (std::size_t k = 0; k < mappings_.size(); ++k) out[k] = mappings_[k](x, law_);
}

void InnerCopula::check_frozen(std::span<const double> p) const {
  auto fail = [&](const std::string& what) {
    std::ostringstream os;
    os << inner_family_name(family_) << " inner parameter " << p[0] << " " << what;
    throw DomainError(os.str());
  };
  for (double x : p)
    if (!std::isfinite(x)) throw DomainError("inner parameter is not finite");
  const double d = static_cast<double>(dim_);
  switch (family_) {
    case InnerFamily::GaussianExchangeable:
      if (!(p[0] > -1.0 / (d - 1.0) && p[0] < 1.0)) fail("outside (-1/(d-1), 1)");
      break;
    case InnerFamily::Clayton:
      if (!(p[0] >= 0.0)) fail("must be >= 0");
      break;
    case InnerFamily::Gumbel:
      if (!(p[0] >= 1.0)) fail("must be >= 1");
      break;
    case InnerFamily::Frank:
      if (dim_ > 2 && p[0] < 0.0) fail("must be >= 0 for d > 2");
      break;
    case InnerFamily::CVine:
      for (std::size_t k = 0; k < p.size(); ++k) (void)pair(k, p[k]);
      break;
    default: break;
  }
}

BivariateCopula InnerCopula::pair(std::size_t k, double theta) const {
  return has_parameter(pair_families_[k]) ? BivariateCopula(pair_families_[k], theta)
                                          : BivariateCopula(pair_families_[k]);
}

double InnerCopula::cdf(double u0, std::span<const double> v) const {
  std::vector<double> p;
  parameters(u0, p);
  check_frozen(p);
  return cdf_frozen(p, v);
}

double InnerCopula::pdf(double u0, std::span<const double> v) const {
  std::vector<double> p;
  parameters(u0, p);
  check_frozen(p);
  return pdf_frozen(p, v);
}

void InnerCopula::sample(double u0, Rng& rng, std::span<double> out) const {
  std::vector<double> p;
  parameters(u0, p);
  check_frozen(p);
  sample_frozen(p, rng, out);
}

double InnerCopula::cdf_frozen(std::span<const double> p, std::span<const double> v) const {
  if (v.size() != dim_) throw DomainError("inner cdf: wrong number of arguments");
  double mn = 1.0;
  for (double x : v) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("inner cdf argument outside [0,1]");
    mn = std::min(mn, x);
  }
  if (mn == 0.0) return 0.0;
  auto product = [&] {
    double r = 1.0;
    for (double x : v) r *= x;
    return r;
  };
  switch (family_) {
    case InnerFamily::Independence: return product();
    case InnerFamily::FrechetUpper: return mn;
    case InnerFamily::Clayton: {
      const double b = p[0];
      if (b == 0.0) return product();
      return std::min(mn, std::exp(-log_sum_clayton(b, v) / b));
    }
    case InnerFamily::Gumbel: {
      const double b = p[0];
      double m = 0.0;
      for (double x : v) m = std::max(m, -std::log(x));
      if (m == 0.0) return 1.0;
      double s = 0.0;
      for (double x : v) s += std::pow(-std::log(x) / m, b);
      return std::min(mn, std::exp(-m * std::pow(s, 1.0 / b)));
    }
    case InnerFamily::Frank: {
      const double t = p[0];
      if (t == 0.0) return product();
      if (dim_ == 2) return BivariateCopula(Family::Frank, t).cdf(v[0], v[1]);
      const double k = std::expm1(-t);
      double r = 1.0;
      for (double x : v) r *= std::expm1(-t * x) / k;
      return std::min(mn, -std::log1p(r * k) / t);
    }
    case InnerFamily::GaussianExchangeable:
      if (dim_ != 2)
        throw UnsupportedError("gaussian exchangeable inner copula has no cdf for d > 2");
      return BivariateCopula(Family::Gaussian, p[0]).cdf(v[0], v[1]);
    case InnerFamily::CVine: {
      if (dim_ == 2) return pair(0, p[0]).cdf(v[1], v[0]);
      std::vector<BivariateCopula> pairs;
      std::vector<double> br;
      for (std::size_t k = 0; k + 1 < dim_; ++k) {
        pairs.push_back(pair(k, p[k]));
        pairs.back().breakpoints(v[k + 1], br);
      }
      auto f = [&](double s) {
        double r = 1.0;
        for (std::size_t k = 0; k < pairs.size(); ++k) r *= pairs[k].hfunc(v[k + 1], s);
        return r;
      };
      const double top = std::min(v[0], 1.0 - kEps);
      if (top <= kEps) return 0.0;
      auto res = adaptive_1d(f, kEps, top, 1e-15, 1e-13, 400, br);
      return std::clamp(res.value, 0.0, mn);
    }
  }
  return product();
}

double InnerCopula::pdf_frozen(std::span<const double> p, std::span<const double> vin) const {
  if (vin.size() != dim_) throw DomainError("inner pdf: wrong number of arguments");
  if (!density_capable())
    throw UnsupportedError(std::string("no density for inner family ") +
                           std::string(inner_family_name(family_)));
  double buf[16];
  std::vector<double> heap;
  double* v = buf;
  if (dim_ > 16) {
    heap.resize(dim_);
    v = heap.data();
  }
  for (std::size_t i = 0; i < dim_; ++i) {
    if (!(vin[i] >= 0.0 && vin[i] <= 1.0)) throw DomainError("inner pdf argument outside [0,1]");
    v[i] = std::clamp(vin[i], kEps, 1.0 - kEps);
  }
  std::span<const double> vs(v, dim_);
  const double d = static_cast<double>(dim_);
  switch (family_) {
    case InnerFamily::Independence: return 1.0;
    case InnerFamily::GaussianExchangeable: {
      const double b = p[0];
      if (b == 0.0) return 1.0;
      double s1 = 0.0, s2 = 0.0;
      for (double x : vs) {
        const double z = normal_quantile(x);
        s1 += z;
        s2 += z * z;
      }
      const double g = 1.0 + (d - 1.0) * b;
      const double logdet = (d - 1.0) * std::log1p(-b) + std::log(g);
      const double quad = (s2 - b / g * s1 * s1) / (1.0 - b) - s2;
      return std::exp(-0.5 * logdet - 0.5 * quad);
    }
    case InnerFamily::Clayton: {
      const double b = p[0];
      if (b == 0.0) return 1.0;
      double lc = 0.0, slog = 0.0;
      for (std::size_t k = 0; k < dim_; ++k) lc += std::log1p(static_cast<double>(k) * b);
      for (double x : vs) slog += std::log(x);
      lc += -(b + 1.0) * slog - (d + 1.0 / b) * log_sum_clayton(b, vs);
      return std::exp(lc);
    }
    case InnerFamily::Frank: {
      const double t = p[0];
      if (t == 0.0) return 1.0;
      if (dim_ == 2) return BivariateCopula(Family::Frank, t).pdf(vs[0], vs[1]);
      // c = Li_{1-d}(z) / t * prod t / (e^{t v} - 1)
      double logz = -(d - 1.0) * std::log(-std::expm1(-t));
      double lc = -std::log(t);
      for (double x : vs) {
        logz += std::log(-std::expm1(-t * x));
        lc += std::log(t) - std::log(std::expm1(t * x));
      }
      const std::size_t m = dim_ - 1;
      const auto a = eulerian_row(m);
      const double z = std::exp(logz), omz = -std::expm1(logz);
      double poly = 0.0, zp = z;
      for (std::size_t j = 0; j < m; ++j) {
        poly += a[j] * zp;
        zp *= z;
      }
      lc += std::log(poly) - static_cast<double>(m + 1) * std::log(omz);
      return std::exp(lc);
    }
    case InnerFamily::Gumbel: {
      const double b = p[0];
      if (b == 1.0) return 1.0;
      const double alpha = 1.0 / b;
      double s = 0.0, lc = 0.0;
      for (double x : vs) {
        const double y = -std::log(x);
        s += std::pow(y, b);
        lc += std::log(b) + (b - 1.0) * std::log(y) - std::log(x);
      }
      // r_n = psi^{(n)} / psi for psi(s) = exp(-s^alpha)
      std::vector<double> g(dim_ + 1), r(dim_ + 1);
      double fall = 1.0;
      for (std::size_t m = 1; m <= dim_; ++m) {
        fall *= alpha - static_cast<double>(m - 1);
        g[m] = -fall * std::pow(s, alpha - static_cast<double>(m));
      }
      r[0] = 1.0;
      for (std::size_t n = 1; n <= dim_; ++n) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += binom(n - 1, k) * g[k + 1] * r[n - 1 - k];
        r[n] = acc;
      }
      const double rd = (dim_ % 2 == 0) ? r[dim_] : -r[dim_];
      if (!(rd > 0.0)) return 0.0;
      return std::exp(-std::pow(s, alpha) + std::log(rd) + lc);
    }
    case InnerFamily::CVine: {
      double r = 1.0;
      for (std::size_t k = 0; k + 1 < dim_; ++k) r *= pair(k, p[k]).pdf(vs[k + 1], vs[0]);
      return r;
    }
    case InnerFamily::FrechetUpper: break;
  }
  throw UnsupportedError("no density");
}

void InnerCopula::sample_frozen(std::span<const double> p, Rng& rng, std::span<double> out) const {
  if (out.size() != dim_) throw DomainError("inner sample: wrong output size");
  switch (family_) {
    case InnerFamily::Independence:
      for (auto& x : out) x = rng.uniform();
      return;
    case InnerFamily::FrechetUpper: {
      const double u = rng.uniform();
      for (auto& x : out) x = u;
      return;
    }
    case InnerFamily::GaussianExchangeable: {
      const double b = p[0], d = static_cast<double>(dim_);
      const double a = std::sqrt(1.0 - b);
      const double c = (-a + std::sqrt(a * a + d * b)) / d;
      double sum = 0.0;
      for (auto& x : out) {
        x = rng.normal();
        sum += x;
      }
      for (auto& x : out) x = normal_cdf(a * x + c * sum);
      return;
    }
    case InnerFamily::Clayton: {
      const double b = p[0];
      if (b == 0.0) {
        for (auto& x : out) x = rng.uniform();
        return;
      }
      const double v = rng.gamma(1.0 / b);
      for (auto& x : out) x = std::exp(-std::log1p(rng.exponential() / v) / b);
      return;
    }
    case InnerFamily::Gumbel: {
      const double alpha = 1.0 / p[0];
      const double v = rng.positive_stable(alpha);
      for (auto& x : out) x = std::exp(-std::pow(rng.exponential() / v, alpha));
      return;
    }
    case InnerFamily::Frank: {
      const double t = p[0];
      if (t == 0.0) {
        for (auto& x : out) x = rng.uniform();
        return;
      }
      if (t < 0.0) {  // d = 2 only; conditional inversion
        BivariateCopula c(Family::Frank, t);
        out[0] = rng.uniform();
        out[1] = c.hinv(rng.uniform(), out[0]);
        return;
      }
      const double v = static_cast<double>(rng.log_series(t));
      const double k = std::expm1(-t);
      for (auto& x : out) x = -std::log1p(k * std::exp(-rng.exponential() / v)) / t;
      return;
    }
    case InnerFamily::CVine: {
      out[0] = rng.uniform();
      for (std::size_t k = 0; k + 1 < dim_; ++k) {
        const double q = rng.uniform();
        switch (pair_families_[k]) {
          case Family::FrechetUpper: out[k + 1] = out[0]; break;
          case Family::FrechetLower: out[k + 1] = 1.0 - out[0]; break;
          default: out[k + 1] = pair(k, p[k]).hinv(q, out[0]);
        }
      }
      return;
    }
  }
}

InnerCopula InnerCopula::marginalize(std::span<const std::size_t> keep) const {
  if (keep.size() < 2) throw DomainError("marginal needs at least two variables");
  for (std::size_t i : keep)
    if (i >= dim_) throw DomainError("marginal index out of range");
  if (family_ != InnerFamily::CVine) return InnerCopula(family_, keep.size(), mappings_, law_);
  if (keep[0] != 0)
    throw UnsupportedError("cvine inner copula cannot be marginalized without its root variable first");
  std::vector<FactorMapping> maps;
  std::vector<Family> fams;
  for (std::size_t j = 1; j < keep.size(); ++j) {
    if (keep[j] == 0) throw DomainError("duplicate marginal index");
    maps.push_back(mappings_[keep[j] - 1]);
    fams.push_back(pair_families_[keep[j] - 1]);
  }
  return InnerCopula(family_, keep.size(), std::move(maps), law_, std::move(fams));
}

InnerCopula InnerCopula::with_mapping_param(std::size_t mapping, std::size_t index, double value) const {
  if (mapping >= mappings_.size() || index >= mappings_[mapping].params().size())
    throw DomainError("mapping parameter index out of range");
  auto maps = mappings_;
  auto p = maps[mapping].params();
  p[index] = value;
  maps[mapping] = FactorMapping(maps[mapping].kind(), std::move(p));
  return InnerCopula(family_, dim_, std::move(maps), law_, pair_families_);
}

InnerCopula InnerCopula::with_factor_param(double lambda) const {
  FactorLaw law = law_;
  law.lambda = lambda;
  return InnerCopula(family_, dim_, mappings_, law, pair_families_);
}

}  // namespace fc
