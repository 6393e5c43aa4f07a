#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fc {

enum class Family {
  Independence,
  FrechetUpper,  // M
  FrechetLower,  // W
  Clayton,
  Frank,
  Gumbel,
  Gaussian,
  FGM,
  AMH,
  Mardia,
  Plackett,
};

std::string_view family_name(Family f);
Family parse_family(std::string_view name);
bool has_parameter(Family f);
bool density_capable(Family f);
bool hinv_capable(Family f);

// Interval of admissible parameter values (inclusive flags).
struct Interval {
  double lo, hi;
  bool lo_closed, hi_closed;
  bool contains(double x) const {
    return (lo_closed ? x >= lo : x > lo) && (hi_closed ? x <= hi : x < hi);
  }
};
Interval theta_domain(Family f);
Interval tau_range(Family f);

double tau_of_theta(Family f, double theta);
double theta_of_tau(Family f, double tau);

// A bivariate copula C(u,v) with its parameter. hfunc(u,v) = dC(u,v)/dv,
// the law of u given v; hinv inverts it in u.
class BivariateCopula {
 public:
  BivariateCopula() = default;
  explicit BivariateCopula(Family family, double theta = 0.0);
  static BivariateCopula from_tau(Family family, double tau);

  Family family() const { return family_; }
  double theta() const { return theta_; }
  // Independence when the parameter sits at an independence point.
  bool is_independence() const { return eval_ == Family::Independence; }

  double cdf(double u, double v) const;
  double pdf(double u, double v) const;
  double hfunc(double u, double v) const;
  double hinv(double p, double v) const;
  // hfunc(u,v) with pdf(u,v) written to `density`; shares work where possible.
  double hfunc_pdf(double u, double v, double& density) const;
  double tau() const;

  // Values of v at which hfunc(u, .) jumps (singular families only).
  void breakpoints(double u, std::vector<double>& out) const;

  std::string describe() const;

  bool operator==(const BivariateCopula& o) const {
    return family_ == o.family_ && theta_ == o.theta_;
  }

 private:
  double hinv_numeric(double p, double v) const;
  double mardia_hinv(double p, double v) const;

  Family family_ = Family::Independence;
  double theta_ = 0.0;
  Family eval_ = Family::Independence;
  double k_ = 0.0;  // Frank expm1(-theta); Gaussian sqrt(1-rho^2)
};

double normal_cdf(double x);
double normal_quantile(double p);
// P(X <= h, Y <= k) for a standard bivariate normal with correlation rho.
double bivariate_normal_cdf(double h, double k, double rho);

}  // namespace fc
