#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fc/bicop.hpp"
#include "fc/innercop.hpp"
#include "fc/quadrature.hpp"

namespace fc {

// d observables, w latent layers. Row i of the linking grid holds the
// copulas C_i1..C_iw applied to u_i in layer order; the inner copula sees
// G_i(u_i; t) = H_iw(... H_i1(u_i | t_1) ... | t_w) and depends on t_w only.
class FactorModel {
 public:
  FactorModel(std::size_t d, std::size_t w, std::vector<BivariateCopula> linking, InnerCopula inner);
  // Single-layer model; inner defaults to independence (the classical one-factor copula).
  static FactorModel one_factor(std::vector<BivariateCopula> linking);
  static FactorModel one_factor(std::vector<BivariateCopula> linking, InnerCopula inner);

  std::size_t dimension() const { return d_; }
  std::size_t depth() const { return w_; }
  const BivariateCopula& linking(std::size_t i, std::size_t j) const { return linking_[i * w_ + j]; }
  const std::vector<BivariateCopula>& linking_grid() const { return linking_; }
  const InnerCopula& inner() const { return inner_; }

  bool density_capable() const;
  bool cdf_capable() const { return inner_.cdf_capable(); }
  bool sample_capable() const;

  double g_transform(std::size_t i, double u, std::span<const double> t) const;
  double g_derivative(std::size_t i, double u, std::span<const double> t) const;

  // Integrands over t in [0,1]^w.
  double density_integrand(std::span<const double> u, std::span<const double> t) const;
  double cdf_integrand(std::span<const double> u, std::span<const double> t) const;

  IntegrationResult density(std::span<const double> u, const IntegratorConfig& config) const;
  IntegrationResult density(std::span<const double> u) const;
  IntegrationResult outer_cdf(std::span<const double> u, const IntegratorConfig& config) const;
  IntegrationResult outer_cdf(std::span<const double> u) const;

  FactorModel marginalize(std::span<const std::size_t> keep) const;
  FactorModel with_linking(std::size_t i, std::size_t j, const BivariateCopula& c) const;
  FactorModel with_inner(InnerCopula inner) const;

  bool operator==(const FactorModel& o) const {
    return d_ == o.d_ && w_ == o.w_ && linking_ == o.linking_ && inner_ == o.inner_;
  }

 private:
  void breakpoints(std::span<const double> u, std::size_t level, std::span<const double> prefix,
                   std::vector<double>& out) const;

  std::size_t d_;
  std::size_t w_;
  std::vector<BivariateCopula> linking_;
  InnerCopula inner_;
};

// Bivariate (l,k) margin of a model built so that it equals C_l: independent
// inner, one layer where every row but l is comonotone, other layers independent.
FactorModel extract_linking(const FactorModel& model, std::size_t l, std::size_t k);

}  // namespace fc
