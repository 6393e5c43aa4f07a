#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fc/bicop.hpp"
#include "fc/rng.hpp"

namespace fc {

enum class FactorLawKind { Uniform, Exponential, Pareto };

// Law of the latent factor x0 = Q0(u0).
struct FactorLaw {
  FactorLawKind kind = FactorLawKind::Uniform;
  double lambda = 1.0;  // Exponential rate

  double quantile(double u0) const;
  void validate() const;
  bool operator==(const FactorLaw&) const = default;
};

enum class MappingKind {
  Constant,           // params: {theta}
  OneMinusU,          // 1 - u0
  ParetoInverse,      // 1 / (1 - u0)
  ClaytonTauInverse,  // 2 u0 / (1 - u0)
  ExpInverse,         // -log(1 - u0) / lambda, params: {lambda}
  ExpDecay,           // exp(-b0 - b1 x0), x0 = Q0(u0), params: {b0, b1}
  UserTable,          // monotone cubic through (u0, theta) knots, params: u0_1, th_1, u0_2, ...
};

std::string_view mapping_name(MappingKind k);
MappingKind parse_mapping(std::string_view name);
std::size_t mapping_param_count(MappingKind k, std::size_t given);

// Factor value u0 -> parameter of the inner copula.
class FactorMapping {
 public:
  FactorMapping() = default;
  FactorMapping(MappingKind kind, std::vector<double> params);
  static FactorMapping constant(double theta) { return {MappingKind::Constant, {theta}}; }

  MappingKind kind() const { return kind_; }
  const std::vector<double>& params() const { return params_; }
  bool is_constant() const { return kind_ == MappingKind::Constant; }
  double operator()(double u0, const FactorLaw& law) const;

  bool operator==(const FactorMapping& o) const {
    return kind_ == o.kind_ && params_ == o.params_;
  }

 private:
  MappingKind kind_ = MappingKind::Constant;
  std::vector<double> params_{0.0};
  std::shared_ptr<const void> table_;  // interpolant for UserTable
};

enum class InnerFamily { Independence, GaussianExchangeable, Clayton, Gumbel, Frank, FrechetUpper, CVine };

std::string_view inner_family_name(InnerFamily f);
InnerFamily parse_inner_family(std::string_view name);

// The d-variate copula of the observables given the last-layer factor.
// CVine: pair k (k = 0..d-2) is the copula of (v_{k+1}, v_0), each with its own mapping.
class InnerCopula {
 public:
  InnerCopula() : InnerCopula(InnerFamily::Independence, 2) {}
  InnerCopula(InnerFamily family, std::size_t dim, std::vector<FactorMapping> mappings = {},
              FactorLaw law = {}, std::vector<Family> pair_families = {});
  static InnerCopula independence(std::size_t dim) { return {InnerFamily::Independence, dim}; }
  static InnerCopula constant(InnerFamily family, std::size_t dim, double theta) {
    return {family, dim, {FactorMapping::constant(theta)}};
  }
  static InnerCopula bivariate(const BivariateCopula& c);

  InnerFamily family() const { return family_; }
  std::size_t dimension() const { return dim_; }
  const std::vector<FactorMapping>& mappings() const { return mappings_; }
  const FactorLaw& factor_law() const { return law_; }
  const std::vector<Family>& pair_families() const { return pair_families_; }

  bool conditionally_independent() const { return family_ == InnerFamily::Independence; }
  bool conditionally_invariant() const;
  bool density_capable() const;
  bool cdf_capable() const;

  // Frozen parameters at factor value u0 (one per mapping).
  void parameters(double u0, std::vector<double>& out) const;
  void parameters(double u0, std::span<double> out) const;
  void check_frozen(std::span<const double> params) const;

  double cdf(double u0, std::span<const double> v) const;
  double pdf(double u0, std::span<const double> v) const;
  void sample(double u0, Rng& rng, std::span<double> out) const;

  // Same evaluations with parameters already frozen.
  double cdf_frozen(std::span<const double> params, std::span<const double> v) const;
  double pdf_frozen(std::span<const double> params, std::span<const double> v) const;
  void sample_frozen(std::span<const double> params, Rng& rng, std::span<double> out) const;

  InnerCopula marginalize(std::span<const std::size_t> keep) const;
  InnerCopula with_mapping_param(std::size_t mapping, std::size_t index, double value) const;
  InnerCopula with_factor_param(double lambda) const;

  bool operator==(const InnerCopula& o) const {
    return family_ == o.family_ && dim_ == o.dim_ && mappings_ == o.mappings_ && law_ == o.law_ &&
           pair_families_ == o.pair_families_;
  }

 private:
  void validate() const;
  BivariateCopula pair(std::size_t k, double theta) const;

  InnerFamily family_;
  std::size_t dim_;
  std::vector<FactorMapping> mappings_;
  FactorLaw law_;
  std::vector<Family> pair_families_;
};

}  // namespace fc
