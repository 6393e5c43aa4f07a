#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fc/errors.hpp"
#include "fc/factor_model.hpp"
#include "oracles.hpp"
#include "reference_models.hpp"

using fc::BivariateCopula;
using fc::FactorModel;
using fc::Family;
using fc::InnerCopula;
using fc::InnerFamily;

namespace {

BivariateCopula P() { return BivariateCopula(); }
BivariateCopula M() { return BivariateCopula(Family::FrechetUpper); }
BivariateCopula W() { return BivariateCopula(Family::FrechetLower); }
BivariateCopula Fr(double t) { return BivariateCopula(Family::Frank, t); }

double gauss_density(double u, double v, double rho) {
  const double x = oracle::Phi_inv(u), y = oracle::Phi_inv(v);
  return std::exp(-(rho * rho * (x * x + y * y) - 2 * rho * x * y) / (2 * (1 - rho * rho))) /
         std::sqrt(1 - rho * rho);
}

}  // namespace

TEST(FactorModel, UpperFrechetBound) {
  const auto m = FactorModel::one_factor({M(), M(), M()});
  for (double a : {0.1, 0.45, 0.8})
    for (double b : {0.2, 0.5, 0.95})
      for (double c : {0.05, 0.6}) {
        const double u[3] = {a, b, c};
        EXPECT_NEAR(m.outer_cdf(u).value, std::min({a, b, c}), 1e-8);
      }
}

TEST(FactorModel, LowerFrechetBound) {
  const auto m = FactorModel::one_factor({W(), M()});
  for (double a : {0.1, 0.45, 0.8})
    for (double b : {0.2, 0.5, 0.95}) {
      const double u[2] = {a, b};
      EXPECT_NEAR(m.outer_cdf(u).value, std::max(a + b - 1, 0.0), 1e-8);
    }
}

TEST(FactorModel, DegenerateLinkingGivesInner) {
  const auto m = FactorModel::one_factor({P(), P()}, InnerCopula::constant(InnerFamily::Clayton, 2, 2.0));
  for (double a : {0.1, 0.5, 0.9})
    for (double b : {0.3, 0.7}) {
      const double u[2] = {a, b};
      EXPECT_NEAR(m.outer_cdf(u).value, oracle::cdf(Family::Clayton, 2.0, a, b), 1e-8);
    }
}

TEST(FactorModel, IndependenceEverywhereDensityIsOne) {
  const auto m = FactorModel::one_factor({P(), P(), P()});
  const double u[3] = {0.2, 0.9, 0.4};
  EXPECT_NEAR(m.density(u).value, 1.0, 1e-9);
  FactorModel deep(2, 3, {P(), P(), P(), P(), P(), P()}, InnerCopula::independence(2));
  const double v[2] = {0.3, 0.6};
  EXPECT_NEAR(deep.density(v).value, 1.0, 1e-12);
}

TEST(FactorModel, FgmClosure) {
  for (auto [t1, t2] : {std::pair{1.0, 1.0}, std::pair{-1.0, 0.5}, std::pair{0.5, 0.5}}) {
    const auto m = FactorModel::one_factor({BivariateCopula(Family::FGM, t1), BivariateCopula(Family::FGM, t2)});
    const double th = t1 * t2 / 3;
    for (double a : {0.1, 0.5, 0.8})
      for (double b : {0.1, 0.35, 0.9}) {
        const double u[2] = {a, b};
        EXPECT_NEAR(m.density(u).value, 1 + th * (1 - 2 * a) * (1 - 2 * b), 1e-6);
        EXPECT_NEAR(m.outer_cdf(u).value, oracle::cdf(Family::FGM, th, a, b), 1e-8);
      }
  }
  const auto m = FactorModel::one_factor({BivariateCopula(Family::FGM, 1), BivariateCopula(Family::FGM, 1)});
  const double u[2] = {0.1, 0.1};
  EXPECT_NEAR(m.density(u).value, 1.2133333333333333, 1e-6);
}

TEST(FactorModel, GaussianClosure) {
  const auto lg = BivariateCopula(Family::Gaussian, 0.6);
  const auto m = FactorModel::one_factor({lg, lg}, InnerCopula::constant(InnerFamily::GaussianExchangeable, 2, 0.5));
  const double rho = 0.5 * (1 - 0.36) + 0.36;
  for (double a : {0.15, 0.5, 0.7})
    for (double b : {0.2, 0.6, 0.9}) {
      const double u[2] = {a, b};
      const double want = gauss_density(a, b, rho);
      EXPECT_NEAR(m.density(u).value, want, 1e-4 * want);
      EXPECT_NEAR(m.outer_cdf(u).value, oracle::cdf(Family::Gaussian, rho, a, b), 1e-7);
    }
}

TEST(FactorModel, GTransformNestedChain) {
  // w = 3, Frank layers; oracle composes finite-difference h-functions
  FactorModel m(2, 3, {Fr(5.0), Fr(-3.0), Fr(9.0), Fr(2.0), Fr(2.0), Fr(2.0)}, InnerCopula::independence(2));
  const double t[3] = {0.3, 0.6, 0.8};
  for (double u : {0.1, 0.5, 0.85}) {
    double x = u;
    const double th[3] = {5.0, -3.0, 9.0};
    for (int j = 0; j < 3; ++j) x = oracle::hfunc_fd(Family::Frank, th[j], x, t[j]);
    EXPECT_NEAR(m.g_transform(0, u, t), x, 1e-4 * x);
  }
  const auto ind = FactorModel(2, 2, {P(), P(), P(), P()}, InnerCopula::independence(2));
  const double t2[2] = {0.4, 0.1};
  EXPECT_DOUBLE_EQ(ind.g_transform(1, 0.37, t2), 0.37);
  EXPECT_DOUBLE_EQ(ind.g_derivative(1, 0.37, t2), 1.0);
}

TEST(FactorModel, GDerivative) {
  const auto one = FactorModel::one_factor({BivariateCopula(Family::Clayton, 2.0), P()});
  const double t1[1] = {0.7};
  EXPECT_NEAR(one.g_derivative(0, 0.4, t1), BivariateCopula(Family::Clayton, 2.0).pdf(0.4, 0.7), 1e-13);
  FactorModel m(2, 2, {Fr(4.0), Fr(7.0), Fr(-2.0), Fr(3.0)}, InnerCopula::independence(2));
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> U(0.05, 0.95);
  for (int k = 0; k < 20; ++k) {
    const double t[2] = {U(gen), U(gen)};
    const double u = U(gen), h = 1e-6;
    const double fd = (m.g_transform(0, u + h, t) - m.g_transform(0, u - h, t)) / (2 * h);
    EXPECT_NEAR(m.g_derivative(0, u, t), fd, 1e-4 * fd);
  }
}

TEST(FactorModelProperty, DensityIsMixedDerivativeOfCdf) {
  const auto m = FactorModel::one_factor({BivariateCopula(Family::Clayton, 1.5), Fr(-4.0)},
                                         InnerCopula::constant(InnerFamily::Frank, 2, 3.0));
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> U(0.1, 0.9);
  const double h = 1e-3;
  for (int k = 0; k < 10; ++k) {
    const double a = U(gen), b = U(gen);
    auto C = [&](double x, double y) {
      const double u[2] = {x, y};
      return m.outer_cdf(u, fc::IntegratorConfig::adaptive(1e-14, 1e-13)).value;
    };
    const double fd = (C(a + h, b + h) - C(a + h, b - h) - C(a - h, b + h) + C(a - h, b - h)) / (4 * h * h);
    const double u[2] = {a, b};
    EXPECT_NEAR(m.density(u).value, fd, 1e-3 * fd);
  }
}

TEST(FactorModelProperty, OuterCdfMonotoneAndWithinBounds) {
  const auto m = FactorModel::one_factor({BivariateCopula(Family::Gumbel, 2.0), Fr(-5.0), BivariateCopula(Family::AMH, 0.5)},
                                         InnerCopula::constant(InnerFamily::Clayton, 3, 1.0));
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int k = 0; k < 30; ++k) {
    double u[3] = {U(gen), U(gen), U(gen)};
    const double c = m.outer_cdf(u).value;
    EXPECT_LE(c, std::min({u[0], u[1], u[2]}) + 1e-12);
    EXPECT_GE(c, std::max(u[0] + u[1] + u[2] - 2, 0.0) - 1e-12);
    u[k % 3] = std::min(1.0, u[k % 3] + 0.1);
    EXPECT_GE(m.outer_cdf(u).value, c - 1e-10);
  }
}

TEST(FactorModelProperty, PQDAndNQDCertificates) {
  // PQD inner, NQD C2, SD C1 => PQD outer
  const auto pqd = FactorModel::one_factor({BivariateCopula(Family::AMH, -0.5), BivariateCopula(Family::FGM, -0.5)},
                                           InnerCopula::constant(InnerFamily::Frank, 2, 4.0));
  // NQD inner, NQD C2, SI C1 => NQD outer
  const auto nqd = FactorModel::one_factor({BivariateCopula(Family::Clayton, 2.0), BivariateCopula(Family::FGM, -0.5)},
                                           InnerCopula::constant(InnerFamily::Frank, 2, -4.0));
  for (int a = 1; a < 20; ++a)
    for (int b = 1; b < 20; ++b) {
      const double u[2] = {a / 20.0, b / 20.0};
      EXPECT_GE(pqd.outer_cdf(u).value, u[0] * u[1] - 1e-9);
      EXPECT_LE(nqd.outer_cdf(u).value, u[0] * u[1] + 1e-9);
    }
}

TEST(FactorModel, MarginalizeAgreesWithIntegration) {
  const auto m = FactorModel::one_factor({BivariateCopula(Family::Clayton, 2.0), Fr(5.0), BivariateCopula(Family::Gumbel, 1.5)});
  const std::size_t all[3] = {0, 1, 2};
  EXPECT_EQ(m.marginalize(all), m);
  const std::size_t keep[2] = {1, 2};
  const auto sub = m.marginalize(keep);
  EXPECT_EQ(sub.dimension(), 2u);
  for (auto [a, b] : {std::pair{0.3, 0.6}, std::pair{0.8, 0.2}}) {
    const double v[2] = {a, b};
    auto f = [&](double x) {
      const double u[3] = {x, a, b};
      return m.density(u).value;
    };
    const double integral = fc::adaptive_1d(f, 1e-9, 1 - 1e-9, 1e-8, 1e-6, 200).value;
    EXPECT_NEAR(sub.density(v).value, integral, 2e-3);
  }
  const std::size_t bad[1] = {0};
  EXPECT_THROW(m.marginalize(bad), fc::DomainError);
}

TEST(FactorModel, ExtractLinking) {
  for (auto cl : {BivariateCopula(Family::Clayton, 2.0), P(), BivariateCopula(Family::FGM, -1.0)}) {
    const auto m = FactorModel::one_factor({cl, M(), M()});
    const auto pair = fc::extract_linking(m, 0, 2);
    for (int a = 1; a < 20; a += 3)
      for (int b = 1; b < 20; b += 3) {
        const double u[2] = {a / 20.0, b / 20.0};
        EXPECT_NEAR(pair.outer_cdf(u).value, cl.cdf(u[0], u[1]), 1e-6) << cl.describe();
      }
  }
  const auto bad = FactorModel::one_factor({Fr(2), Fr(3)}, InnerCopula::constant(InnerFamily::Clayton, 2, 1.0));
  EXPECT_THROW(fc::extract_linking(bad, 0, 1), fc::ContractError);
}

TEST(FactorModel, CapabilityErrors) {
  const auto m = FactorModel::one_factor({M(), Fr(2)});
  const double u[2] = {0.3, 0.4};
  EXPECT_THROW(m.density(u), fc::UnsupportedError);
  const auto g = FactorModel::one_factor({Fr(2), Fr(3), Fr(4)},
                                         InnerCopula::constant(InnerFamily::GaussianExchangeable, 3, 0.3));
  const double v[3] = {0.3, 0.4, 0.5};
  EXPECT_THROW(g.outer_cdf(v), fc::UnsupportedError);
  EXPECT_THROW(FactorModel(3, 1, {Fr(1), Fr(2)}, InnerCopula::independence(3)), fc::DomainError);
}

TEST(FactorModel, TwoLayerDensityMatchesIndependentPath) {
  // Pi_2-factor: density = int int prod_i c_i1(u_i,t1) c_i2(h_i1, t2) dt1 dt2, coded here directly
  FactorModel m(2, 2, {Fr(3.0), BivariateCopula(Family::Clayton, 1.0), Fr(-2.0), Fr(6.0)}, InnerCopula::independence(2));
  const double u[2] = {0.3, 0.7};
  const BivariateCopula c[2][2] = {{Fr(3.0), BivariateCopula(Family::Clayton, 1.0)}, {Fr(-2.0), Fr(6.0)}};
  auto inner = [&](double t1) {
    auto g = [&](double t2) {
      double p = 1.0;
      for (int i = 0; i < 2; ++i) p *= c[i][0].pdf(u[i], t1) * c[i][1].pdf(c[i][0].hfunc(u[i], t1), t2);
      return p;
    };
    return fc::adaptive_1d(g, 1e-12, 1 - 1e-12, 1e-12, 1e-10, 200).value;
  };
  const double want = fc::adaptive_1d(inner, 1e-12, 1 - 1e-12, 1e-11, 1e-9, 200).value;
  EXPECT_NEAR(m.density(u, fc::IntegratorConfig::adaptive()).value, want, 1e-7);
}

// Frank satisfies C_{-t}(u,v) = u - C_t(u,1-v). Negating every link in one layer
// is then the substitution v -> 1-v on that factor, so the law is unchanged
// while nothing else reads the factor value.
TEST(FactorModelProperty, LayerSignFlipLeavesLawUnchanged) {
  const auto base = fcref::two_layer_frank_inner(5.0, 2.5, 4.0);
  const auto flip12 = fcref::two_layer_frank_inner(5.0, -2.5, 4.0);
  const auto flip34 = fcref::two_layer_frank_inner(5.0, 2.5, -4.0);
  const auto cfg = fc::IntegratorConfig::adaptive(1e-13, 1e-11);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(0.05, 0.95);
  for (int k = 0; k < 10; ++k) {
    const double u[4] = {U(rng), U(rng), U(rng), U(rng)};
    const double d = base.density(u, cfg).value;
    EXPECT_NEAR(flip12.density(u, cfg).value, d, 1e-7 * d);
    EXPECT_NEAR(flip34.density(u, cfg).value, d, 1e-7 * d);
    EXPECT_NEAR(flip12.outer_cdf(u, cfg).value, base.outer_cdf(u, cfg).value, 1e-9);
  }
  // a layer that is only half flipped is a different model
  const FactorModel half(4, 2, {P(), Fr(2.5), P(), Fr(-2.5), Fr(4.0), P(), Fr(4.0), P()},
                         InnerCopula::constant(InnerFamily::Frank, 4, 5.0));
  const double u[4] = {0.2, 0.8, 0.4, 0.6};
  EXPECT_GT(std::abs(half.density(u, cfg).value - base.density(u, cfg).value), 1e-3);
}
