#include <gtest/gtest.h>

#include <cmath>

#include "fc/errors.hpp"
#include "fc/inference.hpp"
#include "fc/sampling.hpp"
#include "reference_models.hpp"

using fc::BivariateCopula;
using fc::FactorModel;
using fc::Family;
using fc::InnerCopula;
using fc::InnerFamily;

namespace {

FactorModel clayton_ofc(double t1, double t2, double t3) {
  return FactorModel::one_factor({BivariateCopula::from_tau(Family::Clayton, t1),
                                  BivariateCopula::from_tau(Family::Clayton, t2),
                                  BivariateCopula::from_tau(Family::Clayton, t3)});
}

std::vector<fc::FreeParameter> each_linking(std::size_t d) {
  std::vector<fc::FreeParameter> out;
  for (std::size_t i = 0; i < d; ++i) out.push_back({"c" + std::to_string(i + 1), {fc::LinkingSlot{i, 0}}});
  return out;
}

}  // namespace

TEST(Registry, NamesAndRoundTrip) {
  FactorModel m(2, 2, {fcref::frank(2), fcref::frank(3), fcref::frank(4), fcref::frank(5)},
                InnerCopula(InnerFamily::Clayton, 2, {fc::FactorMapping(fc::MappingKind::ExpDecay, {0.1, 0.5})},
                            fc::FactorLaw{fc::FactorLawKind::Exponential, 2.0}));
  const auto reg = fc::parameter_registry(m);
  ASSERT_EQ(reg.size(), 7u);
  EXPECT_EQ(reg[0].name, "linking.1[1]");
  EXPECT_EQ(reg[1].name, "linking.2[1]");
  EXPECT_EQ(reg[2].name, "linking.1[2]");
  EXPECT_EQ(reg[4].name, "inner.mapping1.p1");
  EXPECT_EQ(reg[6].name, "inner.factor_param");
  const auto flat = fc::flat_parameters(m);
  EXPECT_EQ(flat, (std::vector<double>{2, 3, 4, 5, 0.1, 0.5, 2.0}));
  EXPECT_EQ(fc::with_flat_parameters(m, flat), m);
  const auto m2 = fc::set_parameter(m, fc::LinkingSlot{1, 1}, 7.5);
  EXPECT_DOUBLE_EQ(fc::get_parameter(m2, fc::LinkingSlot{1, 1}), 7.5);
  EXPECT_THROW(fc::set_parameter(m, fc::MappingSlot{0, 1}, std::nan("")), fc::DomainError);
}

TEST(Registry, ParameterlessFamiliesAreSkipped) {
  const auto m = FactorModel::one_factor({BivariateCopula(), BivariateCopula(Family::FrechetUpper), fcref::frank(2)});
  const auto reg = fc::parameter_registry(m);
  ASSERT_EQ(reg.size(), 1u);
  EXPECT_EQ(reg[0].name, "linking.1[3]");
}

TEST(FitTemplate, BoxesAndTiedSlots) {
  const auto base = clayton_ofc(0.3, 0.3, 0.3);
  fc::FitTemplate tmpl(base, {{"tied", {fc::LinkingSlot{0, 0}, fc::LinkingSlot{1, 0}}}, {"c3", {fc::LinkingSlot{2, 0}}}});
  EXPECT_EQ(tmpl.size(), 2u);
  const double theta[2] = {4.0, 1.0};
  const auto m = tmpl.instantiate(theta);
  EXPECT_DOUBLE_EQ(m.linking(0, 0).theta(), 4.0);
  EXPECT_DOUBLE_EQ(m.linking(1, 0).theta(), 4.0);
  EXPECT_DOUBLE_EQ(m.linking(2, 0).theta(), 1.0);
  EXPECT_EQ(tmpl.tau_family(0), Family::Clayton);
  const auto [lo, hi] = tmpl.tau_box(0);
  EXPECT_GE(lo, 0.0);
  EXPECT_LE(hi, 0.95);
  EXPECT_THROW(fc::FitTemplate(base, {{"x", {fc::LinkingSlot{5, 0}}}}), fc::Error);
}

TEST(Loglik, IndependenceIsZeroAndSumsLogDensity) {
  const auto pseudo = fc::pseudo_observations(fc::sample(clayton_ofc(0.5, 0.5, 0.5), 200, {1, 0}));
  const auto m = clayton_ofc(0.4, 0.5, 0.6);
  auto cfg = fc::IntegratorConfig::adaptive();
  EXPECT_NEAR(fc::loglik(FactorModel::one_factor({BivariateCopula(), BivariateCopula(), BivariateCopula()}), pseudo, cfg)
                  .value,
              0.0, 1e-9);
  double want = 0.0;
  for (std::size_t r = 0; r < pseudo.rows(); ++r) want += std::log(m.density(pseudo.row(r), cfg).value);
  const auto got = fc::loglik(m, pseudo, cfg);
  EXPECT_NEAR(got.value, want, 1e-8 * std::abs(want));
  EXPECT_EQ(got.n, pseudo.rows());
  EXPECT_EQ(got.n_floored, 0u);
}

TEST(Loglik, RankInvariance) {
  auto raw = fc::sample(clayton_ofc(0.5, 0.4, 0.3), 300, {2, 0});
  const auto p1 = fc::pseudo_observations(raw);
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    raw(r, 0) = std::exp(5 * raw(r, 0));
    raw(r, 2) = std::pow(raw(r, 2), 3.0) - 7;
  }
  const auto p2 = fc::pseudo_observations(raw);
  EXPECT_EQ(p1, p2);
  const auto m = clayton_ofc(0.5, 0.4, 0.3);
  EXPECT_DOUBLE_EQ(fc::loglik(m, p1, fc::IntegratorConfig::adaptive()).value,
                   fc::loglik(m, p2, fc::IntegratorConfig::adaptive()).value);
}

TEST(Fit, RecoversClaytonOneFactor) {
  const auto truth = clayton_ofc(0.4, 0.5, 0.6);
  const auto pseudo = fc::pseudo_observations(fc::sample(truth, 500, {3, 0}));
  fc::FitTemplate tmpl(clayton_ofc(0.2, 0.2, 0.2), each_linking(3));
  fc::FitConfig cfg;
  cfg.seed = 5;
  const auto res = fc::fit(tmpl, pseudo, cfg);
  ASSERT_EQ(res.tau_hat.size(), 3u);
  EXPECT_NEAR(res.tau_hat[0], 0.4, 0.08);
  EXPECT_NEAR(res.tau_hat[1], 0.5, 0.08);
  EXPECT_NEAR(res.tau_hat[2], 0.6, 0.08);
  EXPECT_TRUE(res.converged);
  ASSERT_TRUE(res.model.has_value());
  // the fitted value beats the truth on its own data
  EXPECT_GE(res.loglik, fc::loglik(truth, pseudo, fc::IntegratorConfig::adaptive(1e-13, 1e-11, 400)).value - 1e-6);
  // deterministic
  const auto again = fc::fit(tmpl, pseudo, cfg);
  EXPECT_EQ(res.theta_hat, again.theta_hat);
}

TEST(Fit, NativeSpaceAgreesWithTauSpace) {
  const auto pseudo = fc::pseudo_observations(fc::sample(clayton_ofc(0.5, 0.5, 0.5), 300, {4, 0}));
  fc::FitTemplate tmpl(clayton_ofc(0.2, 0.2, 0.2), each_linking(3));
  fc::FitConfig a, b;
  b.space = fc::ParamSpace::Native;
  const auto ra = fc::fit(tmpl, pseudo, a), rb = fc::fit(tmpl, pseudo, b);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(ra.tau_hat[k], rb.tau_hat[k], 0.01);
  EXPECT_NEAR(ra.loglik, rb.loglik, 0.05);
}

TEST(Fit, OptimizerNames) {
  EXPECT_EQ(fc::parse_optimizer("de"), fc::Optimizer::GlobalPopulation);
  EXPECT_EQ(fc::parse_optimizer("simplex"), fc::Optimizer::LocalSimplex);
  EXPECT_EQ(fc::parse_optimizer("both"), fc::Optimizer::Both);
  EXPECT_EQ(fc::optimizer_name(fc::Optimizer::Both), "both");
  EXPECT_THROW(fc::parse_optimizer("bfgs"), fc::Error);
}

TEST(Fisher, GaussianClosureMatchesClosedForm) {
  // outer is Gaussian with rho = 0.36 + 0.64 beta; I(beta) = 0.64^2 (1 + rho^2) / (1 - rho^2)^2
  const auto lg = BivariateCopula(Family::Gaussian, 0.6);
  const auto base = FactorModel::one_factor({lg, lg}, InnerCopula::constant(InnerFamily::GaussianExchangeable, 2, 0.5));
  fc::FitTemplate tmpl(base, {{"beta", {fc::MappingSlot{0, 0}}}});
  const double rho = 0.68, want = 0.64 * 0.64 * (1 + rho * rho) / std::pow(1 - rho * rho, 2);
  fc::FisherConfig cfg;
  cfg.n = 4000;
  cfg.seed = 8;
  const double th[1] = {0.5};
  const auto res = fc::fisher_information(tmpl, th, cfg);
  ASSERT_EQ(res.matrix.rows(), 1u);
  EXPECT_GT(res.std_error(0, 0), 0.0);
  EXPECT_NEAR(res.matrix(0, 0), want, 4 * res.std_error(0, 0));
  EXPECT_NEAR(res.determinant, res.matrix(0, 0), 1e-12);

  fc::FisherConfig q = cfg;
  q.method = fc::FisherMethod::QuadratureBased;
  q.n = 4096;
  const auto rq = fc::fisher_information(tmpl, th, q);
  EXPECT_NEAR(rq.matrix(0, 0), want, 0.05 * want);
}

TEST(Fisher, MatrixIsSymmetric) {
  const auto base = FactorModel::one_factor({fcref::frank_tau(0.5), fcref::frank_tau(0.3)},
                                            InnerCopula::constant(InnerFamily::Clayton, 2, 1.0));
  fc::FitTemplate tmpl(base, {{"a", {fc::LinkingSlot{0, 0}}}, {"inner", {fc::MappingSlot{0, 0}}}});
  fc::FisherConfig cfg;
  cfg.n = 500;
  cfg.seed = 9;
  const auto res = fc::fisher_information(tmpl, tmpl.current(), cfg);
  ASSERT_EQ(res.matrix.rows(), 2u);
  EXPECT_DOUBLE_EQ(res.matrix(0, 1), res.matrix(1, 0));
  EXPECT_GT(res.matrix(0, 0), 0.0);
  EXPECT_GT(res.matrix(1, 1), 0.0);
  EXPECT_GE(res.determinant, -1e-9);
}
