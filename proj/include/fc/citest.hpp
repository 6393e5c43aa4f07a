#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fc/factor_model.hpp"
#include "fc/inference.hpp"
#include "fc/matrix.hpp"

namespace fc {

class EmpiricalCopula {
 public:
  explicit EmpiricalCopula(SampleMatrix pseudo);

  std::size_t size() const { return data_.rows(); }
  std::size_t dimension() const { return data_.cols(); }
  const SampleMatrix& data() const { return data_; }

  // Fraction of rows componentwise <= t.
  double operator()(std::span<const double> t) const;
  // Left limit: fraction of rows componentwise < t.
  double below(std::span<const double> t) const;

 private:
  SampleMatrix data_;
};

double empirical_copula_eval(const SampleMatrix& pseudo, std::span<const double> t);

// Fixed low-discrepancy part of the sup set, 2048 points in (0,1)^d.
const Matrix& tn_grid(std::size_t d);

// sup_t (min(t) - C_n(t)) over the jump corners of the data plus tn_grid(d).
double t_statistic(const SampleMatrix& pseudo);

// Left: alternative is positive conditional dependence (reject on small T_n).
// Right: negative conditional dependence (reject on large T_n).
enum class Side { Left, Right };
std::string_view side_name(Side s);
Side parse_side(std::string_view s);

double bootstrap_p_value(double t_obs, std::span<const double> boot, Side side);

struct CITestConfig {
  std::size_t bootstrap = 200;
  double alpha = 0.1;
  Side side = Side::Left;
  std::uint64_t seed = 0;
  FitConfig fit;
  std::size_t threads = 0;
};

struct CITestResult {
  double t_obs = 0.0;
  std::vector<double> bootstrap;
  double p_value = 1.0;
  bool reject = false;
  FitResult h0_fit;
  double alpha = 0.1;
  Side side = Side::Left;
};

// Raw data in, ranks taken here. Linking families are fitted under an
// independence inner copula, then the fitted model is resampled.
CITestResult ci_test(const Matrix& data, const std::vector<Family>& linking, const CITestConfig& config);

// Same bootstrap with a given null model and no fit.
CITestResult ci_test_fixed(const Matrix& data, const FactorModel& h0, const CITestConfig& config);

struct PowerScenario {
  std::vector<std::size_t> sizes{50, 500};
  std::vector<double> betas{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<double> linking_taus{0.4, 0.5, 0.6};
  Family linking_family = Family::Clayton;
  std::size_t replications = 500;
  std::size_t bootstrap = 200;
  double alpha = 0.1;
  Side side = Side::Left;
};

struct PowerRow {
  std::size_t n = 0;
  double beta = 0.0;
  double power = 0.0;
  std::size_t rejections = 0;
  std::size_t replications = 0;
};

// Gaussian-exchangeable inner with correlation beta; one row per (n, beta).
std::vector<PowerRow> power_study(const PowerScenario& scenario, std::uint64_t seed, std::size_t threads = 0);

struct ScanSetup {
  BivariateCopula inner;
  BivariateCopula c1;
  BivariateCopula c2;
};

struct ScanConfig {
  std::size_t grid = 10;  // interior points k / (grid + 1)
  std::size_t mc_points = 100000;
  std::uint64_t seed = 0;
  bool antithetic = false;
  std::size_t threads = 0;
};

struct ScanRow {
  ScanSetup setup;
  double mean_p = 0.0;
  double max_p = 0.0;
  std::size_t points = 0;   // grid points used
  std::size_t skipped = 0;  // zero standard error with a nonzero gap
};

// Left-tail normal p-values for outer < inner on the grid, averaged.
std::vector<ScanRow> conjecture_scan(const std::vector<ScanSetup>& setups, const ScanConfig& config);

}  // namespace fc
