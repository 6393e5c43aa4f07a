#include "fc/citest.hpp"

#include <algorithm>
#include <cmath>

#include "fc/errors.hpp"
#include "fc/parallel.hpp"
#include "fc/ranks.hpp"
#include "fc/rng.hpp"
#include "fc/sampling.hpp"

namespace fc {

EmpiricalCopula::EmpiricalCopula(SampleMatrix pseudo) : data_(std::move(pseudo)) {
  if (data_.rows() == 0 || data_.cols() == 0) throw DomainError("empirical copula needs a non-empty sample");
}

double EmpiricalCopula::operator()(std::span<const double> t) const {
  if (t.size() != dimension()) throw DomainError("evaluation point has the wrong dimension");
  std::size_t count = 0;
  for (std::size_t h = 0; h < size(); ++h) {
    const auto row = data_.row(h);
    bool in = true;
    for (std::size_t i = 0; i < row.size() && in; ++i) in = row[i] <= t[i];
    count += in;
  }
  return static_cast<double>(count) / static_cast<double>(size());
}

double EmpiricalCopula::below(std::span<const double> t) const {
  std::size_t count = 0;
  for (std::size_t h = 0; h < size(); ++h) {
    const auto row = data_.row(h);
    bool in = true;
    for (std::size_t i = 0; i < row.size() && in; ++i) in = row[i] < t[i];
    count += in;
  }
  return static_cast<double>(count) / static_cast<double>(size());
}

double empirical_copula_eval(const SampleMatrix& pseudo, std::span<const double> t) {
  if (pseudo.rows() == 0) return 0.0;
  return EmpiricalCopula(pseudo)(t);
}

double t_statistic(const SampleMatrix& pseudo) {
  const std::size_t n = pseudo.rows();
  if (n < 10) throw DomainError("T_n needs at least 10 observations, got " + std::to_string(n));
  // C_n only grows when any coordinate grows while min(t) stays put, so the
  // sup over the cube equals the sup over the diagonal (s,...,s). There
  // C_n is the ecdf of the row maxima and s - C_n(s) peaks just below a jump.
  std::vector<double> top(n);
  for (std::size_t h = 0; h < n; ++h) {
    const auto row = pseudo.row(h);
    top[h] = *std::max_element(row.begin(), row.end());
  }
  std::sort(top.begin(), top.end());
  double best = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    if (k == 0 || top[k] != top[k - 1])
      best = std::max(best, top[k] - static_cast<double>(k) / static_cast<double>(n));
  return best;
}

std::string_view side_name(Side s) { return s == Side::Left ? "left" : "right"; }

Side parse_side(std::string_view s) {
  if (s == "left") return Side::Left;
  if (s == "right") return Side::Right;
  throw DomainError("side must be left or right, got '" + std::string(s) + "'");
}

double bootstrap_p_value(double t_obs, std::span<const double> boot, Side side) {
  if (boot.empty()) throw DomainError("no bootstrap statistics");
  std::size_t count = 0;
  for (double t : boot) count += side == Side::Left ? (t <= t_obs) : (t >= t_obs);
  return static_cast<double>(count) / static_cast<double>(boot.size());
}

namespace {

void validate(const CITestConfig& cfg) {
  if (cfg.bootstrap == 0) throw DomainError("bootstrap size must be positive");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
}

void run_bootstrap(CITestResult& res, const FactorModel& h0, std::size_t n, const CITestConfig& cfg) {
  res.bootstrap.assign(cfg.bootstrap, 0.0);
  const RngHandle base{cfg.seed, 0xb0075ULL};
  const SampleOptions opts{.threads = 1};
  parallel_for(
      cfg.bootstrap,
      [&](std::size_t k) {
        const SampleMatrix s = sample(h0, n, substream(base, k), opts);
        res.bootstrap[k] = t_statistic(pseudo_observations(s));
      },
      cfg.threads);
  res.p_value = bootstrap_p_value(res.t_obs, res.bootstrap, cfg.side);
  res.reject = res.p_value <= cfg.alpha;
  res.alpha = cfg.alpha;
  res.side = cfg.side;
}

// Rough per-variable starting taus from the pairwise rank correlations.
std::vector<double> starting_taus(const SampleMatrix& pseudo) {
  const Matrix k = kendall_tau_matrix(pseudo);
  const std::size_t d = k.rows();
  std::vector<double> out(d);
  for (std::size_t i = 0; i < d; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j)
      if (j != i) s += k(i, j);
    const double mean = s / static_cast<double>(d - 1);
    out[i] = std::copysign(std::sqrt(std::abs(mean)), mean);
  }
  return out;
}

}  // namespace

CITestResult ci_test(const Matrix& data, const std::vector<Family>& linking, const CITestConfig& config) {
  validate(config);
  const std::size_t d = data.cols();
  if (linking.size() != d)
    throw DomainError("expected " + std::to_string(d) + " linking families, got " + std::to_string(linking.size()));
  const SampleMatrix pseudo = pseudo_observations(data);
  const auto taus = starting_taus(pseudo);
  std::vector<BivariateCopula> links;
  std::vector<FreeParameter> free;
  for (std::size_t i = 0; i < d; ++i) {
    const Family f = linking[i];
    if (!has_parameter(f)) {
      links.emplace_back(f);
      continue;
    }
    const Interval r = tau_range(f);
    const double t = std::clamp(taus[i], std::max(r.lo, -0.9) + 1e-3, std::min(r.hi, 0.9) - 1e-3);
    links.push_back(BivariateCopula::from_tau(f, t));
    free.push_back({"linking.1[" + std::to_string(i + 1) + "]", {LinkingSlot{i, 0}}});
  }
  const FitTemplate tmpl(FactorModel::one_factor(links), free);
  FitConfig fcfg = config.fit;
  fcfg.seed = config.seed;
  fcfg.threads = config.threads;
  CITestResult res;
  res.h0_fit = fit(tmpl, pseudo, fcfg);
  res.t_obs = t_statistic(pseudo);
  run_bootstrap(res, *res.h0_fit.model, data.rows(), config);
  return res;
}

CITestResult ci_test_fixed(const Matrix& data, const FactorModel& h0, const CITestConfig& config) {
  validate(config);
  if (data.cols() != h0.dimension()) throw DomainError("data and null model differ in dimension");
  CITestResult res;
  res.h0_fit.model = h0;
  res.h0_fit.converged = true;
  res.t_obs = t_statistic(pseudo_observations(data));
  run_bootstrap(res, h0, data.rows(), config);
  return res;
}

std::vector<PowerRow> power_study(const PowerScenario& sc, std::uint64_t seed, std::size_t threads) {
  if (sc.replications == 0) throw DomainError("power study needs at least one replication");
  std::vector<BivariateCopula> links;
  for (double t : sc.linking_taus) links.push_back(BivariateCopula::from_tau(sc.linking_family, t));
  const std::size_t d = links.size();
  std::vector<Family> fams(d, sc.linking_family);

  struct Cell {
    std::size_t n, b;
  };
  std::vector<Cell> cells;
  for (std::size_t a = 0; a < sc.sizes.size(); ++a)
    for (std::size_t b = 0; b < sc.betas.size(); ++b) cells.push_back({a, b});
  const std::size_t jobs = cells.size() * sc.replications;
  std::vector<unsigned char> rejected(jobs, 0);
  std::vector<FactorModel> truth;
  for (double beta : sc.betas)
    truth.push_back(FactorModel::one_factor(
        links, beta == 0.0 ? InnerCopula::independence(d)
                           : InnerCopula::constant(InnerFamily::GaussianExchangeable, d, beta)));

  parallel_for(
      jobs,
      [&](std::size_t job) {
        const std::size_t c = job / sc.replications, r = job % sc.replications;
        const std::size_t n = sc.sizes[cells[c].n];
        const RngHandle cell_rng = substream({seed, 0x9077ULL}, c);
        const SampleMatrix x = sample(truth[cells[c].b], n, substream(cell_rng, 2 * r), {.threads = 1});
        CITestConfig cfg;
        cfg.bootstrap = sc.bootstrap;
        cfg.alpha = sc.alpha;
        cfg.side = sc.side;
        cfg.seed = substream(cell_rng, 2 * r + 1).stream;
        cfg.threads = 1;
        rejected[job] = ci_test(x, fams, cfg).reject;
      },
      threads);

  std::vector<PowerRow> out;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    PowerRow row;
    row.n = sc.sizes[cells[c].n];
    row.beta = sc.betas[cells[c].b];
    row.replications = sc.replications;
    for (std::size_t r = 0; r < sc.replications; ++r) row.rejections += rejected[c * sc.replications + r];
    row.power = static_cast<double>(row.rejections) / static_cast<double>(sc.replications);
    out.push_back(row);
  }
  return out;
}

std::vector<ScanRow> conjecture_scan(const std::vector<ScanSetup>& setups, const ScanConfig& config) {
  if (config.grid == 0) throw DomainError("scan grid must have at least one point per axis");
  if (config.mc_points < 2) throw DomainError("scan needs at least two Monte Carlo points");
  std::vector<ScanRow> out(setups.size());
  parallel_for(
      setups.size(),
      [&](std::size_t s) {
        const ScanSetup& su = setups[s];
        const FactorModel model = FactorModel::one_factor({su.c1, su.c2}, InnerCopula::bivariate(su.inner));
        ScanRow row{su};
        double sum = 0.0;
        std::size_t k = 0;
        for (std::size_t a = 1; a <= config.grid; ++a)
          for (std::size_t b = 1; b <= config.grid; ++b, ++k) {
            const double u[2] = {static_cast<double>(a) / static_cast<double>(config.grid + 1),
                                 static_cast<double>(b) / static_cast<double>(config.grid + 1)};
            IntegratorConfig cfg = IntegratorConfig::monte_carlo(config.mc_points, config.seed, config.antithetic);
            cfg.stream = s * config.grid * config.grid + k;
            const auto est = model.outer_cdf(u, cfg);
            const double gap = est.value - su.inner.cdf(u[0], u[1]);
            double p;
            if (est.error > 0.0) {
              p = normal_cdf(gap / est.error);
            } else if (gap == 0.0) {
              p = 0.5;
            } else {
              ++row.skipped;
              continue;
            }
            sum += p;
            row.max_p = std::max(row.max_p, p);
            ++row.points;
          }
        row.mean_p = row.points ? sum / static_cast<double>(row.points) : std::nan("");
        out[s] = row;
      },
      config.threads);
  return out;
}

}  // namespace fc
