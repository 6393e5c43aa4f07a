#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fc/factor_model.hpp"
#include "fc/matrix.hpp"
#include "fc/optim.hpp"
#include "fc/ranks.hpp"

namespace fc {

// ---- parameter registry -------------------------------------------------

struct LinkingSlot {
  std::size_t row, layer;
  bool operator==(const LinkingSlot&) const = default;
};
struct MappingSlot {
  std::size_t mapping, index;
  bool operator==(const MappingSlot&) const = default;
};
struct FactorLawSlot {
  bool operator==(const FactorLawSlot&) const = default;
};
using ParamSlot = std::variant<LinkingSlot, MappingSlot, FactorLawSlot>;

struct ParameterEntry {
  std::string name;
  ParamSlot slot;
};

std::string slot_name(const ParamSlot& slot);
// Every scalar parameter of the model in flat order: linking (row-major),
// inner mapping parameters, then the factor-law rate when it is used.
std::vector<ParameterEntry> parameter_registry(const FactorModel& model);
std::vector<double> flat_parameters(const FactorModel& model);
FactorModel with_flat_parameters(const FactorModel& model, std::span<const double> values);
double get_parameter(const FactorModel& model, const ParamSlot& slot);
FactorModel set_parameter(const FactorModel& model, const ParamSlot& slot, double value);

// A group of slots sharing one estimated value.
struct FreeParameter {
  std::string name;
  std::vector<ParamSlot> slots;
};

class FitTemplate {
 public:
  explicit FitTemplate(FactorModel base, std::vector<FreeParameter> free = {});

  const FactorModel& base() const { return base_; }
  const std::vector<FreeParameter>& free() const { return free_; }
  std::size_t size() const { return free_.size(); }
  std::vector<std::string> names() const;

  // Native parameter values -> model.
  FactorModel instantiate(std::span<const double> theta) const;
  std::vector<double> current() const;

  // One-parameter family behind a free parameter, if it has a tau map.
  std::optional<Family> tau_family(std::size_t k) const;
  // Optimization box: tau box for tau-capable parameters, native otherwise.
  std::pair<double, double> tau_box(std::size_t k) const;
  std::pair<double, double> native_box(std::size_t k) const;

 private:
  FactorModel base_;
  std::vector<FreeParameter> free_;
};

// ---- likelihood ---------------------------------------------------------

inline constexpr double kDensityFloor = 1e-300;

struct LoglikResult {
  double value = 0.0;
  std::size_t n_floored = 0;
  std::size_t n = 0;
};

// Sum of log densities over rows. Monte Carlo integration uses stream = row
// index so the value is a deterministic function of the parameters.
LoglikResult loglik(const FactorModel& model, const SampleMatrix& pseudo,
                    const IntegratorConfig& integrator, std::size_t threads = 0);
LoglikResult loglik(const FitTemplate& tmpl, const SampleMatrix& pseudo, std::span<const double> theta,
                    const IntegratorConfig& integrator, std::size_t threads = 0);

// ---- fitting ------------------------------------------------------------

enum class Optimizer { GlobalPopulation, LocalSimplex, Both };
enum class ParamSpace { Auto, Native };

std::string_view optimizer_name(Optimizer o);
Optimizer parse_optimizer(std::string_view s);

struct FitConfig {
  Optimizer optimizer = Optimizer::LocalSimplex;
  std::size_t restarts = 0;  // extra random simplex starts
  std::uint64_t seed = 0;
  ParamSpace space = ParamSpace::Auto;
  std::optional<IntegratorConfig> integrator;  // default: per depth, seeded from `seed`
  std::optional<std::vector<double>> start;    // native values
  std::optional<std::vector<std::pair<double, double>>> bounds;  // native box override
  DEConfig de;
  SimplexConfig simplex;
  std::size_t threads = 0;
};

struct FitResult {
  std::vector<std::string> names;
  std::vector<double> theta_hat;  // native
  std::vector<double> tau_hat;    // NaN where no tau map exists
  std::vector<std::pair<double, double>> bounds;  // native
  double loglik = 0.0;
  std::size_t n_evals = 0;
  std::size_t n_floored = 0;
  bool converged = false;
  std::vector<double> trace;  // best loglik per iteration
  std::optional<FactorModel> model;
};

FitResult fit(const FitTemplate& tmpl, const SampleMatrix& pseudo, const FitConfig& config);

// ---- Fisher information -------------------------------------------------

enum class FisherMethod { SampleBased, QuadratureBased };

struct FisherConfig {
  FisherMethod method = FisherMethod::SampleBased;
  std::size_t n = 100000;  // sample size, or points when the u-integral is MC/QMC
  std::uint64_t seed = 0;
  double rel_step = 1e-4;
  std::optional<IntegratorConfig> density_integrator;
  // QuadratureBased only: integrator over u in [0,1]^d.
  std::optional<IntegratorConfig> u_integrator;
  std::size_t threads = 0;
};

struct FisherResult {
  Matrix matrix;
  Matrix std_error;  // per entry; zero when not available
  double determinant = 0.0;
  FisherMethod method = FisherMethod::SampleBased;
  std::size_t n = 0;
  std::vector<double> steps;
  std::vector<std::string> notes;
};

FisherResult fisher_information(const FitTemplate& tmpl, std::span<const double> theta_r,
                                const FisherConfig& config);

}  // namespace fc
