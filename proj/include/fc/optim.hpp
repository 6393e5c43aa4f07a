#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "fc/rng.hpp"

namespace fc {

using Objective = std::function<double(std::span<const double>)>;

struct Box {
  std::vector<double> lo, hi;
  std::size_t size() const { return lo.size(); }
  void clamp(std::span<double> x) const;
};

struct OptimResult {
  std::vector<double> x;
  double f = 0.0;
  std::size_t evals = 0;
  bool converged = false;
  std::vector<double> trace;  // best value after each generation / iteration
};

struct DEConfig {
  std::size_t population = 0;  // 0: 10 * dimension
  std::size_t generations = 200;
  double weight = 0.8;     // F
  double crossover = 0.9;  // CR
  std::size_t threads = 0;
};

// rand/1/bin differential evolution over the box; minimizes.
OptimResult differential_evolution(const Objective& f, const Box& box, const DEConfig& config, Rng& rng);

struct SimplexConfig {
  double initial_step = 0.1;  // fraction of the box width
  double ftol = 1e-6;         // absolute spread of simplex values
  double xtol = 1e-5;         // simplex diameter
  std::size_t max_evals = 2000;
};

// Nelder-Mead, candidates clamped to the box; minimizes.
OptimResult nelder_mead(const Objective& f, const Box& box, std::vector<double> start,
                        const SimplexConfig& config);

}  // namespace fc
