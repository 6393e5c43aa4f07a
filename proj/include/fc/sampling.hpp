#pragma once

#include <cstddef>
#include <span>

#include "fc/factor_model.hpp"
#include "fc/matrix.hpp"
#include "fc/rng.hpp"

namespace fc {

struct SampleOptions {
  // For a conditionally invariant inner copula, draw the inner vector
  // without evaluating the factor mapping. Same law either way.
  bool invariance_shortcut = true;
  std::size_t threads = 0;
  std::size_t block_rows = 256;  // rows per RNG stream
};

// Inverse of G_i in u: H_i1^{-1} o ... o H_iw^{-1}. Comonotone and
// countermonotone layers put all mass at t_j and 1 - t_j.
double g_inverse(const FactorModel& model, std::size_t i, double p, std::span<const double> t);

// One latent layer.
SampleMatrix sample_eofc(const FactorModel& model, std::size_t n, RngHandle rng,
                         const SampleOptions& options = {});
// Any depth.
SampleMatrix sample_neofc(const FactorModel& model, std::size_t n, RngHandle rng,
                          const SampleOptions& options = {});
SampleMatrix sample(const FactorModel& model, std::size_t n, RngHandle rng,
                    const SampleOptions& options = {});

}  // namespace fc
