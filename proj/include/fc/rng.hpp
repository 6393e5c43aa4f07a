#pragma once

#include <cstdint>
#include <random>

namespace fc {

struct RngHandle {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

// Derive a child stream id; used to give blocks/replicates their own streams.
inline RngHandle substream(RngHandle h, std::uint64_t index) {
  return {h.seed, splitmix64(h.stream ^ splitmix64(index + 0x9e3779b97f4a7c15ULL))};
}

// Portable generator: mt19937_64 seeded through seed_seq, and variate
// algorithms written out here so draws do not depend on the standard library.
class Rng {
 public:
  explicit Rng(RngHandle h);
  Rng(std::uint64_t seed, std::uint64_t stream) : Rng(RngHandle{seed, stream}) {}

  std::uint64_t next() { return engine_(); }
  // Uniform on the open interval (0,1).
  double uniform();
  double normal();
  double exponential();
  double gamma(double shape);
  // Positive stable with Laplace transform exp(-s^alpha), 0 < alpha <= 1.
  double positive_stable(double alpha);
  // Logarithmic series with P(X=k) proportional to p^k / k, p = 1 - exp(-theta).
  std::uint64_t log_series(double theta);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fc
