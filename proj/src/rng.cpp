#include "fc/rng.hpp"

#include <cmath>
#include <numbers>

namespace fc {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {
std::mt19937_64 make_engine(RngHandle h) {
  std::seed_seq seq{static_cast<std::uint32_t>(h.seed), static_cast<std::uint32_t>(h.seed >> 32),
                    static_cast<std::uint32_t>(h.stream),
                    static_cast<std::uint32_t>(h.stream >> 32)};
  return std::mt19937_64(seq);
}
}  // namespace

Rng::Rng(RngHandle h) : engine_(make_engine(h)) {}

double Rng::uniform() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double x, y, s;
  do {
    x = 2.0 * uniform() - 1.0;
    y = 2.0 * uniform() - 1.0;
    s = x * x + y * y;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = y * f;
  has_spare_ = true;
  return x * f;
}

double Rng::exponential() { return -std::log(uniform()); }

// Marsaglia-Tsang; shape < 1 via the u^(1/a) boost.
double Rng::gamma(double shape) {
  if (shape < 1.0) {
    const double g = gamma(shape + 1.0);
    return g * std::pow(uniform(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

// Kanter's representation.
double Rng::positive_stable(double alpha) {
  if (alpha >= 1.0) return 1.0;
  const double u = std::numbers::pi * uniform();
  const double e = exponential();
  const double a = std::sin(alpha * u) / std::pow(std::sin(u), 1.0 / alpha);
  const double b = std::pow(std::sin((1.0 - alpha) * u) / e, (1.0 - alpha) / alpha);
  return a * b;
}

// Kemp's LK algorithm.
std::uint64_t Rng::log_series(double theta) {
  const double p = -std::expm1(-theta);
  const double v = uniform();
  if (v > p) return 1;
  const double q = -std::expm1(-theta * uniform());
  if (v < q * q) {
    const double k = std::floor(1.0 + std::log(v) / std::log(q));
    return k < 1.0 ? 1 : static_cast<std::uint64_t>(k);
  }
  return v > q ? 1 : 2;
}

}  // namespace fc
