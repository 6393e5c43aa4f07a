#include "fc/ranks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "fc/bicop.hpp"
#include "fc/errors.hpp"

namespace fc {

std::vector<double> average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

SampleMatrix pseudo_observations(const Matrix& data) {
  const std::size_t n = data.rows(), d = data.cols();
  if (n < 2) throw DomainError("pseudo-observations need at least two rows");
  SampleMatrix out(n, d);
  for (std::size_t c = 0; c < d; ++c) {
    const auto col = data.column(c);
    bool constant = true;
    for (double x : col) {
      if (!std::isfinite(x)) throw DomainError("column " + std::to_string(c + 1) + " has a missing or non-finite value");
      constant = constant && x == col[0];
    }
    if (constant) throw DomainError("column " + std::to_string(c + 1) + " is constant; ranks undefined");
    const auto r = average_ranks(col);
    for (std::size_t i = 0; i < n; ++i) out(i, c) = r[i] / static_cast<double>(n + 1);
  }
  return out;
}

namespace {

std::uint64_t tie_pairs(const std::vector<double>& sorted) {
  std::uint64_t total = 0, run = 1;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] == sorted[i - 1]) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total + run * (run - 1) / 2;
}

// Sorts v ascending and returns the number of inversions.
std::uint64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += mid - i;
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (y.size() != n) throw DomainError("kendall_tau: length mismatch");
  if (n < 2) throw DomainError("kendall_tau needs at least two observations");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[idx[i]];
    ys[i] = y[idx[i]];
  }
  const std::uint64_t n1 = tie_pairs(xs);
  std::uint64_t n3 = 0, run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (xs[i] == xs[i - 1] && ys[i] == ys[i - 1]) {
      ++run;
    } else {
      n3 += run * (run - 1) / 2;
      run = 1;
    }
  }
  n3 += run * (run - 1) / 2;
  std::vector<double> buf(n);
  const std::uint64_t swaps = merge_count(ys, buf, 0, n);
  const std::uint64_t n2 = tie_pairs(ys);
  const double n0 = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const double s = n0 - static_cast<double>(n1) - static_cast<double>(n2) + static_cast<double>(n3) -
                   2.0 * static_cast<double>(swaps);
  const double den = std::sqrt((n0 - static_cast<double>(n1)) * (n0 - static_cast<double>(n2)));
  if (den == 0.0) return 0.0;
  return s / den;
}

Matrix kendall_tau_matrix(const Matrix& data) {
  const std::size_t d = data.cols();
  Matrix out(d, d, 1.0);
  std::vector<std::vector<double>> cols;
  for (std::size_t c = 0; c < d; ++c) cols.push_back(data.column(c));
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a + 1; b < d; ++b) out(a, b) = out(b, a) = kendall_tau(cols[a], cols[b]);
  return out;
}

double normal_scores_correlation(std::span<const double> u, std::span<const double> v) {
  const std::size_t n = u.size();
  if (v.size() != n || n < 2) throw DomainError("normal_scores_correlation: bad input");
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = normal_quantile(u[i]), b = normal_quantile(v[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    syy += b * b;
    sxy += a * b;
  }
  const double m = static_cast<double>(n);
  const double cov = sxy / m - sx / m * sy / m;
  return cov / std::sqrt((sxx / m - sx * sx / (m * m)) * (syy / m - sy * sy / (m * m)));
}

}  // namespace fc
