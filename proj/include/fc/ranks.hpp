#pragma once

#include <span>
#include <vector>

#include "fc/matrix.hpp"

namespace fc {

// rank / (n + 1) per column, average ranks for ties.
SampleMatrix pseudo_observations(const Matrix& data);
std::vector<double> average_ranks(std::span<const double> x);

// Kendall's tau-b, O(n log n).
double kendall_tau(std::span<const double> x, std::span<const double> y);
Matrix kendall_tau_matrix(const Matrix& data);

// Pearson correlation of the normal scores of two pseudo-observation columns.
double normal_scores_correlation(std::span<const double> u, std::span<const double> v);

}  // namespace fc
