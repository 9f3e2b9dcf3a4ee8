#pragma once

// Test-only reference computations, written without Eigen so they stay
// independent of the production code paths they check.

#include <cstddef>
#include <span>
#include <vector>

namespace diplo::oracle {

/// Ridge/minimum-norm least squares through an explicit one-sided Jacobi SVD,
/// independent of the production solver:
///   theta = sum_k v_k * s_k / (s_k^2 + n*lambda) * (u_k . y)
/// With lambda = 0, singular values below 1e-10 * s_max are dropped.
/// `rows` is row-major n x d.
std::vector<double> pseudo_inverse(std::span<const double> rows, std::size_t n, std::size_t d,
                                   std::span<const double> targets, double lambda);

}  // namespace diplo::oracle
