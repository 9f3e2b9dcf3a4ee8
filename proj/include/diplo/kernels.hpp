#pragma once

// Data-parallel numeric kernels. Each kernel has a plain serial reference in
// `serial::` and an OpenMP version in `parallel::`; tests hold them to
// agreement and bench/ compares their throughput.
//
// Parallel reductions sum fixed-size blocks and combine the block partials in
// block order, so results do not depend on the thread count.

#include <cstddef>
#include <span>
#include <vector>

namespace diplo {

enum class Exec { kSerial, kParallel };

namespace kernels {

/// Row-major n x d matrix view over contiguous storage.
struct RowsView {
  std::span<const double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::span<const double> row(std::size_t i) const { return data.subspan(i * cols, cols); }
};

/// Gram matrix M = sum_i x_i x_i^T (row-major d x d) and b = sum_i x_i y_i.
struct NormalEquations {
  std::vector<double> gram;
  std::vector<double> rhs;
};

/// Ragged sequences of d-vectors: sequence k owns rows [offsets[k], offsets[k+1]).
struct Sequences {
  RowsView states;
  std::span<const std::size_t> offsets;

  std::size_t size() const { return offsets.empty() ? 0 : offsets.size() - 1; }
};

inline constexpr std::size_t kReductionBlock = 256;

namespace serial {
NormalEquations normal_equations(const RowsView& x, std::span<const double> y);
/// Row k = sum_t gamma^t * states[offsets[k] + t].
std::vector<double> discounted_sums(const Sequences& seqs, double gamma);
/// r_i = theta . x_i
std::vector<double> row_dots(const RowsView& x, std::span<const double> theta);
}  // namespace serial

namespace parallel {
NormalEquations normal_equations(const RowsView& x, std::span<const double> y);
std::vector<double> discounted_sums(const Sequences& seqs, double gamma);
std::vector<double> row_dots(const RowsView& x, std::span<const double> theta);
}  // namespace parallel

inline NormalEquations normal_equations(const RowsView& x, std::span<const double> y, Exec e) {
  return e == Exec::kParallel ? parallel::normal_equations(x, y) : serial::normal_equations(x, y);
}
inline std::vector<double> discounted_sums(const Sequences& s, double gamma, Exec e) {
  return e == Exec::kParallel ? parallel::discounted_sums(s, gamma) : serial::discounted_sums(s, gamma);
}
inline std::vector<double> row_dots(const RowsView& x, std::span<const double> theta, Exec e) {
  return e == Exec::kParallel ? parallel::row_dots(x, theta) : serial::row_dots(x, theta);
}

}  // namespace kernels
}  // namespace diplo
