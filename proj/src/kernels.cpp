#include "diplo/kernels.hpp"

#include <algorithm>
#include <cassert>

namespace diplo::kernels {

namespace {

void accumulate_rows(const RowsView& x, std::span<const double> y, std::size_t begin, std::size_t end,
                     NormalEquations& out) {
  const std::size_t d = x.cols;
  for (std::size_t i = begin; i < end; ++i) {
    auto row = x.row(i);
    for (std::size_t a = 0; a < d; ++a) {
      const double xa = row[a];
      out.rhs[a] += xa * y[i];
      for (std::size_t b = a; b < d; ++b) out.gram[a * d + b] += xa * row[b];
    }
  }
}

void mirror_upper(NormalEquations& ne, std::size_t d) {
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < a; ++b) ne.gram[a * d + b] = ne.gram[b * d + a];
}

NormalEquations zeros(std::size_t d) { return {std::vector<double>(d * d, 0.0), std::vector<double>(d, 0.0)}; }

}  // namespace

namespace serial {

NormalEquations normal_equations(const RowsView& x, std::span<const double> y) {
  assert(y.size() == x.rows);
  NormalEquations out = zeros(x.cols);
  accumulate_rows(x, y, 0, x.rows, out);
  mirror_upper(out, x.cols);
  return out;
}

std::vector<double> discounted_sums(const Sequences& seqs, double gamma) {
  const std::size_t d = seqs.states.cols;
  std::vector<double> out(seqs.size() * d, 0.0);
  for (std::size_t k = 0; k < seqs.size(); ++k) {
    double w = 1.0;
    for (std::size_t r = seqs.offsets[k]; r < seqs.offsets[k + 1]; ++r) {
      auto row = seqs.states.row(r);
      for (std::size_t j = 0; j < d; ++j) out[k * d + j] += w * row[j];
      w *= gamma;
    }
  }
  return out;
}

std::vector<double> row_dots(const RowsView& x, std::span<const double> theta) {
  std::vector<double> out(x.rows, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    auto row = x.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < x.cols; ++j) s += theta[j] * row[j];
    out[i] = s;
  }
  return out;
}

}  // namespace serial

namespace parallel {

NormalEquations normal_equations(const RowsView& x, std::span<const double> y) {
  assert(y.size() == x.rows);
  const std::size_t d = x.cols;
  const std::size_t blocks = (x.rows + kReductionBlock - 1) / kReductionBlock;
  std::vector<NormalEquations> partial(blocks, zeros(d));

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(blocks); ++blk) {
    const std::size_t begin = static_cast<std::size_t>(blk) * kReductionBlock;
    accumulate_rows(x, y, begin, std::min(begin + kReductionBlock, x.rows), partial[blk]);
  }

  NormalEquations out = zeros(d);
  for (const auto& p : partial) {
    for (std::size_t k = 0; k < out.gram.size(); ++k) out.gram[k] += p.gram[k];
    for (std::size_t k = 0; k < d; ++k) out.rhs[k] += p.rhs[k];
  }
  mirror_upper(out, d);
  return out;
}

std::vector<double> discounted_sums(const Sequences& seqs, double gamma) {
  const std::size_t d = seqs.states.cols;
  const auto n = static_cast<std::ptrdiff_t>(seqs.size());
  std::vector<double> out(seqs.size() * d, 0.0);

#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    double w = 1.0;
    double* dst = out.data() + k * d;
    for (std::size_t r = seqs.offsets[k]; r < seqs.offsets[k + 1]; ++r) {
      auto row = seqs.states.row(r);
      for (std::size_t j = 0; j < d; ++j) dst[j] += w * row[j];
      w *= gamma;
    }
  }
  return out;
}

std::vector<double> row_dots(const RowsView& x, std::span<const double> theta) {
  std::vector<double> out(x.rows, 0.0);
  const auto n = static_cast<std::ptrdiff_t>(x.rows);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto row = x.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < x.cols; ++j) s += theta[j] * row[j];
    out[i] = s;
  }
  return out;
}

}  // namespace parallel
}  // namespace diplo::kernels
