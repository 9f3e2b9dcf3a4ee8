#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace diplo::oracle {

std::vector<double> pseudo_inverse(std::span<const double> rows, std::size_t n, std::size_t d,
                                   std::span<const double> targets, double lambda) {
  if (rows.size() != n * d || targets.size() != n) throw std::invalid_argument("oracle: shape mismatch");
  if (lambda < 0.0) throw std::invalid_argument("oracle: lambda must be >= 0");

  // Column-major working copy: columns of A are orthogonalized in place
  // (A V = U S), V accumulates the rotations.
  std::vector<std::vector<double>> a(d, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) a[j][i] = rows[i * d + j];
  std::vector<std::vector<double>> v(d, std::vector<double>(d, 0.0));
  for (std::size_t j = 0; j < d; ++j) v[j][j] = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        double alpha = 0, beta = 0, gamma = 0;
        for (std::size_t i = 0; i < n; ++i) {
          alpha += a[p][i] * a[p][i];
          beta += a[q][i] * a[q][i];
          gamma += a[p][i] * a[q][i];
        }
        if (gamma == 0.0 || std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta)) continue;
        off = std::max(off, std::abs(gamma) / std::sqrt(alpha * beta));
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < n; ++i) {
          const double ap = a[p][i], aq = a[q][i];
          a[p][i] = c * ap - s * aq;
          a[q][i] = s * ap + c * aq;
        }
        for (std::size_t i = 0; i < d; ++i) {
          const double vp = v[p][i], vq = v[q][i];
          v[p][i] = c * vp - s * vq;
          v[q][i] = s * vp + c * vq;
        }
      }
    }
    if (off < 1e-15) break;
  }

  std::vector<double> sv(d);
  double s_max = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double nrm = 0.0;
    for (double x : a[j]) nrm += x * x;
    sv[j] = std::sqrt(nrm);
    s_max = std::max(s_max, sv[j]);
  }

  const double shift = static_cast<double>(n) * lambda;
  std::vector<double> theta(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    const double s = sv[k];
    double coef = 0.0;
    if (lambda > 0.0) {
      if (s == 0.0) continue;
      // u_k . y = (a_k . y) / s_k
      coef = 1.0 / (s * s + shift);
    } else {
      if (s <= 1e-10 * s_max || s == 0.0) continue;
      coef = 1.0 / (s * s);
    }
    double aty = 0.0;  // s_k * (u_k . y)
    for (std::size_t i = 0; i < n; ++i) aty += a[k][i] * targets[i];
    for (std::size_t j = 0; j < d; ++j) theta[j] += v[k][j] * coef * aty;
  }
  return theta;
}

}  // namespace diplo::oracle
