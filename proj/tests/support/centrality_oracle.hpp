#pragma once

// Dense eigendecomposition references for the power-iteration centralities.

#include <Eigen/Dense>
#include <optional>
#include <random>
#include <vector>

#include "diplo/graph.hpp"

namespace diplo::testing {

/// Random digraph with integer weights in 1..3 on roughly half the ordered pairs.
inline CommGraph random_graph(std::mt19937_64& rng, std::size_t n) {
  std::vector<PlayerId> nodes;
  for (std::size_t i = 0; i < n; ++i) nodes.push_back("p" + std::to_string(i));
  std::vector<std::tuple<PlayerId, PlayerId, double>> edges;
  std::bernoulli_distribution present(0.45);
  std::uniform_int_distribution<int> weight(1, 3);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && present(rng)) edges.emplace_back(nodes[i], nodes[j], weight(rng));
  return graph_from_edges(nodes, edges);
}

struct DenseCentrality {
  // Empty when the principal eigenvalue is repeated and the target vector is
  // not unique.
  std::optional<std::vector<double>> eigen;
  std::optional<std::vector<double>> authority;
};

/// Max-normalized principal eigenvector of a symmetric PSD-or-not matrix, if unique.
inline std::optional<std::vector<double>> principal(const Eigen::MatrixXd& m) {
  const std::size_t n = static_cast<std::size_t>(m.rows());
  if (n == 0) return std::vector<double>{};
  if (m.isZero(0.0)) return std::vector<double>(n, 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const auto& vals = es.eigenvalues();  // ascending
  const double top = vals(static_cast<Eigen::Index>(n) - 1);
  if (n > 1 && top - vals(static_cast<Eigen::Index>(n) - 2) < 1e-9 * std::max(1.0, std::abs(top))) return std::nullopt;
  Eigen::VectorXd v = es.eigenvectors().col(static_cast<Eigen::Index>(n) - 1).cwiseAbs();
  v /= v.maxCoeff();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::abs(v(static_cast<Eigen::Index>(i))) < 1e-12 ? 0.0 : v(i);
  return out;
}

/// Symmetrized-adjacency eigenvector and A^T A principal eigenvector.
inline DenseCentrality dense_centrality(const CommGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = g.w(i, j);
  DenseCentrality out;
  out.eigen = principal(a + a.transpose());
  out.authority = principal(a.transpose() * a);
  return out;
}

}  // namespace diplo::testing
