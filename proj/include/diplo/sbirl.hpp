#pragma once

// Score-based reward estimation: regress final scores f_i on discounted feature
// maps mu(h_i) and read the fitted weights as a linear reward r(s) = theta . phi(s).

#include <Eigen/Dense>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "diplo/encoding.hpp"
#include "diplo/kernels.hpp"

namespace diplo {

struct FitDiagnostics {
  std::size_t n = 0;
  double residual_norm = 0.0;
  double condition = 0.0;  // eigenvalue ratio of the regularized Gram matrix
  std::size_t rank = 0;    // numerical rank of the design
};

struct RewardModel {
  Eigen::VectorXd theta;
  FeatureSchema schema;
  double lambda = 0.0;
  FitDiagnostics diagnostics;
};

struct TrainingPair {
  Eigen::VectorXd mu;
  double final_score = 0.0;
};

/// Relative pivot threshold below which the lambda = 0 path treats the design as rank deficient.
inline constexpr double kRankThreshold = 1e-10;

/// Solves (M + n*lambda*I) theta = b with M = sum mu mu^T, b = sum mu f.
/// lambda > 0: Cholesky on the regularized normal equations.
/// lambda = 0: minimum-norm least squares from a complete orthogonal decomposition of the design.
RewardModel fit(std::span<const TrainingPair> pairs, const FeatureSchema& schema, double lambda,
                Exec exec = Exec::kParallel);

double reward(const RewardModel& model, const StateVector& phi);

enum class AverageMode {
  kUniform,     // plain mean of r(s_t)
  kDiscounted,  // sum gamma^t r(s_t) / sum gamma^t
};

const char* to_string(AverageMode m);

/// Mean reward over a nonempty sequence of state vectors (in subthread order).
double average_reward(const RewardModel& model, std::span<const StateVector> states,
                      AverageMode mode = AverageMode::kUniform);

/// Training pairs from every non-degenerate side of the given threads.
std::vector<TrainingPair> training_pairs(std::span<const EncodedThread> threads, const FeatureSchema& schema);

/// Plain-text model file: schema, full-precision theta, lambda, diagnostics.
void save_model(std::ostream& out, const RewardModel& model);
RewardModel load_model(std::istream& in);
void save_model_file(const std::string& path, const RewardModel& model);
RewardModel load_model_file(const std::string& path);

}  // namespace diplo
