#include "diplo/sbirl.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "diplo/csv.hpp"

namespace diplo {

namespace {

constexpr const char* kModelMagic = "# diplo reward model v1";

double parse_double(const std::string& s, const std::string& key) {
  if (s == "nan") return std::nan("");
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError("model file: bad number '" + s + "' for " + key);
  }
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

}  // namespace

RewardModel fit(std::span<const TrainingPair> pairs, const FeatureSchema& schema, double lambda, Exec exec) {
  if (pairs.empty()) throw DataError("fit needs at least one (feature map, score) pair");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw UsageError("ridge lambda must be a finite value >= 0");
  const std::size_t d = schema.dim();
  const std::size_t n = pairs.size();

  std::vector<double> rows(n * d);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (static_cast<std::size_t>(pairs[i].mu.size()) != d) throw DataError("feature map dimension differs from schema");
    if (!pairs[i].mu.allFinite() || !std::isfinite(pairs[i].final_score)) {
      throw DataError("non-finite feature map or final score at pair " + std::to_string(i));
    }
    for (std::size_t j = 0; j < d; ++j) rows[i * d + j] = pairs[i].mu[static_cast<Eigen::Index>(j)];
    y[i] = pairs[i].final_score;
  }
  const kernels::RowsView view{rows, n, d};
  const auto ne = kernels::normal_equations(view, y, exec);

  const auto di = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd gram = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      ne.gram.data(), di, di);
  const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(ne.rhs.data(), di);
  const double shift = static_cast<double>(n) * lambda;
  gram.diagonal().array() += shift;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double ev_max = eig.eigenvalues().cwiseAbs().maxCoeff();
  const double ev_min = eig.eigenvalues().cwiseAbs().minCoeff();
  const double condition = ev_min > 0.0 ? ev_max / ev_min : std::numeric_limits<double>::infinity();

  RewardModel model;
  model.schema = schema;
  model.lambda = lambda;

  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> design(
      rows.data(), static_cast<Eigen::Index>(n), di);
  const Eigen::Map<const Eigen::VectorXd> target(y.data(), static_cast<Eigen::Index>(n));

  if (lambda > 0.0) {
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("Cholesky factorization failed (condition estimate " + format_double(condition) + ")");
    }
    model.theta = llt.solve(rhs);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(design);
    lu.setThreshold(kRankThreshold);
    model.diagnostics.rank = static_cast<std::size_t>(lu.rank());
  } else {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    cod.setThreshold(kRankThreshold);
    cod.compute(design);
    model.theta = cod.solve(target);
    model.diagnostics.rank = static_cast<std::size_t>(cod.rank());
  }
  if (!model.theta.allFinite()) {
    throw NumericalError("solver produced non-finite weights (condition estimate " + format_double(condition) + ")");
  }
  model.diagnostics.n = n;
  model.diagnostics.condition = condition;
  model.diagnostics.residual_norm = (target - design * model.theta).norm();
  return model;
}

double reward(const RewardModel& model, const StateVector& phi) {
  if (phi.size() != model.theta.size()) throw UsageError("state dimension differs from model dimension");
  return model.theta.dot(phi);
}

const char* to_string(AverageMode m) { return m == AverageMode::kDiscounted ? "discounted" : "uniform"; }

double average_reward(const RewardModel& model, std::span<const StateVector> states, AverageMode mode) {
  if (states.empty()) throw DataError("average reward of an empty subthread");
  double num = 0.0, den = 0.0, w = 1.0;
  for (const auto& s : states) {
    const double wt = mode == AverageMode::kDiscounted ? w : 1.0;
    num += wt * reward(model, s);
    den += wt;
    w *= model.schema.gamma;
  }
  return num / den;
}

std::vector<TrainingPair> training_pairs(std::span<const EncodedThread> threads, const FeatureSchema& schema) {
  std::vector<TrainingPair> out;
  for (const auto& t : threads)
    for (const auto& side : t.sides)
      if (!side.degenerate()) out.push_back({feature_map(side, schema).mu, *side.final_score});
  return out;
}

void save_model(std::ostream& out, const RewardModel& model) {
  const auto& s = model.schema;
  out << kModelMagic << '\n';
  out << "variant=" << to_string(s.variant) << '\n';
  out << "gamma=" << format_double(s.gamma) << '\n';
  out << "time_index=" << to_string(s.time_index) << '\n';
  out << "include_action=" << (s.include_action ? 1 : 0) << '\n';
  out << "features=";
  for (std::size_t j = 0; j < s.names.size(); ++j) out << (j ? "," : "") << s.names[j];
  out << '\n';
  out << "lambda=" << format_double(model.lambda) << '\n';
  out << "theta=";
  for (Eigen::Index j = 0; j < model.theta.size(); ++j) out << (j ? "," : "") << format_double(model.theta[j]);
  out << '\n';
  out << "n=" << model.diagnostics.n << '\n';
  out << "residual_norm=" << format_double(model.diagnostics.residual_norm) << '\n';
  out << "condition=" << format_double(model.diagnostics.condition) << '\n';
  out << "rank=" << model.diagnostics.rank << '\n';
}

RewardModel load_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kModelMagic) throw DataError("not a reward model file");
  std::map<std::string, std::string> kv;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("model file: expected key=value, got '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw DataError(std::string("model file: missing '") + key + "'");
    return it->second;
  };

  const auto variant = variant_from_string(need("variant"));
  const auto time_index = time_index_from_string(need("time_index"));
  if (!variant || !time_index) throw DataError("model file: bad variant or time_index");
  RewardModel m;
  m.schema = FeatureSchema::make(*variant, parse_double(need("gamma"), "gamma"), *time_index,
                                 need("include_action") == "1");
  if (split(need("features"), ',') != m.schema.names) {
    throw DataError("model file: feature names do not match the declared variant");
  }
  m.lambda = parse_double(need("lambda"), "lambda");
  const auto theta = split(need("theta"), ',');
  if (theta.size() != m.schema.dim()) throw DataError("model file: theta length differs from feature count");
  m.theta.resize(static_cast<Eigen::Index>(theta.size()));
  for (std::size_t j = 0; j < theta.size(); ++j) m.theta[static_cast<Eigen::Index>(j)] = parse_double(theta[j], "theta");
  m.diagnostics.n = std::stoull(need("n"));
  m.diagnostics.residual_norm = parse_double(need("residual_norm"), "residual_norm");
  m.diagnostics.condition = parse_double(need("condition"), "condition");
  m.diagnostics.rank = std::stoull(need("rank"));
  return m;
}

void save_model_file(const std::string& path, const RewardModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file '" + path + "'");
  save_model(out, model);
}

RewardModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file '" + path + "'");
  return load_model(in);
}

}  // namespace diplo
