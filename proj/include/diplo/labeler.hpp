#pragma once

// Tier one: bag-of-words strategy classifiers trained on the gold-labeled
// slice, label propagation to the rest of the corpus, and reduction of the
// four strategy flags to one Action per utterance.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "diplo/corpus.hpp"
#include "diplo/kernels.hpp"

namespace diplo {

/// Lowercased ASCII-alphanumeric runs; bytes >= 0x80 count as word characters.
std::vector<std::string> tokenize(std::string_view text);

/// Frozen token -> index map.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  /// Index of `token`, or size() when out of vocabulary.
  std::size_t find(std::string_view token) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Tokens with frequency >= min_freq, ordered by descending frequency then
/// lexicographically; truncated to max_size when max_size > 0.
Vocabulary build_vocabulary(std::span<const std::string> texts, std::size_t min_freq, std::size_t max_size = 0);

/// Sparse token-count vector; indices strictly increasing.
struct TextFeatures {
  std::size_t dim = 0;
  std::vector<std::uint32_t> indices;
  std::vector<double> counts;

  double at(std::size_t j) const;
  std::vector<double> dense() const;
};

TextFeatures featurize(std::string_view text, const Vocabulary& vocab);

enum class ClassifierKind { kLogisticRegression, kGaussianNB, kAdaBoostStumps };
inline constexpr std::array<ClassifierKind, 3> kAllClassifierKinds = {
    ClassifierKind::kLogisticRegression, ClassifierKind::kGaussianNB, ClassifierKind::kAdaBoostStumps};

const char* to_string(ClassifierKind k);

struct ClassifierParams {
  double lr_step = 0.1;
  int lr_epochs = 500;
  double lr_l2 = 1e-3;
  int ada_rounds = 50;
  double nb_var_floor = 1e-9;
  double threshold = 0.5;
};

struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;
};

/// Mean log-loss plus (l2/2)|w|^2 over dense rows (bias unpenalized).
double logistic_loss(const LogisticModel& m, const kernels::RowsView& x, std::span<const int> y, double l2);
/// Gradient of logistic_loss: weights first, bias last.
std::vector<double> logistic_gradient(const LogisticModel& m, const kernels::RowsView& x, std::span<const int> y,
                                      double l2);

struct GaussianNBModel {
  std::array<double, 2> log_prior{};
  std::array<std::vector<double>, 2> mean;
  std::array<std::vector<double>, 2> var;
  std::array<double, 2> zero_loglik{};  // log-likelihood of the zero vector per class
};

struct Stump {
  std::uint32_t feature = 0;
  double threshold = 0.0;
  int polarity = 1;  // predicts +polarity when x[feature] > threshold
  double alpha = 0.0;
};

struct AdaBoostModel {
  std::vector<Stump> stumps;
};

class BinaryClassifier {
 public:
  BinaryClassifier() = default;
  BinaryClassifier(ClassifierKind kind, std::variant<LogisticModel, GaussianNBModel, AdaBoostModel> model,
                   double threshold);

  ClassifierKind kind() const { return kind_; }
  double threshold() const { return threshold_; }
  const auto& model() const { return model_; }

  double predict_proba(const TextFeatures& x) const;
  bool predict(const TextFeatures& x) const { return predict_proba(x) >= threshold_; }

 private:
  ClassifierKind kind_ = ClassifierKind::kLogisticRegression;
  std::variant<LogisticModel, GaussianNBModel, AdaBoostModel> model_;
  double threshold_ = 0.5;
};

/// Deterministic training. Throws DataError on single-class input or non-finite features.
BinaryClassifier train_classifier(ClassifierKind kind, std::span<const TextFeatures> x, std::span<const int> y,
                                  const ClassifierParams& params = {});

/// Loss at the zero start and after each epoch of logistic-regression gradient descent.
std::vector<double> logistic_loss_trace(std::span<const TextFeatures> x, std::span<const int> y,
                                        const ClassifierParams& params);

std::vector<double> predict_proba_batch(const BinaryClassifier& c, std::span<const TextFeatures> x,
                                        Exec exec = Exec::kParallel);

/// One classifier per strategy over a shared vocabulary.
struct StrategySuite {
  Vocabulary vocab;
  std::array<BinaryClassifier, kNumStrategies> classifiers;
};

struct StrategyPrediction {
  StrategyLabels proba;
  std::array<bool, kNumStrategies> flags{};
};

StrategyPrediction predict_strategies(const StrategySuite& suite, std::string_view text);

/// Unweighted mean of per-class F1 over {0,1}; a class absent from both gold
/// and predictions scores 1.
double macro_f1(std::span<const int> predicted, std::span<const int> gold);

/// Sample Pearson correlation; throws NumericalError when either side has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// Pairwise correlation of per-(game, player) strategy rates. Strategy flags come
/// from gold labels when present, else from thresholded predictions. Entries whose
/// correlation is undefined (fewer than two players, or a constant rate) are NaN.
struct CorrelationReport {
  std::array<std::array<double, kNumStrategies>, kNumStrategies> r{};
  std::size_t n_players = 0;
};
CorrelationReport correlation_report(const Corpus& corpus);

/// How a message carrying both Friendship and Reasoning is resolved.
enum class VoteRule {
  kAnyVote,    // GM + SI >= 1 -> Reasoning
  kUnanimous,  // GM + SI == 2 -> Reasoning
};

Action assign_action(const std::array<bool, kNumStrategies>& flags, VoteRule rule = VoteRule::kAnyVote);

/// Action used downstream: explicit action, else gold labels, else thresholded
/// predictions, else Neutral.
Action effective_action(const Message& m, VoteRule rule = VoteRule::kAnyVote);

struct LabelConfig {
  std::size_t min_freq = 1;
  std::size_t max_vocab = 0;
  ClassifierParams params;
  double holdout_fraction = 0.2;
  std::uint64_t seed = 0;
  VoteRule vote = VoteRule::kAnyVote;
};

struct F1Row {
  ClassifierKind kind;
  Strategy strategy;
  double macro_f1;  // NaN if the kind could not be trained on the split
  bool selected;
  bool holdout;  // false: scored in-sample because the gold slice could not be split
};

struct LabelResult {
  Corpus corpus;
  StrategySuite suite;
  std::vector<F1Row> f1_table;
  CorrelationReport correlation;
};

/// Trains every classifier kind per strategy on the gold slice, keeps the best by
/// held-out macro-F1, and writes predictions and actions onto every message.
LabelResult label_corpus(const Corpus& corpus, const LabelConfig& cfg, Exec exec = Exec::kParallel);

}  // namespace diplo
