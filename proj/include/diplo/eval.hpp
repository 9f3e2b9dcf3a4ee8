#pragma once

// Winner prediction from average estimated rewards, evaluation protocols, and
// the first-n utterance ablation.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "diplo/encoding.hpp"
#include "diplo/sbirl.hpp"

namespace diplo {

/// Participant with the strictly higher final score; nullopt on a tie.
/// Throws DataError when a final score is unknown.
std::optional<PlayerId> thread_winner(const Thread& thread);

/// Same rule on an encoded thread; returns the winning side (0 or 1).
std::optional<std::size_t> winner_side(const EncodedThread& t);

enum class EvalMode { kCrossValidation, kInSample };
const char* to_string(EvalMode m);
std::optional<EvalMode> eval_mode_from_string(const std::string& s);

struct EvalConfig {
  EvalMode mode = EvalMode::kCrossValidation;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  double lambda = 1e-6;
  AverageMode average = AverageMode::kUniform;
  Exec exec = Exec::kParallel;
};

enum class ThreadStatus { kUsed, kTie, kDegenerate };
const char* to_string(ThreadStatus s);

struct ThreadRecord {
  std::string game_id;
  std::string thread_id;
  ThreadStatus status = ThreadStatus::kUsed;
  PlayerId winner;
  PlayerId loser;
  double winner_avg_reward = 0.0;
  double loser_avg_reward = 0.0;
  bool correct = false;
  int fold = -1;  // -1 for in-sample evaluation
};

struct EvalReport {
  Variant variant = Variant::kContextAgnostic;
  std::size_t n_threads_used = 0;
  std::size_t n_ties = 0;
  std::size_t n_degenerate = 0;
  std::size_t n_correct = 0;
  double accuracy = 0.0;
  std::vector<ThreadRecord> records;
};

/// Scores a fixed model: a used thread is correct when the winner's average
/// reward is strictly greater than the loser's. Throws DataError when no thread is usable.
EvalReport accuracy(const RewardModel& model, std::span<const EncodedThread> threads,
                    AverageMode average = AverageMode::kUniform);

/// Fits and scores under the configured protocol. Cross-validation assigns
/// threads to folds by a seeded shuffle, refits per fold, and reports the mean
/// of the per-fold accuracies (n_correct and the counts stay pooled).
EvalReport evaluate(std::span<const EncodedThread> threads, const FeatureSchema& schema, const EvalConfig& cfg);

struct AblationRow {
  std::size_t n = 0;
  Variant variant = Variant::kContextAgnostic;
  double accuracy = 0.0;
  std::size_t n_threads_used = 0;
};

/// For each n (positive, strictly ascending) truncates every side to its first n
/// states, then refits and evaluates under `cfg`.
std::vector<AblationRow> ablation(std::span<const EncodedThread> threads, const FeatureSchema& schema,
                                  const EvalConfig& cfg, std::span<const std::size_t> ns);

/// Longest subthread in the set.
std::size_t max_subthread_length(std::span<const EncodedThread> threads);

void write_summary_csv_header(std::ostream& out);
void write_summary_csv_row(std::ostream& out, const EvalReport& r, const EvalConfig& cfg, const FeatureSchema& s);
void write_thread_csv(std::ostream& out, std::span<const EvalReport> reports);
void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows);

}  // namespace diplo
