#pragma once

// Deterministic synthetic corpora with planted ground truth, used as the test
// substrate in place of real game logs.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "diplo/corpus.hpp"
#include "diplo/encoding.hpp"

namespace diplo {

enum class ScoreMode {
  kPlantedRegression,  // f_i = theta* . mu(h_i) + noise
  kBehavioral,         // scores grow with centrality-weighted reasoning
};

const char* to_string(ScoreMode m);
std::optional<ScoreMode> score_mode_from_string(const std::string& s);

struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t n_players = 5;
  std::size_t n_games = 4;
  std::size_t threads_per_game = 15;
  std::size_t min_messages = 6;  // per thread
  std::size_t max_messages = 16;
  std::size_t n_turns = 32;
  ScoreMode mode = ScoreMode::kBehavioral;
  double sigma = 0.0;  // noise on planted final scores
  double labeled_fraction = 0.6;
  double overlap = 0.0;  // chance a strategy token is drawn from another strategy's pool

  // Players differ in style; rates interpolate between these per strategy:
  // rate = low + (high - low) * style for R/GM/SI, reversed for F.
  std::array<double, kNumStrategies> rate_low = {0.1, 0.1, 0.1, 0.1};
  std::array<double, kNumStrategies> rate_high = {0.85, 0.85, 0.7, 0.6};

  // Planted-regression mode.
  Variant planted_variant = Variant::kGraphAware;
  double gamma = 0.9;
  std::vector<double> planted_theta;  // empty: built-in default for the variant
  double min_winner_margin = 1e-3;
  double score_spread = 5.0;  // spread of non-final scores

  // Behavioral mode.
  std::size_t n_hubs = 1;
  double hub_activity = 6.0;
  double initial_score = 10.0;
  double initial_spread = 0.0;
  double gain = 0.1;  // per reasoning message, times the sender's eigen centrality
  double drift = 0.02;
  double alternation = 1.0;  // chance the other participant speaks next
  // Turns between the negotiation and the closing exchange, in which each
  // participant speaks once more; 0 keeps every message on consecutive turns.
  std::size_t resolution_gap = 4;

  /// Throws UsageError when the configuration cannot be generated.
  void validate() const;
};

struct LedgerPlayer {
  std::string game_id;
  PlayerId player;
  double style = 0.0;
  double activity = 0.0;
  std::array<double, kNumStrategies> rates{};
};

struct LedgerMessage {
  std::string thread_id;
  std::int64_t seq = 0;
  StrategyLabels truth;
  Action action = Action::kNeutral;
};

struct LedgerThread {
  std::string game_id;
  std::string thread_id;
  std::optional<PlayerId> winner;
  std::map<PlayerId, std::size_t> message_counts;
  std::map<PlayerId, double> final_scores;
  std::map<PlayerId, std::vector<double>> mu;  // planted-regression mode only
};

struct GeneratorLedger {
  ScoreMode mode = ScoreMode::kBehavioral;
  std::vector<std::string> feature_names;  // planted-regression mode
  std::vector<double> planted_theta;       // identifiable representative actually used
  std::vector<LedgerPlayer> players;
  std::vector<LedgerThread> threads;
  std::vector<LedgerMessage> messages;
  std::map<std::string, std::size_t> token_counts;
  std::vector<std::string> token_inventory;  // every pool word, sorted
};

struct SynthOutput {
  Corpus corpus;
  GeneratorLedger ledger;
};

SynthOutput generate(const SynthConfig& cfg);

/// Writes the ledger as JSONL (one typed record per line).
void write_ledger(std::ostream& out, const GeneratorLedger& ledger);

/// Schema the planted-regression mode encodes with.
FeatureSchema planted_schema(const SynthConfig& cfg);

}  // namespace diplo
