#pragma once

// State encodings for the reward model and the discounted feature map
//   mu(h) = sum_t gamma^t phi(s_t)
// over one player's subthread.

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "diplo/corpus.hpp"
#include "diplo/graph.hpp"
#include "diplo/kernels.hpp"
#include "diplo/labeler.hpp"

namespace diplo {

enum class Variant { kContextAgnostic, kGraphAware };
enum class TimeIndex {
  kPlayer,  // t counts the player's own utterances
  kGlobal,  // t is the thread-level seq
};

const char* to_string(Variant v);
std::optional<Variant> variant_from_string(const std::string& s);
const char* to_string(TimeIndex t);
std::optional<TimeIndex> time_index_from_string(const std::string& s);

struct FeatureSchema {
  Variant variant = Variant::kContextAgnostic;
  std::vector<std::string> names;
  double gamma = 0.9;
  TimeIndex time_index = TimeIndex::kPlayer;
  bool include_action = true;

  std::size_t dim() const { return names.size(); }
  bool operator==(const FeatureSchema&) const = default;

  /// Throws UsageError unless gamma is in [0,1).
  static FeatureSchema make(Variant variant, double gamma = 0.9, TimeIndex time_index = TimeIndex::kPlayer,
                            bool include_action = true);
};

using StateVector = Eigen::VectorXd;

/// Opponent's most recent sender_score strictly before `m` in the thread.
std::optional<double> opponent_score_before(const Thread& thread, const Message& m);

/// phi(s) for one message. Context-agnostic layout:
///   [1, score_self - score_opp, action one-hot (friendship, reasoning, neutral)]
/// graph-aware appends self-minus-opponent differences of eigen, authority, hub,
/// in_degree, out_degree taken from the graph at the message's turn.
/// `graph` must be non-null exactly when the schema is graph-aware.
StateVector encode_state(const Message& m, const Thread& thread, const CentralityCache* graph,
                         const FeatureSchema& schema, VoteRule vote = VoteRule::kAnyVote);

struct FeatureMap {
  Eigen::VectorXd mu;
  std::size_t horizon = 0;  // T, index of the last state
};

/// Throws DataError for an empty subthread.
FeatureMap feature_map(const Subthread& sub, const FeatureSchema& schema, std::span<const StateVector> states);

/// First min(n, size) states; final score unchanged.
Subthread truncate_subthread(const Subthread& sub, std::size_t n);

/// One side of a thread after encoding.
struct EncodedSubthread {
  PlayerId player;
  std::optional<double> final_score;
  std::vector<std::int64_t> seqs;
  std::vector<StateVector> states;
  std::size_t opponent_score_fallbacks = 0;  // states encoded with score_opp = 0

  bool degenerate() const { return states.empty() || !final_score; }
};

struct EncodedThread {
  std::string game_id;
  std::string thread_id;
  std::array<EncodedSubthread, 2> sides;  // ordered as Thread::participants
};

FeatureMap feature_map(const EncodedSubthread& sub, const FeatureSchema& schema);
EncodedThread truncate(const EncodedThread& t, std::size_t n);

/// Encodes every thread of the corpus. For graph-aware schemas `graph` must hold a
/// table for every (game, turn) the corpus uses.
std::vector<EncodedThread> encode_corpus(const Corpus& corpus, const FeatureSchema& schema,
                                         const CentralityCache* graph, VoteRule vote = VoteRule::kAnyVote,
                                         Exec exec = Exec::kParallel);

}  // namespace diplo
