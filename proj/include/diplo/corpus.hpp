#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "diplo/error.hpp"

namespace diplo {

using PlayerId = std::string;

/// The four rhetorical strategies, in canonical column order.
enum class Strategy : std::size_t { kFriendship = 0, kReasoning, kGameMove, kShareInfo };
inline constexpr std::size_t kNumStrategies = 4;
inline constexpr std::array<const char*, kNumStrategies> kStrategyKeys = {
    "friendship", "reasoning", "game_move", "share_info"};

/// Per-utterance action after the friendship/reasoning reduction.
enum class Action { kFriendship, kReasoning, kNeutral };

const char* to_string(Action a);
std::optional<Action> action_from_string(const std::string& s);

/// Four strategy values; 0/1 flags for gold labels, probabilities for predictions.
struct StrategyLabels {
  std::array<double, kNumStrategies> values{};

  double& operator[](Strategy s) { return values[static_cast<std::size_t>(s)]; }
  double operator[](Strategy s) const { return values[static_cast<std::size_t>(s)]; }
  bool flag(Strategy s, double threshold = 0.5) const { return (*this)[s] >= threshold; }
  bool operator==(const StrategyLabels&) const = default;
};

struct Message {
  std::string game_id;
  std::string thread_id;
  std::int64_t seq = 0;
  PlayerId sender;
  PlayerId recipient;
  std::int64_t turn = 0;
  std::string text;
  double sender_score = 0.0;
  std::optional<StrategyLabels> labels;     // gold
  std::optional<StrategyLabels> predicted;  // probabilities from the labeler
  std::optional<Action> action;

  bool operator==(const Message&) const = default;
};

struct Thread {
  std::string game_id;
  std::string thread_id;
  std::array<PlayerId, 2> participants;  // sorted
  std::vector<Message> messages;         // sorted by seq
  // Score of each participant at thread end; empty when unknown.
  std::map<PlayerId, std::optional<double>> final_scores;

  const PlayerId& opponent_of(const PlayerId& p) const {
    return participants[0] == p ? participants[1] : participants[0];
  }
  bool operator==(const Thread&) const = default;
};

/// One player's states within a thread, paired with their final score.
struct Subthread {
  PlayerId player_id;
  std::vector<Message> states;
  std::optional<double> final_score;
  bool degenerate = false;  // no states, or no usable final score
};

struct Game {
  std::string game_id;
  std::vector<PlayerId> players;  // sorted
  std::vector<Thread> threads;    // sorted by thread_id

  bool operator==(const Game&) const = default;
};

struct Corpus {
  std::vector<Game> games;  // sorted by game_id

  const Game* find_game(const std::string& game_id) const;
  std::size_t num_threads() const;
  std::size_t num_messages() const;
  bool operator==(const Corpus&) const = default;
};

/// Parse failure tied to a 1-based input line.
class CorpusError : public DataError {
 public:
  CorpusError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct ParseOptions {
  bool skip_blank_lines = true;
  bool skip_comment_lines = true;  // lines starting with '#'
};

/// Reads one Message per JSONL line and groups them into games and threads.
Corpus parse_corpus(std::istream& in, const ParseOptions& opts = {});
Corpus parse_corpus_file(const std::string& path, const ParseOptions& opts = {});

/// Builds a corpus from already-decoded messages, applying the same checks as parse_corpus
/// (line numbers refer to positions in `messages`, 1-based).
Corpus assemble_corpus(std::vector<Message> messages);

void serialize_message(std::ostream& out, const Message& m);
void serialize_corpus(std::ostream& out, const Corpus& corpus);
void write_corpus_file(const std::string& path, const Corpus& corpus);

/// Splits a thread into the per-participant subthreads, ordered as thread.participants.
std::pair<Subthread, Subthread> extract_subthreads(const Thread& thread);

enum class ViolationKind {
  kSelfMessage,
  kSeqGap,
  kDuplicateSeq,
  kNonFiniteScore,
  kParticipantCount,
  kForeignParticipant,
  kFinalScoreKeys,
  kDuplicateThreadId,
  kUndeclaredPlayer,
  kLabelRange,
  kGameMismatch,
};

const char* to_string(ViolationKind k);

struct Violation {
  ViolationKind kind;
  std::string game_id;
  std::string thread_id;
  std::optional<std::int64_t> seq;
  std::string detail;
};

/// Checks every type invariant; empty result iff the corpus is valid.
std::vector<Violation> validate_corpus(const Corpus& corpus);

}  // namespace diplo
