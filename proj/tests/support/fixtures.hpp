#pragma once

// Small builders and random generators shared by the unit tests.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "diplo/corpus.hpp"
#include "diplo/synth.hpp"

namespace diplo::testing {

inline Message msg(const std::string& thread_id, std::int64_t seq, const std::string& sender,
                   const std::string& recipient, double score, std::int64_t turn = 0, const std::string& text = "",
                   const std::string& game_id = "g") {
  Message m;
  m.game_id = game_id;
  m.thread_id = thread_id;
  m.seq = seq;
  m.sender = sender;
  m.recipient = recipient;
  m.turn = turn;
  m.text = text;
  m.sender_score = score;
  return m;
}

inline StrategyLabels labels(int f, int r, int gm, int si) {
  StrategyLabels l;
  l.values = {double(f), double(r), double(gm), double(si)};
  return l;
}

/// A small behavioral-mode corpus, cheap enough for per-test use.
inline SynthConfig small_synth(std::uint64_t seed, ScoreMode mode = ScoreMode::kBehavioral) {
  SynthConfig c;
  c.seed = seed;
  c.mode = mode;
  c.n_games = 2;
  c.threads_per_game = 6;
  c.min_messages = 2;
  c.max_messages = 8;
  c.n_turns = 12;
  c.resolution_gap = 2;
  return c;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace diplo::testing
