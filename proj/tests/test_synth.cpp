#include <set>
#include <sstream>

#include "doctest.h"
#include "diplo/eval.hpp"
#include "diplo/synth.hpp"
#include "support/fixtures.hpp"

using namespace diplo;

namespace {

std::string dump(const SynthOutput& o) {
  std::ostringstream s;
  serialize_corpus(s, o.corpus);
  write_ledger(s, o.ledger);
  return s.str();
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
  for (ScoreMode mode : {ScoreMode::kBehavioral, ScoreMode::kPlantedRegression}) {
    const auto cfg = diplo::testing::small_synth(77, mode);
    CHECK(dump(generate(cfg)) == dump(generate(cfg)));
    auto other = cfg;
    other.seed = 78;
    CHECK(dump(generate(cfg)) != dump(generate(other)));
  }
}

TEST_CASE("generated corpora have the configured shape") {
  auto cfg = diplo::testing::small_synth(5);
  const auto out = generate(cfg);
  CHECK(out.corpus.games.size() == cfg.n_games);
  CHECK(out.corpus.num_threads() == cfg.n_games * cfg.threads_per_game);
  CHECK(validate_corpus(out.corpus).empty());
  for (const auto& g : out.corpus.games) {
    CHECK(g.players.size() <= cfg.n_players);
    for (const auto& t : g.threads) {
      CHECK(t.messages.size() >= cfg.min_messages);
      CHECK(t.messages.size() <= cfg.max_messages);
      for (const auto& m : t.messages) {
        CHECK(m.turn >= 0);
        CHECK(m.turn < static_cast<std::int64_t>(cfg.n_turns));
      }
      // the closing exchange: the last two messages come from different players
      if (t.messages.size() >= 2) CHECK(t.messages.back().sender != t.messages[t.messages.size() - 2].sender);
    }
  }
  CHECK(out.ledger.players.size() == cfg.n_games * cfg.n_players);
  CHECK(out.ledger.messages.size() == out.corpus.num_messages());
}

TEST_CASE("planted final scores reproduce theta* . mu") {
  for (Variant v : {Variant::kContextAgnostic, Variant::kGraphAware}) {
    auto cfg = diplo::testing::small_synth(31, ScoreMode::kPlantedRegression);
    cfg.planted_variant = v;
    const auto out = generate(cfg);
    const auto& theta = out.ledger.planted_theta;
    REQUIRE(theta.size() == planted_schema(cfg).dim());
    REQUIRE(out.ledger.feature_names == planted_schema(cfg).names);
    for (const auto& lt : out.ledger.threads) {
      REQUIRE(lt.mu.size() == 2);
      for (const auto& [player, mu] : lt.mu) {
        double f = 0.0;
        for (std::size_t j = 0; j < mu.size(); ++j) f += theta[j] * mu[j];
        const double recorded = lt.final_scores.at(player);
        CHECK(std::abs(f - recorded) <= 1e-12 * std::max(1.0, std::abs(f)));
      }
    }
  }
}

TEST_CASE("planted theta has no component along the unidentifiable direction") {
  auto cfg = diplo::testing::small_synth(1, ScoreMode::kPlantedRegression);
  cfg.planted_theta = {1, 0.5, 1, 1, 1};
  cfg.planted_variant = Variant::kContextAgnostic;
  const auto t = generate(cfg).ledger.planted_theta;
  CHECK(std::abs(t[0] - t[2] - t[3] - t[4]) <= 1e-15);
  CHECK(t[1] == 0.5);
}

TEST_CASE("noise moves planted scores off the exact fit") {
  auto cfg = diplo::testing::small_synth(2, ScoreMode::kPlantedRegression);
  cfg.sigma = 0.5;
  const auto out = generate(cfg);
  double worst = 0.0;
  for (const auto& lt : out.ledger.threads)
    for (const auto& [player, mu] : lt.mu) {
      double f = 0.0;
      for (std::size_t j = 0; j < mu.size(); ++j) f += out.ledger.planted_theta[j] * mu[j];
      worst = std::max(worst, std::abs(f - lt.final_scores.at(player)));
    }
  CHECK(worst > 1e-3);
}

TEST_CASE("hub players win most of their behavioral threads") {
  std::size_t hub_threads = 0, hub_wins = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthConfig cfg;
    cfg.seed = seed;
    const auto out = generate(cfg);
    std::set<std::pair<std::string, std::string>> hubs;
    double top = 0.0;
    for (const auto& p : out.ledger.players) top = std::max(top, p.activity);
    for (const auto& p : out.ledger.players)
      if (p.activity == top) hubs.insert({p.game_id, p.player});
    for (const auto& lt : out.ledger.threads) {
      if (!lt.winner) continue;
      std::size_t in = 0;
      bool won = false;
      for (const auto& [player, count] : lt.message_counts)
        if (hubs.count({lt.game_id, player})) {
          ++in;
          won = *lt.winner == player;
        }
      if (in != 1) continue;
      ++hub_threads;
      hub_wins += won;
    }
  }
  REQUIRE(hub_threads >= 30);
  CHECK(static_cast<double>(hub_wins) / static_cast<double>(hub_threads) > 0.6);
}

TEST_CASE("configuration validation") {
  auto bad = [](auto mutate) {
    SynthConfig c;
    mutate(c);
    return c;
  };
  CHECK_THROWS_AS(bad([](SynthConfig& c) { c.sigma = -1; }).validate(), UsageError);
  CHECK_THROWS_AS(bad([](SynthConfig& c) { c.n_players = 1; }).validate(), UsageError);
  CHECK_THROWS_AS(bad([](SynthConfig& c) { c.min_messages = 9; c.max_messages = 3; }).validate(), UsageError);
  CHECK_THROWS_AS(bad([](SynthConfig& c) { c.gamma = 1.0; }).validate(), UsageError);
  CHECK_THROWS_AS(bad([](SynthConfig& c) { c.resolution_gap = c.n_turns; }).validate(), UsageError);
  CHECK_THROWS_AS(bad([](SynthConfig& c) { c.planted_theta = {1, 2}; }).validate(), UsageError);
  CHECK_THROWS_AS(bad([](SynthConfig& c) {
                    c.planted_variant = Variant::kContextAgnostic;
                    c.planted_theta = {0, 1, 0, 0, 0};
                  }).validate(),
                  UsageError);
  CHECK_THROWS_AS(bad([](SynthConfig& c) { c.labeled_fraction = 1.5; }).validate(), UsageError);
  CHECK_NOTHROW(SynthConfig{}.validate());
  CHECK(score_mode_from_string("planted") == ScoreMode::kPlantedRegression);
  CHECK_FALSE(score_mode_from_string("nope").has_value());
}

TEST_CASE("ledger JSONL starts with a header record") {
  const auto out = generate(diplo::testing::small_synth(4));
  std::ostringstream s;
  write_ledger(s, out.ledger);
  std::istringstream in(s.str());
  std::string first;
  std::getline(in, first);
  CHECK(first.find("\"type\"") != std::string::npos);
}
