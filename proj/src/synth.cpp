#include "diplo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "diplo/graph.hpp"
#include "diplo/labeler.hpp"
#include "json.hpp"

namespace diplo {

namespace {

using ordered_json = nlohmann::ordered_json;

// Disjoint word pools, one per strategy, plus neutral filler.
const std::array<std::vector<std::string>, kNumStrategies> kPools = {{
    {"friend", "ally", "trust", "together", "promise", "loyal", "pal", "buddy", "kind", "honest", "faith", "bond"},
    {"because", "therefore", "logic", "reason", "consider", "evidence", "since", "argue", "thus", "hence",
     "rational", "explain"},
    {"move", "army", "fleet", "attack", "hold", "convoy", "retreat", "build", "disband", "order", "march",
     "siege"},
    {"heard", "told", "rumor", "intel", "news", "report", "noticed", "saw", "learned", "spy", "leak", "secret"},
}};
const std::vector<std::string> kFiller = {"the", "a", "we", "you", "i", "it", "this", "that",
                                          "and", "to", "of", "in", "is", "for", "on", "with"};
const std::vector<std::string> kPowers = {"austria", "england", "france", "germany", "italy", "russia", "turkey"};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::string player_name(std::size_t i) { return i < kPowers.size() ? kPowers[i] : "power" + std::to_string(i); }

std::string padded(std::size_t v, int width) {
  std::ostringstream os;
  os << std::setw(width) << std::setfill('0') << v;
  return os.str();
}

template <class Rng>
std::size_t weighted_pick(Rng& rng, const std::vector<double>& w, std::size_t exclude) {
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (i != exclude) total += w[i];
  double u = std::uniform_real_distribution<double>(0.0, total)(rng);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i == exclude) continue;
    if (u < w[i]) return i;
    u -= w[i];
  }
  for (std::size_t i = w.size(); i-- > 0;)
    if (i != exclude) return i;
  return 0;
}

template <class Rng>
std::string make_text(Rng& rng, const StrategyLabels& truth, double overlap, std::map<std::string, std::size_t>& counts) {
  std::vector<std::string> words;
  std::uniform_int_distribution<std::size_t> pool_word(0, kPools[0].size() - 1);
  std::uniform_int_distribution<std::size_t> filler_word(0, kFiller.size() - 1);
  std::uniform_int_distribution<std::size_t> other_pool(0, kNumStrategies - 2);
  std::bernoulli_distribution swap(overlap);
  for (std::size_t s = 0; s < kNumStrategies; ++s) {
    if (truth.values[s] < 0.5) continue;
    const int k = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int i = 0; i < k; ++i) {
      std::size_t pool = s;
      if (swap(rng)) {
        pool = other_pool(rng);
        if (pool >= s) ++pool;
      }
      words.push_back(kPools[pool][pool_word(rng)]);
    }
  }
  const int fill = std::uniform_int_distribution<int>(2, 5)(rng);
  for (int i = 0; i < fill; ++i) words.push_back(kFiller[filler_word(rng)]);
  std::shuffle(words.begin(), words.end(), rng);

  std::string text;
  for (std::size_t i = 0; i < words.size(); ++i) {
    ++counts[words[i]];
    std::string w = words[i];
    if (i == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    text += (i ? " " : "") + w;
  }
  text += std::bernoulli_distribution(0.3)(rng) ? "!" : ".";
  return text;
}

std::vector<double> default_theta(Variant v) {
  std::vector<double> t = {0.4, 0.3, 0.2, 0.6, -0.3};
  if (v == Variant::kGraphAware) t.insert(t.end(), {2.0, 1.5, -0.8, 0.05, 0.1});
  return t;
}

// Removes the component along bias - sum(action one-hots), which the encoding
// cannot identify because the one-hots always sum to the bias column.
std::vector<double> identifiable_theta(std::vector<double> theta) {
  const std::array<std::pair<std::size_t, double>, 4> dir = {{{0, 1.0}, {2, -1.0}, {3, -1.0}, {4, -1.0}}};
  double dot = 0.0;
  for (auto [j, c] : dir) dot += theta[j] * c;
  for (auto [j, c] : dir) theta[j] -= dot / 4.0 * c;
  return theta;
}

// Discounted feature map of `player`'s states in `t`.
Eigen::VectorXd side_mu(const Thread& t, const PlayerId& player, const FeatureSchema& schema,
                        const CentralityCache* graph, std::int64_t* last_index) {
  Subthread sub;
  sub.player_id = player;
  std::vector<StateVector> states;
  for (const Message& m : t.messages) {
    if (m.sender != player) continue;
    sub.states.push_back(m);
    states.push_back(encode_state(m, t, graph, schema));
  }
  *last_index = schema.time_index == TimeIndex::kGlobal ? sub.states.back().seq
                                                         : static_cast<std::int64_t>(sub.states.size()) - 1;
  return feature_map(sub, schema, states).mu;
}

std::vector<Message> all_messages(const Corpus& c) {
  std::vector<Message> out;
  for (const Game& g : c.games)
    for (const Thread& t : g.threads)
      for (const Message& m : t.messages) out.push_back(m);
  return out;
}

}  // namespace

const char* to_string(ScoreMode m) { return m == ScoreMode::kPlantedRegression ? "planted" : "behavioral"; }

std::optional<ScoreMode> score_mode_from_string(const std::string& s) {
  if (s == "planted") return ScoreMode::kPlantedRegression;
  if (s == "behavioral") return ScoreMode::kBehavioral;
  return std::nullopt;
}

void SynthConfig::validate() const {
  if (n_players < 2) throw UsageError("synth: need at least 2 players");
  if (n_games < 1 || threads_per_game < 1) throw UsageError("synth: need at least one game and one thread");
  if (min_messages < 1 || max_messages < min_messages) throw UsageError("synth: bad messages-per-thread range");
  if (mode == ScoreMode::kPlantedRegression && max_messages < 2) {
    throw UsageError("synth: planted mode needs threads of at least 2 messages");
  }
  if (n_turns < 1) throw UsageError("synth: need at least one turn");
  if (!(sigma >= 0.0)) throw UsageError("synth: sigma must be >= 0");
  if (!(labeled_fraction >= 0.0 && labeled_fraction <= 1.0)) throw UsageError("synth: labeled_fraction outside [0,1]");
  if (!(overlap >= 0.0 && overlap <= 1.0)) throw UsageError("synth: overlap outside [0,1]");
  for (std::size_t s = 0; s < kNumStrategies; ++s) {
    if (!(rate_low[s] >= 0 && rate_low[s] <= 1 && rate_high[s] >= 0 && rate_high[s] <= 1)) {
      throw UsageError("synth: strategy rates outside [0,1]");
    }
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) throw UsageError("synth: gamma outside [0,1)");
  if (!planted_theta.empty() && planted_theta.size() != planted_schema(*this).dim()) {
    throw UsageError("synth: planted_theta length differs from the planted schema dimension");
  }
  // The final state's score feature contains the final score itself, which is
  // solved for through 1 - gamma^T * theta_score.
  if (!planted_theta.empty() && !(std::abs(planted_theta[1]) < 1.0)) {
    throw UsageError("synth: planted score-difference weight must lie in (-1, 1)");
  }
  if (n_hubs > n_players) throw UsageError("synth: more hubs than players");
  if (!(alternation >= 0.0 && alternation <= 1.0)) throw UsageError("synth: alternation outside [0,1]");
  if (resolution_gap >= n_turns) throw UsageError("synth: resolution_gap must be below the number of turns");
}

FeatureSchema planted_schema(const SynthConfig& cfg) { return FeatureSchema::make(cfg.planted_variant, cfg.gamma); }

SynthOutput generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthOutput out;
  GeneratorLedger& ledger = out.ledger;
  ledger.mode = cfg.mode;
  for (const auto& pool : kPools) ledger.token_inventory.insert(ledger.token_inventory.end(), pool.begin(), pool.end());
  ledger.token_inventory.insert(ledger.token_inventory.end(), kFiller.begin(), kFiller.end());
  std::sort(ledger.token_inventory.begin(), ledger.token_inventory.end());

  const bool planted = cfg.mode == ScoreMode::kPlantedRegression;
  std::vector<Message> messages;
  std::map<std::pair<std::string, PlayerId>, double> initial_scores;

  for (std::size_t g = 0; g < cfg.n_games; ++g) {
    std::mt19937_64 rng(splitmix64(cfg.seed * 1000003ull + g));
    const std::string game_id = "g" + padded(g, 3);

    std::vector<PlayerId> players(cfg.n_players);
    for (std::size_t p = 0; p < cfg.n_players; ++p) players[p] = player_name(p);

    std::vector<std::size_t> order(cfg.n_players);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> activity(cfg.n_players), style(cfg.n_players);
    std::vector<std::array<double, kNumStrategies>> rates(cfg.n_players);
    for (std::size_t k = 0; k < cfg.n_players; ++k) {
      const std::size_t p = order[k];
      activity[p] = k < cfg.n_hubs ? cfg.hub_activity : std::uniform_real_distribution<double>(0.5, 1.5)(rng);
    }
    for (std::size_t p = 0; p < cfg.n_players; ++p) {
      style[p] = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      for (std::size_t s = 0; s < kNumStrategies; ++s) {
        const double t = s == static_cast<std::size_t>(Strategy::kFriendship) ? 1.0 - style[p] : style[p];
        rates[p][s] = cfg.rate_low[s] + (cfg.rate_high[s] - cfg.rate_low[s]) * t;
      }
      ledger.players.push_back({game_id, players[p], style[p], activity[p], rates[p]});
      initial_scores[{game_id, players[p]}] =
          cfg.initial_score + cfg.initial_spread * std::normal_distribution<double>(0.0, 1.0)(rng);
    }

    for (std::size_t k = 0; k < cfg.threads_per_game; ++k) {
      const std::string thread_id = game_id + "-t" + padded(k, 4);
      const std::size_t u = weighted_pick(rng, activity, cfg.n_players);
      const std::size_t v = weighted_pick(rng, activity, u);

      std::size_t len = std::uniform_int_distribution<std::size_t>(cfg.min_messages, cfg.max_messages)(rng);
      if (planted) {
        if (len % 2) len = len + 1 <= cfg.max_messages ? len + 1 : len - 1;
        len = std::max<std::size_t>(len, 2);
      }
      const bool closing = !planted && cfg.resolution_gap > 0 && len >= 2;
      const std::size_t negotiation = closing ? len - 2 : len;
      const std::size_t gap = closing ? cfg.resolution_gap : 0;
      const std::size_t span = std::min(cfg.n_turns - 1 - gap, negotiation > 0 ? negotiation - 1 : 0);
      const std::size_t start = std::uniform_int_distribution<std::size_t>(0, cfg.n_turns - 1 - span - gap)(rng);

      std::size_t speaker = std::bernoulli_distribution(0.5)(rng) ? u : v;
      for (std::size_t i = 0; i < len; ++i) {
        const bool alternate = planted || (closing && i + 1 == len) || std::bernoulli_distribution(cfg.alternation)(rng);
        if (i > 0 && alternate) speaker = speaker == u ? v : u;
        const std::size_t listener = speaker == u ? v : u;

        StrategyLabels truth;
        std::array<bool, kNumStrategies> flags{};
        for (std::size_t s = 0; s < kNumStrategies; ++s) {
          flags[s] = std::bernoulli_distribution(rates[speaker][s])(rng);
          truth.values[s] = flags[s] ? 1.0 : 0.0;
        }
        Message m;
        m.game_id = game_id;
        m.thread_id = thread_id;
        m.seq = static_cast<std::int64_t>(i);
        m.sender = players[speaker];
        m.recipient = players[listener];
        if (i < negotiation) {
          m.turn = static_cast<std::int64_t>(start + (negotiation > 1 ? i * span / (negotiation - 1) : 0));
        } else {
          m.turn = static_cast<std::int64_t>(start + span + gap);
        }
        m.text = make_text(rng, truth, cfg.overlap, ledger.token_counts);
        if (std::bernoulli_distribution(cfg.labeled_fraction)(rng)) m.labels = truth;
        messages.push_back(m);
        ledger.messages.push_back({thread_id, m.seq, truth, assign_action(flags)});
      }
    }
  }

  Corpus corpus = assemble_corpus(messages);

  if (!planted) {
    const auto cache = CentralityCache::build(corpus);
    std::map<std::string, Action> truth_action;
    for (const auto& lm : ledger.messages) truth_action[lm.thread_id + "#" + std::to_string(lm.seq)] = lm.action;

    for (Game& game : corpus.games) {
      std::map<PlayerId, double> score;
      for (const auto& p : game.players) score[p] = initial_scores.at({game.game_id, p});
      // reasoning[turn][player]
      std::map<std::int64_t, std::map<PlayerId, int>> reasoning;
      for (const Thread& t : game.threads)
        for (const Message& m : t.messages)
          if (truth_action.at(m.thread_id + "#" + std::to_string(m.seq)) == Action::kReasoning) ++reasoning[m.turn][m.sender];

      std::map<std::int64_t, std::map<PlayerId, double>> score_at;
      for (std::int64_t turn = 0; turn < static_cast<std::int64_t>(cfg.n_turns); ++turn) {
        score_at[turn] = score;
        for (auto& [p, s] : score) {
          double gain = 0.0;
          if (auto it = reasoning.find(turn); it != reasoning.end()) {
            if (auto r = it->second.find(p); r != it->second.end()) {
              gain = cfg.gain * r->second * cache.at(game.game_id, turn).at(p).eigen;
            }
          }
          s += gain - cfg.drift;
        }
      }
      for (Thread& t : game.threads)
        for (Message& m : t.messages) m.sender_score = score_at.at(m.turn).at(m.sender);
    }
  } else {
    const FeatureSchema schema = planted_schema(cfg);
    auto theta_vec = cfg.planted_theta.empty() ? default_theta(cfg.planted_variant) : cfg.planted_theta;
    theta_vec = identifiable_theta(theta_vec);
    const Eigen::Map<const Eigen::VectorXd> theta(theta_vec.data(), static_cast<Eigen::Index>(theta_vec.size()));
    const double theta_score = theta_vec[1];
    ledger.feature_names = schema.names;
    ledger.planted_theta = theta_vec;

    std::optional<CentralityCache> cache;
    if (schema.variant == Variant::kGraphAware) cache = CentralityCache::build(corpus);
    const CentralityCache* graph = cache ? &*cache : nullptr;

    for (std::size_t gi = 0; gi < corpus.games.size(); ++gi) {
      Game& game = corpus.games[gi];
      std::mt19937_64 rng(splitmix64(cfg.seed * 7919ull + 0x5bd1e995ull + gi));
      std::normal_distribution<double> spread(0.0, cfg.score_spread);
      std::normal_distribution<double> noise(0.0, cfg.sigma);
      for (Thread& t : game.threads) {
        const std::size_t n = t.messages.size();
        Message& first_final = t.messages[n - 2];
        Message& second_final = t.messages[n - 1];
        bool ok = false;
        for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
          for (std::size_t i = 0; i + 2 < n; ++i) t.messages[i].sender_score = spread(rng);
          first_final.sender_score = 0.0;
          second_final.sender_score = 0.0;
          for (Message* fin : {&first_final, &second_final}) {
            std::int64_t last = 0;
            const Eigen::VectorXd mu0 = side_mu(t, fin->sender, schema, graph, &last);
            const double kappa = std::pow(schema.gamma, static_cast<double>(last)) * theta_score;
            const double eps = cfg.sigma > 0.0 ? noise(rng) : 0.0;
            fin->sender_score = (theta.dot(mu0) + eps) / (1.0 - kappa);
          }
          ok = std::abs(first_final.sender_score - second_final.sender_score) >= cfg.min_winner_margin;
        }
        if (!ok) throw NumericalError("synth: could not separate final scores in thread " + t.thread_id);
      }
    }
  }

  out.corpus = assemble_corpus(all_messages(corpus));

  std::optional<CentralityCache> ledger_cache;
  FeatureSchema schema;
  if (planted) {
    schema = planted_schema(cfg);
    if (schema.variant == Variant::kGraphAware) ledger_cache = CentralityCache::build(out.corpus);
  }
  for (const Game& game : out.corpus.games) {
    for (const Thread& t : game.threads) {
      LedgerThread lt;
      lt.game_id = t.game_id;
      lt.thread_id = t.thread_id;
      for (const auto& p : t.participants) {
        lt.message_counts[p] = 0;
        if (const auto& f = t.final_scores.at(p)) lt.final_scores[p] = *f;
      }
      for (const Message& m : t.messages) ++lt.message_counts[m.sender];
      if (lt.final_scores.size() == 2) {
        const double a = lt.final_scores[t.participants[0]], b = lt.final_scores[t.participants[1]];
        if (a != b) lt.winner = t.participants[a > b ? 0 : 1];
      }
      if (planted) {
        for (const auto& p : t.participants) {
          std::int64_t last = 0;
          const auto mu = side_mu(t, p, schema, ledger_cache ? &*ledger_cache : nullptr, &last);
          lt.mu[p] = std::vector<double>(mu.data(), mu.data() + mu.size());
        }
      }
      ledger.threads.push_back(std::move(lt));
    }
  }
  return out;
}

void write_ledger(std::ostream& out, const GeneratorLedger& ledger) {
  ordered_json head;
  head["type"] = "header";
  head["mode"] = to_string(ledger.mode);
  head["feature_names"] = ledger.feature_names;
  head["planted_theta"] = ledger.planted_theta;
  head["token_inventory"] = ledger.token_inventory;
  out << head.dump() << '\n';
  for (const auto& p : ledger.players) {
    ordered_json o;
    o["type"] = "player";
    o["game_id"] = p.game_id;
    o["player"] = p.player;
    o["style"] = p.style;
    o["activity"] = p.activity;
    o["rates"] = p.rates;
    out << o.dump() << '\n';
  }
  for (const auto& t : ledger.threads) {
    ordered_json o;
    o["type"] = "thread";
    o["game_id"] = t.game_id;
    o["thread_id"] = t.thread_id;
    o["winner"] = t.winner ? ordered_json(*t.winner) : ordered_json(nullptr);
    o["message_counts"] = t.message_counts;
    o["final_scores"] = t.final_scores;
    if (!t.mu.empty()) o["mu"] = t.mu;
    out << o.dump() << '\n';
  }
  for (const auto& m : ledger.messages) {
    ordered_json o;
    o["type"] = "message";
    o["thread_id"] = m.thread_id;
    o["seq"] = m.seq;
    ordered_json truth;
    for (std::size_t s = 0; s < kNumStrategies; ++s) truth[kStrategyKeys[s]] = static_cast<int>(m.truth.values[s]);
    o["truth"] = truth;
    o["action"] = to_string(m.action);
    out << o.dump() << '\n';
  }
  ordered_json tok;
  tok["type"] = "token_counts";
  tok["counts"] = ledger.token_counts;
  out << tok.dump() << '\n';
}

}  // namespace diplo
