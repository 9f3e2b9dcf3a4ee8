#include "diplo/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace diplo {

namespace {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

std::string get_string(const json& rec, const char* key, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end()) throw CorpusError(line, std::string("missing field '") + key + "'");
  if (!it->is_string()) throw CorpusError(line, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::int64_t get_count(const json& rec, const char* key, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end()) throw CorpusError(line, std::string("missing field '") + key + "'");
  if (!it->is_number_integer()) {
    throw CorpusError(line, std::string("field '") + key + "' must be an integer");
  }
  auto v = it->get<std::int64_t>();
  if (v < 0) throw CorpusError(line, std::string("field '") + key + "' must be nonnegative");
  return v;
}

std::optional<StrategyLabels> get_labels(const json& rec, const char* key, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end() || it->is_null()) return std::nullopt;
  if (!it->is_object()) throw CorpusError(line, std::string("field '") + key + "' must be an object or null");
  StrategyLabels out;
  for (std::size_t k = 0; k < kNumStrategies; ++k) {
    auto f = it->find(kStrategyKeys[k]);
    if (f == it->end()) {
      throw CorpusError(line, std::string("field '") + key + "' lacks '" + kStrategyKeys[k] + "'");
    }
    double v = 0.0;
    if (f->is_boolean()) {
      v = f->get<bool>() ? 1.0 : 0.0;
    } else if (f->is_number()) {
      v = f->get<double>();
    } else {
      throw CorpusError(line, std::string(key) + "." + kStrategyKeys[k] + " must be numeric");
    }
    if (!(v >= 0.0 && v <= 1.0)) {
      throw CorpusError(line, std::string(key) + "." + kStrategyKeys[k] + " outside [0,1]");
    }
    out.values[k] = v;
  }
  return out;
}

Message decode_line(const std::string& text, std::size_t line) {
  json rec;
  try {
    rec = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CorpusError(line, std::string("malformed JSON: ") + e.what());
  }
  if (!rec.is_object()) throw CorpusError(line, "record is not a JSON object");

  Message m;
  m.game_id = get_string(rec, "game_id", line);
  m.thread_id = get_string(rec, "thread_id", line);
  m.seq = get_count(rec, "seq", line);
  m.sender = get_string(rec, "sender", line);
  m.recipient = get_string(rec, "recipient", line);
  m.turn = get_count(rec, "turn", line);
  m.text = get_string(rec, "text", line);

  auto score = rec.find("sender_score");
  if (score == rec.end()) throw CorpusError(line, "missing field 'sender_score'");
  if (!score->is_number()) throw CorpusError(line, "field 'sender_score' must be a number");
  m.sender_score = score->get<double>();

  m.labels = get_labels(rec, "labels", line);
  m.predicted = get_labels(rec, "predicted", line);
  if (auto a = rec.find("action"); a != rec.end() && !a->is_null()) {
    if (!a->is_string()) throw CorpusError(line, "field 'action' must be a string");
    m.action = action_from_string(a->get<std::string>());
    if (!m.action) throw CorpusError(line, "unknown action '" + a->get<std::string>() + "'");
  }
  return m;
}

ordered_json labels_json(const StrategyLabels& l, bool as_flags) {
  ordered_json o = ordered_json::object();
  for (std::size_t k = 0; k < kNumStrategies; ++k) {
    if (as_flags && (l.values[k] == 0.0 || l.values[k] == 1.0)) {
      o[kStrategyKeys[k]] = static_cast<int>(l.values[k]);
    } else {
      o[kStrategyKeys[k]] = l.values[k];
    }
  }
  return o;
}

// Latest score the player reported anywhere in the game up to `max_turn`.
std::optional<double> game_level_score(const std::vector<const Message*>& game_msgs,
                                       const PlayerId& player, std::int64_t max_turn) {
  const Message* best = nullptr;
  for (const Message* m : game_msgs) {
    if (m->sender != player || m->turn > max_turn) continue;
    if (!best || std::tie(m->turn, m->thread_id, m->seq) > std::tie(best->turn, best->thread_id, best->seq)) {
      best = m;
    }
  }
  if (!best) return std::nullopt;
  return best->sender_score;
}

}  // namespace

const char* to_string(Action a) {
  switch (a) {
    case Action::kFriendship: return "friendship";
    case Action::kReasoning: return "reasoning";
    case Action::kNeutral: return "neutral";
  }
  return "neutral";
}

std::optional<Action> action_from_string(const std::string& s) {
  if (s == "friendship") return Action::kFriendship;
  if (s == "reasoning") return Action::kReasoning;
  if (s == "neutral") return Action::kNeutral;
  return std::nullopt;
}

const Game* Corpus::find_game(const std::string& game_id) const {
  auto it = std::lower_bound(games.begin(), games.end(), game_id,
                             [](const Game& g, const std::string& id) { return g.game_id < id; });
  return (it != games.end() && it->game_id == game_id) ? &*it : nullptr;
}

std::size_t Corpus::num_threads() const {
  std::size_t n = 0;
  for (const auto& g : games) n += g.threads.size();
  return n;
}

std::size_t Corpus::num_messages() const {
  std::size_t n = 0;
  for (const auto& g : games)
    for (const auto& t : g.threads) n += t.messages.size();
  return n;
}

Corpus assemble_corpus(std::vector<Message> messages) {
  struct Pending {
    std::string game_id;
    std::vector<std::pair<Message, std::size_t>> msgs;  // message, line
    std::set<PlayerId> players;
    std::map<std::int64_t, std::size_t> seq_lines;
  };
  std::map<std::string, Pending> threads;

  for (std::size_t i = 0; i < messages.size(); ++i) {
    const std::size_t line = i + 1;
    Message& m = messages[i];
    if (m.sender == m.recipient) throw CorpusError(line, "sender and recipient are both '" + m.sender + "'");
    if (!std::isfinite(m.sender_score)) throw CorpusError(line, "non-finite sender_score");

    auto [it, fresh] = threads.try_emplace(m.thread_id);
    Pending& p = it->second;
    if (fresh) {
      p.game_id = m.game_id;
    } else if (p.game_id != m.game_id) {
      throw CorpusError(line, "thread '" + m.thread_id + "' appears in games '" + p.game_id + "' and '" +
                                  m.game_id + "'");
    }
    p.players.insert(m.sender);
    p.players.insert(m.recipient);
    if (p.players.size() > 2) {
      throw CorpusError(line, "thread '" + m.thread_id + "' has more than 2 participants");
    }
    if (auto [pos, inserted] = p.seq_lines.emplace(m.seq, line); !inserted) {
      throw CorpusError(line, "duplicate seq " + std::to_string(m.seq) + " in thread '" + m.thread_id +
                                  "' (first at record " + std::to_string(pos->second) + ")");
    }
    p.msgs.emplace_back(std::move(m), line);
  }

  std::map<std::string, Game> games;
  for (auto& [thread_id, p] : threads) {
    Game& g = games[p.game_id];
    g.game_id = p.game_id;
    std::sort(p.msgs.begin(), p.msgs.end(),
              [](const auto& a, const auto& b) { return a.first.seq < b.first.seq; });
    Thread t;
    t.game_id = p.game_id;
    t.thread_id = thread_id;
    std::copy(p.players.begin(), p.players.end(), t.participants.begin());
    t.messages.reserve(p.msgs.size());
    for (auto& [msg, line] : p.msgs) t.messages.push_back(std::move(msg));
    g.threads.push_back(std::move(t));
  }

  Corpus corpus;
  for (auto& [id, g] : games) {
    std::set<PlayerId> players;
    std::vector<const Message*> game_msgs;
    for (const Thread& t : g.threads) {
      players.insert(t.participants.begin(), t.participants.end());
      for (const Message& m : t.messages) game_msgs.push_back(&m);
    }
    g.players.assign(players.begin(), players.end());
    for (Thread& t : g.threads) {
      std::int64_t last_turn = 0;
      for (const Message& m : t.messages) last_turn = std::max(last_turn, m.turn);
      for (const PlayerId& p : t.participants) {
        std::optional<double> score;
        for (auto it = t.messages.rbegin(); it != t.messages.rend(); ++it) {
          if (it->sender == p) {
            score = it->sender_score;
            break;
          }
        }
        if (!score) score = game_level_score(game_msgs, p, last_turn);
        t.final_scores[p] = score;
      }
    }
    corpus.games.push_back(std::move(g));
  }
  return corpus;
}

Corpus parse_corpus(std::istream& in, const ParseOptions& opts) {
  std::vector<Message> messages;
  std::vector<std::size_t> lines;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    const bool blank = text.find_first_not_of(" \t") == std::string::npos;
    if (blank && opts.skip_blank_lines) continue;
    if (opts.skip_comment_lines && !blank && text[text.find_first_not_of(" \t")] == '#') continue;
    messages.push_back(decode_line(text, line));
    lines.push_back(line);
  }
  try {
    return assemble_corpus(std::move(messages));
  } catch (const CorpusError& e) {
    // Map the record index back to the physical input line.
    const std::string what = e.what();
    const auto colon = what.find(": ");
    throw CorpusError(lines.at(e.line() - 1), what.substr(colon + 2));
  }
}

Corpus parse_corpus_file(const std::string& path, const ParseOptions& opts) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file '" + path + "'");
  return parse_corpus(in, opts);
}

void serialize_message(std::ostream& out, const Message& m) {
  ordered_json o;
  o["game_id"] = m.game_id;
  o["thread_id"] = m.thread_id;
  o["seq"] = m.seq;
  o["sender"] = m.sender;
  o["recipient"] = m.recipient;
  o["turn"] = m.turn;
  o["text"] = m.text;
  o["sender_score"] = m.sender_score;
  o["labels"] = m.labels ? labels_json(*m.labels, true) : ordered_json(nullptr);
  if (m.predicted) o["predicted"] = labels_json(*m.predicted, false);
  if (m.action) o["action"] = to_string(*m.action);
  out << o.dump() << '\n';
}

void serialize_corpus(std::ostream& out, const Corpus& corpus) {
  for (const Game& g : corpus.games)
    for (const Thread& t : g.threads)
      for (const Message& m : t.messages) serialize_message(out, m);
}

void write_corpus_file(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus file '" + path + "'");
  serialize_corpus(out, corpus);
}

std::pair<Subthread, Subthread> extract_subthreads(const Thread& thread) {
  std::array<Subthread, 2> subs;
  for (std::size_t i = 0; i < 2; ++i) {
    subs[i].player_id = thread.participants[i];
    if (auto it = thread.final_scores.find(thread.participants[i]); it != thread.final_scores.end()) {
      subs[i].final_score = it->second;
    }
  }
  for (const Message& m : thread.messages) {
    subs[m.sender == thread.participants[0] ? 0 : 1].states.push_back(m);
  }
  for (auto& s : subs) s.degenerate = s.states.empty() || !s.final_score;
  return {std::move(subs[0]), std::move(subs[1])};
}

const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::kSelfMessage: return "self_message";
    case ViolationKind::kSeqGap: return "seq_gap";
    case ViolationKind::kDuplicateSeq: return "duplicate_seq";
    case ViolationKind::kNonFiniteScore: return "non_finite_score";
    case ViolationKind::kParticipantCount: return "participant_count";
    case ViolationKind::kForeignParticipant: return "foreign_participant";
    case ViolationKind::kFinalScoreKeys: return "final_score_keys";
    case ViolationKind::kDuplicateThreadId: return "duplicate_thread_id";
    case ViolationKind::kUndeclaredPlayer: return "undeclared_player";
    case ViolationKind::kLabelRange: return "label_range";
    case ViolationKind::kGameMismatch: return "game_mismatch";
  }
  return "unknown";
}

std::vector<Violation> validate_corpus(const Corpus& corpus) {
  std::vector<Violation> out;
  std::set<std::string> thread_ids;
  auto add = [&](ViolationKind k, const Thread& t, std::optional<std::int64_t> seq, std::string detail) {
    out.push_back({k, t.game_id, t.thread_id, seq, std::move(detail)});
  };
  auto labels_ok = [](const std::optional<StrategyLabels>& l) {
    if (!l) return true;
    return std::all_of(l->values.begin(), l->values.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
  };

  for (const Game& g : corpus.games) {
    const std::set<PlayerId> declared(g.players.begin(), g.players.end());
    for (const Thread& t : g.threads) {
      if (!thread_ids.insert(t.thread_id).second) {
        add(ViolationKind::kDuplicateThreadId, t, std::nullopt, "thread id used more than once");
      }
      if (t.game_id != g.game_id) {
        add(ViolationKind::kGameMismatch, t, std::nullopt, "thread filed under game '" + g.game_id + "'");
      }
      if (t.participants[0] == t.participants[1]) {
        add(ViolationKind::kParticipantCount, t, std::nullopt, "thread needs two distinct participants");
      }
      for (const PlayerId& p : t.participants) {
        if (!declared.count(p)) add(ViolationKind::kUndeclaredPlayer, t, std::nullopt, "player '" + p + "'");
      }
      std::set<PlayerId> keys;
      for (const auto& [p, s] : t.final_scores) {
        keys.insert(p);
        if (s && !std::isfinite(*s)) add(ViolationKind::kNonFiniteScore, t, std::nullopt, "final score of " + p);
      }
      if (keys != std::set<PlayerId>(t.participants.begin(), t.participants.end())) {
        add(ViolationKind::kFinalScoreKeys, t, std::nullopt, "final_scores keys differ from participants");
      }

      std::set<std::int64_t> seen;
      for (const Message& m : t.messages) {
        if (!seen.insert(m.seq).second) add(ViolationKind::kDuplicateSeq, t, m.seq, "seq repeated");
        if (m.sender == m.recipient) add(ViolationKind::kSelfMessage, t, m.seq, "sender equals recipient");
        const bool members = (m.sender == t.participants[0] || m.sender == t.participants[1]) &&
                             (m.recipient == t.participants[0] || m.recipient == t.participants[1]);
        if (!members) add(ViolationKind::kForeignParticipant, t, m.seq, m.sender + "->" + m.recipient);
        if (!std::isfinite(m.sender_score)) add(ViolationKind::kNonFiniteScore, t, m.seq, "sender_score");
        if (!labels_ok(m.labels) || !labels_ok(m.predicted)) {
          add(ViolationKind::kLabelRange, t, m.seq, "label outside [0,1]");
        }
      }
      std::int64_t expect = 0;
      for (std::int64_t s : seen) {
        for (; expect < s; ++expect) add(ViolationKind::kSeqGap, t, expect, "missing seq " + std::to_string(expect));
        expect = s + 1;
      }
    }
  }
  return out;
}

}  // namespace diplo
