#include "diplo/encoding.hpp"

#include <cmath>

namespace diplo {

namespace {

const std::vector<std::string> kBaseNames = {"bias", "score_diff"};
const std::vector<std::string> kActionNames = {"action_friendship", "action_reasoning", "action_neutral"};
const std::vector<std::string> kGraphNames = {"eigen_diff", "authority_diff", "hub_diff", "in_degree_diff",
                                              "out_degree_diff"};

double time_weight(double gamma, std::int64_t t) {
  // 0^0 = 1 so that gamma = 0 keeps exactly the first state.
  return t == 0 ? 1.0 : std::pow(gamma, static_cast<double>(t));
}

}  // namespace

const char* to_string(Variant v) { return v == Variant::kGraphAware ? "graph" : "context"; }

std::optional<Variant> variant_from_string(const std::string& s) {
  if (s == "context") return Variant::kContextAgnostic;
  if (s == "graph") return Variant::kGraphAware;
  return std::nullopt;
}

const char* to_string(TimeIndex t) { return t == TimeIndex::kGlobal ? "global" : "player"; }

std::optional<TimeIndex> time_index_from_string(const std::string& s) {
  if (s == "player") return TimeIndex::kPlayer;
  if (s == "global") return TimeIndex::kGlobal;
  return std::nullopt;
}

FeatureSchema FeatureSchema::make(Variant variant, double gamma, TimeIndex time_index, bool include_action) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw UsageError("discount gamma must lie in [0,1)");
  FeatureSchema s;
  s.variant = variant;
  s.gamma = gamma;
  s.time_index = time_index;
  s.include_action = include_action;
  s.names = kBaseNames;
  if (include_action) s.names.insert(s.names.end(), kActionNames.begin(), kActionNames.end());
  if (variant == Variant::kGraphAware) s.names.insert(s.names.end(), kGraphNames.begin(), kGraphNames.end());
  return s;
}

std::optional<double> opponent_score_before(const Thread& thread, const Message& m) {
  const PlayerId& opp = thread.opponent_of(m.sender);
  std::optional<double> out;
  for (const Message& other : thread.messages) {
    if (other.seq >= m.seq) break;
    if (other.sender == opp) out = other.sender_score;
  }
  return out;
}

StateVector encode_state(const Message& m, const Thread& thread, const CentralityCache* graph,
                         const FeatureSchema& schema, VoteRule vote) {
  const bool graph_aware = schema.variant == Variant::kGraphAware;
  if (graph_aware != (graph != nullptr)) {
    throw UsageError(graph_aware ? "graph-aware encoding needs centrality tables"
                                 : "context-agnostic encoding must not be given centrality tables");
  }
  StateVector phi = StateVector::Zero(static_cast<Eigen::Index>(schema.dim()));
  Eigen::Index k = 0;
  phi[k++] = 1.0;
  phi[k++] = m.sender_score - opponent_score_before(thread, m).value_or(0.0);
  if (schema.include_action) {
    phi[k + static_cast<Eigen::Index>(effective_action(m, vote))] = 1.0;
    k += 3;
  }
  if (graph_aware) {
    const auto& table = graph->at(thread.game_id, m.turn);
    const auto& self = table.at(m.sender);
    const auto& opp = table.at(thread.opponent_of(m.sender));
    phi[k++] = self.eigen - opp.eigen;
    phi[k++] = self.authority - opp.authority;
    phi[k++] = self.hub - opp.hub;
    phi[k++] = self.in_degree - opp.in_degree;
    phi[k++] = self.out_degree - opp.out_degree;
  }
  return phi;
}

FeatureMap feature_map(const Subthread& sub, const FeatureSchema& schema, std::span<const StateVector> states) {
  if (sub.states.empty()) throw DataError("feature map of an empty subthread for player '" + sub.player_id + "'");
  if (states.size() != sub.states.size()) throw UsageError("state vector count differs from subthread length");
  FeatureMap fm{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(schema.dim())), states.size() - 1};
  for (std::size_t t = 0; t < states.size(); ++t) {
    const std::int64_t idx = schema.time_index == TimeIndex::kGlobal ? sub.states[t].seq : static_cast<std::int64_t>(t);
    fm.mu += time_weight(schema.gamma, idx) * states[t];
  }
  return fm;
}

Subthread truncate_subthread(const Subthread& sub, std::size_t n) {
  if (n == 0) throw UsageError("truncation length must be at least 1");
  Subthread out = sub;
  if (out.states.size() > n) out.states.resize(n);
  return out;
}

FeatureMap feature_map(const EncodedSubthread& sub, const FeatureSchema& schema) {
  if (sub.states.empty()) throw DataError("feature map of an empty subthread for player '" + sub.player + "'");
  FeatureMap fm{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(schema.dim())), sub.states.size() - 1};
  for (std::size_t t = 0; t < sub.states.size(); ++t) {
    const std::int64_t idx = schema.time_index == TimeIndex::kGlobal ? sub.seqs[t] : static_cast<std::int64_t>(t);
    fm.mu += time_weight(schema.gamma, idx) * sub.states[t];
  }
  return fm;
}

EncodedThread truncate(const EncodedThread& t, std::size_t n) {
  if (n == 0) throw UsageError("truncation length must be at least 1");
  EncodedThread out = t;
  for (auto& side : out.sides) {
    if (side.states.size() > n) {
      side.states.resize(n);
      side.seqs.resize(n);
    }
  }
  return out;
}

std::vector<EncodedThread> encode_corpus(const Corpus& corpus, const FeatureSchema& schema,
                                         const CentralityCache* graph, VoteRule vote, Exec exec) {
  std::vector<const Thread*> threads;
  for (const Game& g : corpus.games)
    for (const Thread& t : g.threads) threads.push_back(&t);

  std::vector<EncodedThread> out(threads.size());
  const auto n = static_cast<std::ptrdiff_t>(threads.size());
  // Exceptions must not cross the parallel region boundary.
  std::vector<std::string> errors(threads.size());
#pragma omp parallel for schedule(dynamic, 8) if (exec == Exec::kParallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const Thread& t = *threads[i];
      EncodedThread& e = out[i];
      e.game_id = t.game_id;
      e.thread_id = t.thread_id;
      for (std::size_t s = 0; s < 2; ++s) {
        e.sides[s].player = t.participants[s];
        e.sides[s].final_score = t.final_scores.at(t.participants[s]);
      }
      for (const Message& m : t.messages) {
        auto& side = e.sides[m.sender == t.participants[0] ? 0 : 1];
        side.seqs.push_back(m.seq);
        side.states.push_back(encode_state(m, t, graph, schema, vote));
        if (!opponent_score_before(t, m)) ++side.opponent_score_fallbacks;
      }
    } catch (const std::exception& ex) {
      errors[i] = ex.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw DataError("encoding failed: " + e);
  return out;
}

}  // namespace diplo
