#include "diplo/eval.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <random>

#include "diplo/csv.hpp"

namespace diplo {

namespace {

bool degenerate(const EncodedThread& t) { return t.sides[0].degenerate() || t.sides[1].degenerate(); }

ThreadRecord score_thread(const RewardModel& model, const EncodedThread& t, AverageMode average) {
  ThreadRecord rec;
  rec.game_id = t.game_id;
  rec.thread_id = t.thread_id;
  if (degenerate(t)) {
    rec.status = ThreadStatus::kDegenerate;
    return rec;
  }
  const auto w = winner_side(t);
  if (!w) {
    rec.status = ThreadStatus::kTie;
    return rec;
  }
  const auto& win = t.sides[*w];
  const auto& lose = t.sides[1 - *w];
  rec.winner = win.player;
  rec.loser = lose.player;
  rec.winner_avg_reward = average_reward(model, win.states, average);
  rec.loser_avg_reward = average_reward(model, lose.states, average);
  rec.correct = rec.winner_avg_reward > rec.loser_avg_reward;
  return rec;
}

void tally(EvalReport& rep, const ThreadRecord& rec) {
  switch (rec.status) {
    case ThreadStatus::kUsed:
      ++rep.n_threads_used;
      rep.n_correct += rec.correct;
      break;
    case ThreadStatus::kTie: ++rep.n_ties; break;
    case ThreadStatus::kDegenerate: ++rep.n_degenerate; break;
  }
  rep.records.push_back(rec);
}

void finish(EvalReport& rep) {
  if (rep.n_threads_used == 0) throw DataError("no usable threads to evaluate (all tied or degenerate)");
  rep.accuracy = static_cast<double>(rep.n_correct) / static_cast<double>(rep.n_threads_used);
}

}  // namespace

std::optional<PlayerId> thread_winner(const Thread& thread) {
  std::array<double, 2> f{};
  for (std::size_t i = 0; i < 2; ++i) {
    auto it = thread.final_scores.find(thread.participants[i]);
    if (it == thread.final_scores.end() || !it->second) {
      throw DataError("thread '" + thread.thread_id + "': final score of '" + thread.participants[i] + "' unknown");
    }
    f[i] = *it->second;
  }
  if (f[0] == f[1]) return std::nullopt;
  return thread.participants[f[0] > f[1] ? 0 : 1];
}

std::optional<std::size_t> winner_side(const EncodedThread& t) {
  const auto& a = t.sides[0].final_score;
  const auto& b = t.sides[1].final_score;
  if (!a || !b) throw DataError("thread '" + t.thread_id + "': final score unknown");
  if (*a == *b) return std::nullopt;
  return *a > *b ? 0 : 1;
}

const char* to_string(EvalMode m) { return m == EvalMode::kInSample ? "in-sample" : "cv"; }

std::optional<EvalMode> eval_mode_from_string(const std::string& s) {
  if (s == "cv") return EvalMode::kCrossValidation;
  if (s == "in-sample") return EvalMode::kInSample;
  return std::nullopt;
}

const char* to_string(ThreadStatus s) {
  switch (s) {
    case ThreadStatus::kUsed: return "used";
    case ThreadStatus::kTie: return "tie";
    case ThreadStatus::kDegenerate: return "degenerate";
  }
  return "used";
}

EvalReport accuracy(const RewardModel& model, std::span<const EncodedThread> threads, AverageMode average) {
  EvalReport rep;
  rep.variant = model.schema.variant;
  for (const auto& t : threads) tally(rep, score_thread(model, t, average));
  finish(rep);
  return rep;
}

EvalReport evaluate(std::span<const EncodedThread> threads, const FeatureSchema& schema, const EvalConfig& cfg) {
  if (cfg.mode == EvalMode::kInSample) {
    const auto pairs = training_pairs(threads, schema);
    const auto model = fit(pairs, schema, cfg.lambda, cfg.exec);
    return accuracy(model, threads, cfg.average);
  }

  if (cfg.folds < 2) throw UsageError("cross-validation needs at least 2 folds");
  std::vector<std::size_t> perm(threads.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> fold_of(threads.size());
  for (std::size_t k = 0; k < perm.size(); ++k) fold_of[perm[k]] = static_cast<int>(k % cfg.folds);

  std::vector<ThreadRecord> records(threads.size());
  for (int fold = 0; fold < static_cast<int>(cfg.folds); ++fold) {
    std::vector<EncodedThread> train;
    bool any_test = false;
    for (std::size_t i = 0; i < threads.size(); ++i) {
      if (fold_of[i] == fold) {
        any_test = true;
      } else {
        train.push_back(threads[i]);
      }
    }
    if (!any_test) continue;
    const auto pairs = training_pairs(train, schema);
    const auto model = fit(pairs, schema, cfg.lambda, cfg.exec);
    for (std::size_t i = 0; i < threads.size(); ++i) {
      if (fold_of[i] != fold) continue;
      records[i] = score_thread(model, threads[i], cfg.average);
      records[i].fold = fold;
    }
  }

  EvalReport rep;
  rep.variant = schema.variant;
  for (const auto& rec : records) tally(rep, rec);
  finish(rep);
  // Reported accuracy is the mean over folds that have at least one usable thread.
  std::vector<std::size_t> used(cfg.folds, 0), correct(cfg.folds, 0);
  for (const auto& rec : records) {
    if (rec.status != ThreadStatus::kUsed) continue;
    ++used[static_cast<std::size_t>(rec.fold)];
    correct[static_cast<std::size_t>(rec.fold)] += rec.correct;
  }
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t f = 0; f < cfg.folds; ++f) {
    if (used[f] == 0) continue;
    sum += static_cast<double>(correct[f]) / static_cast<double>(used[f]);
    ++counted;
  }
  rep.accuracy = sum / static_cast<double>(counted);
  return rep;
}

std::size_t max_subthread_length(std::span<const EncodedThread> threads) {
  std::size_t n = 0;
  for (const auto& t : threads)
    for (const auto& s : t.sides) n = std::max(n, s.states.size());
  return n;
}

std::vector<AblationRow> ablation(std::span<const EncodedThread> threads, const FeatureSchema& schema,
                                  const EvalConfig& cfg, std::span<const std::size_t> ns) {
  if (ns.empty()) throw UsageError("ablation needs at least one n");
  for (std::size_t k = 0; k < ns.size(); ++k) {
    if (ns[k] == 0) throw UsageError("ablation n values must be positive");
    if (k > 0 && ns[k] <= ns[k - 1]) throw UsageError("ablation n values must be strictly ascending");
  }
  std::vector<AblationRow> rows;
  for (std::size_t n : ns) {
    std::vector<EncodedThread> cut;
    cut.reserve(threads.size());
    for (const auto& t : threads) cut.push_back(truncate(t, n));
    const auto rep = evaluate(cut, schema, cfg);
    rows.push_back({n, schema.variant, rep.accuracy, rep.n_threads_used});
  }
  return rows;
}

void write_summary_csv_header(std::ostream& out) {
  out << "variant,eval_mode,n_threads_used,n_ties,n_degenerate,n_correct,accuracy,lambda,gamma,average\n";
}

void write_summary_csv_row(std::ostream& out, const EvalReport& r, const EvalConfig& cfg, const FeatureSchema& s) {
  out << to_string(r.variant) << ',' << to_string(cfg.mode) << ',' << r.n_threads_used << ',' << r.n_ties << ','
      << r.n_degenerate << ',' << r.n_correct << ',' << format_double(r.accuracy) << ','
      << format_double(cfg.lambda) << ',' << format_double(s.gamma) << ',' << to_string(cfg.average) << '\n';
}

void write_thread_csv(std::ostream& out, std::span<const EvalReport> reports) {
  out << "variant,game_id,thread_id,status,winner,loser,winner_avg_reward,loser_avg_reward,correct,fold\n";
  for (const auto& r : reports) {
    for (const auto& rec : r.records) {
      out << to_string(r.variant) << ',' << csv_field(rec.game_id) << ',' << csv_field(rec.thread_id) << ','
          << to_string(rec.status) << ',' << csv_field(rec.winner) << ',' << csv_field(rec.loser) << ',';
      if (rec.status == ThreadStatus::kUsed) {
        out << format_double(rec.winner_avg_reward) << ',' << format_double(rec.loser_avg_reward) << ','
            << (rec.correct ? 1 : 0);
      } else {
        out << ",,";
      }
      out << ',' << rec.fold << '\n';
    }
  }
}

void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows) {
  out << "n,variant,accuracy,n_threads_used\n";
  for (const auto& r : rows) {
    out << r.n << ',' << to_string(r.variant) << ',' << format_double(r.accuracy) << ',' << r.n_threads_used << '\n';
  }
}

}  // namespace diplo
