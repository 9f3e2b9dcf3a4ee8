#include "diplo/labeler.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace diplo {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_training_set(std::span<const TextFeatures> x, std::span<const int> y) {
  if (x.size() != y.size()) throw UsageError("feature and label counts differ");
  if (x.empty()) throw DataError("empty training set");
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v != 0 && v != 1) throw DataError("labels must be 0 or 1");
    (v ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw DataError("training set contains a single class");
  const std::size_t dim = x.front().dim;
  for (const auto& f : x) {
    if (f.dim != dim) throw DataError("feature vectors disagree on dimension");
    for (double c : f.counts)
      if (!std::isfinite(c)) throw DataError("non-finite feature value");
  }
}

std::vector<double> to_dense_rows(std::span<const TextFeatures> x) {
  const std::size_t d = x.front().dim;
  std::vector<double> out(x.size() * d, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t k = 0; k < x[i].indices.size(); ++k) out[i * d + x[i].indices[k]] = x[i].counts[k];
  return out;
}

LogisticModel fit_logistic(const kernels::RowsView& rows, std::span<const int> y, const ClassifierParams& p,
                           std::vector<double>* trace) {
  LogisticModel m{std::vector<double>(rows.cols, 0.0), 0.0};
  for (int epoch = 0; epoch < p.lr_epochs; ++epoch) {
    const auto g = logistic_gradient(m, rows, y, p.lr_l2);
    for (std::size_t j = 0; j < rows.cols; ++j) m.weights[j] -= p.lr_step * g[j];
    m.bias -= p.lr_step * g.back();
    if (trace) trace->push_back(logistic_loss(m, rows, y, p.lr_l2));
  }
  return m;
}

GaussianNBModel fit_gaussian_nb(const kernels::RowsView& rows, std::span<const int> y, const ClassifierParams& p) {
  GaussianNBModel m;
  const std::size_t d = rows.cols;
  std::array<double, 2> count{};
  for (int c = 0; c < 2; ++c) {
    m.mean[c].assign(d, 0.0);
    m.var[c].assign(d, 0.0);
  }
  for (std::size_t i = 0; i < rows.rows; ++i) {
    const int c = y[i];
    count[c] += 1.0;
    auto r = rows.row(i);
    for (std::size_t j = 0; j < d; ++j) m.mean[c][j] += r[j];
  }
  for (int c = 0; c < 2; ++c)
    for (auto& v : m.mean[c]) v /= count[c];
  for (std::size_t i = 0; i < rows.rows; ++i) {
    const int c = y[i];
    auto r = rows.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = r[j] - m.mean[c][j];
      m.var[c][j] += dev * dev;
    }
  }
  const double total = count[0] + count[1];
  for (int c = 0; c < 2; ++c) {
    m.log_prior[c] = std::log(count[c] / total);
    double ll = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      m.var[c][j] = std::max(m.var[c][j] / count[c], p.nb_var_floor);
      ll += -0.5 * std::log(2.0 * M_PI * m.var[c][j]) - 0.5 * m.mean[c][j] * m.mean[c][j] / m.var[c][j];
    }
    m.zero_loglik[c] = ll;
  }
  return m;
}

AdaBoostModel fit_adaboost(const kernels::RowsView& rows, std::span<const int> y, const ClassifierParams& p) {
  const std::size_t n = rows.rows, d = rows.cols;
  std::vector<int> sign(n);
  for (std::size_t i = 0; i < n; ++i) sign[i] = y[i] ? 1 : -1;

  // Per-feature sample order, sorted once.
  std::vector<std::vector<std::uint32_t>> order(d);
  for (std::size_t j = 0; j < d; ++j) {
    order[j].resize(n);
    std::iota(order[j].begin(), order[j].end(), 0u);
    std::stable_sort(order[j].begin(), order[j].end(), [&](std::uint32_t a, std::uint32_t b) {
      return rows.data[a * d + j] < rows.data[b * d + j];
    });
  }

  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  AdaBoostModel model;
  auto stump_out = [&](const Stump& s, std::size_t i) {
    return rows.data[i * d + s.feature] > s.threshold ? s.polarity : -s.polarity;
  };

  for (int round = 0; round < p.ada_rounds; ++round) {
    double base = 0.0;  // error of "everything +1"
    for (std::size_t i = 0; i < n; ++i)
      if (sign[i] < 0) base += w[i];

    Stump best;
    double best_err = std::numeric_limits<double>::infinity();
    auto consider = [&](std::uint32_t j, double thr, double err_pos) {
      if (err_pos < best_err) {
        best_err = err_pos;
        best = {j, thr, 1, 0.0};
      }
      if (1.0 - err_pos < best_err) {
        best_err = 1.0 - err_pos;
        best = {j, thr, -1, 0.0};
      }
    };
    for (std::uint32_t j = 0; j < d; ++j) {
      const auto& ord = order[j];
      double err = base;
      consider(j, rows.data[ord.front() * d + j] - 1.0, err);
      for (std::size_t k = 0; k < n;) {
        const double v = rows.data[ord[k] * d + j];
        while (k < n && rows.data[ord[k] * d + j] == v) {
          err += sign[ord[k]] > 0 ? w[ord[k]] : -w[ord[k]];
          ++k;
        }
        if (k < n) consider(j, 0.5 * (v + rows.data[ord[k] * d + j]), err);
      }
    }

    const double err = std::clamp(best_err, 1e-12, 1.0);
    if (err >= 0.5) break;
    best.alpha = 0.5 * std::log((1.0 - err) / err);
    model.stumps.push_back(best);
    if (best_err <= 1e-12) break;

    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] *= std::exp(-best.alpha * sign[i] * stump_out(best, i));
      z += w[i];
    }
    for (auto& wi : w) wi /= z;
  }
  return model;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) throw DataError("duplicate vocabulary token '" + tokens_[i] + "'");
  }
}

std::size_t Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? tokens_.size() : it->second;
}

Vocabulary build_vocabulary(std::span<const std::string> texts, std::size_t min_freq, std::size_t max_size) {
  if (texts.empty()) throw DataError("cannot build a vocabulary from no texts");
  std::map<std::string, std::size_t> freq;
  for (const auto& t : texts)
    for (auto& tok : tokenize(t)) ++freq[tok];
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : freq)
    if (n >= min_freq) kept.emplace_back(tok, n);
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (max_size > 0 && kept.size() > max_size) kept.resize(max_size);
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [tok, n] : kept) tokens.push_back(tok);
  return Vocabulary(std::move(tokens));
}

double TextFeatures::at(std::size_t j) const {
  auto it = std::lower_bound(indices.begin(), indices.end(), j);
  return (it != indices.end() && *it == j) ? counts[it - indices.begin()] : 0.0;
}

std::vector<double> TextFeatures::dense() const {
  std::vector<double> out(dim, 0.0);
  for (std::size_t k = 0; k < indices.size(); ++k) out[indices[k]] = counts[k];
  return out;
}

TextFeatures featurize(std::string_view text, const Vocabulary& vocab) {
  std::map<std::uint32_t, double> counts;
  for (const auto& tok : tokenize(text)) {
    const std::size_t j = vocab.find(tok);
    if (j < vocab.size()) counts[static_cast<std::uint32_t>(j)] += 1.0;
  }
  TextFeatures f;
  f.dim = vocab.size();
  for (auto [j, c] : counts) {
    f.indices.push_back(j);
    f.counts.push_back(c);
  }
  return f;
}

const char* to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::kLogisticRegression: return "logistic_regression";
    case ClassifierKind::kGaussianNB: return "gaussian_nb";
    case ClassifierKind::kAdaBoostStumps: return "adaboost";
  }
  return "unknown";
}

double logistic_loss(const LogisticModel& m, const kernels::RowsView& x, std::span<const int> y, double l2) {
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    auto r = x.row(i);
    double z = m.bias;
    for (std::size_t j = 0; j < x.cols; ++j) z += m.weights[j] * r[j];
    // -[y log s(z) + (1-y) log(1-s(z))] = softplus(z) - y z
    loss += softplus(z) - y[i] * z;
  }
  double reg = 0.0;
  for (double w : m.weights) reg += w * w;
  return loss / static_cast<double>(x.rows) + 0.5 * l2 * reg;
}

std::vector<double> logistic_gradient(const LogisticModel& m, const kernels::RowsView& x, std::span<const int> y,
                                      double l2) {
  std::vector<double> g(x.cols + 1, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    auto r = x.row(i);
    double z = m.bias;
    for (std::size_t j = 0; j < x.cols; ++j) z += m.weights[j] * r[j];
    const double resid = sigmoid(z) - y[i];
    for (std::size_t j = 0; j < x.cols; ++j) g[j] += resid * r[j];
    g[x.cols] += resid;
  }
  const double inv_n = 1.0 / static_cast<double>(x.rows);
  for (std::size_t j = 0; j < x.cols; ++j) g[j] = g[j] * inv_n + l2 * m.weights[j];
  g[x.cols] *= inv_n;
  return g;
}

BinaryClassifier::BinaryClassifier(ClassifierKind kind,
                                   std::variant<LogisticModel, GaussianNBModel, AdaBoostModel> model,
                                   double threshold)
    : kind_(kind), model_(std::move(model)), threshold_(threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw UsageError("decision threshold must lie in (0,1)");
}

double BinaryClassifier::predict_proba(const TextFeatures& x) const {
  if (const auto* lr = std::get_if<LogisticModel>(&model_)) {
    double z = lr->bias;
    for (std::size_t k = 0; k < x.indices.size(); ++k) z += lr->weights[x.indices[k]] * x.counts[k];
    return sigmoid(z);
  }
  if (const auto* nb = std::get_if<GaussianNBModel>(&model_)) {
    std::array<double, 2> joint{};
    for (int c = 0; c < 2; ++c) {
      double ll = nb->zero_loglik[c];
      for (std::size_t k = 0; k < x.indices.size(); ++k) {
        const auto j = x.indices[k];
        const double mu = nb->mean[c][j], v = nb->var[c][j], xv = x.counts[k];
        ll += 0.5 * (mu * mu - (xv - mu) * (xv - mu)) / v;
      }
      joint[c] = nb->log_prior[c] + ll;
    }
    return sigmoid(joint[1] - joint[0]);
  }
  const auto& ada = std::get<AdaBoostModel>(model_);
  double f = 0.0;
  for (const auto& s : ada.stumps) f += s.alpha * (x.at(s.feature) > s.threshold ? s.polarity : -s.polarity);
  return sigmoid(2.0 * f);
}

BinaryClassifier train_classifier(ClassifierKind kind, std::span<const TextFeatures> x, std::span<const int> y,
                                  const ClassifierParams& params) {
  check_training_set(x, y);
  const auto dense = to_dense_rows(x);
  const kernels::RowsView rows{dense, x.size(), x.front().dim};
  switch (kind) {
    case ClassifierKind::kLogisticRegression:
      return {kind, fit_logistic(rows, y, params, nullptr), params.threshold};
    case ClassifierKind::kGaussianNB:
      return {kind, fit_gaussian_nb(rows, y, params), params.threshold};
    case ClassifierKind::kAdaBoostStumps:
      return {kind, fit_adaboost(rows, y, params), params.threshold};
  }
  throw UsageError("unknown classifier kind");
}

std::vector<double> logistic_loss_trace(std::span<const TextFeatures> x, std::span<const int> y,
                                        const ClassifierParams& params) {
  check_training_set(x, y);
  const auto dense = to_dense_rows(x);
  const kernels::RowsView rows{dense, x.size(), x.front().dim};
  std::vector<double> trace{logistic_loss(LogisticModel{std::vector<double>(rows.cols, 0.0), 0.0}, rows, y,
                                          params.lr_l2)};
  fit_logistic(rows, y, params, &trace);
  return trace;
}

std::vector<double> predict_proba_batch(const BinaryClassifier& c, std::span<const TextFeatures> x, Exec exec) {
  std::vector<double> out(x.size());
  const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static) if (exec == Exec::kParallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = c.predict_proba(x[i]);
  return out;
}

StrategyPrediction predict_strategies(const StrategySuite& suite, std::string_view text) {
  const auto f = featurize(text, suite.vocab);
  StrategyPrediction p;
  for (std::size_t k = 0; k < kNumStrategies; ++k) {
    p.proba.values[k] = suite.classifiers[k].predict_proba(f);
    p.flags[k] = p.proba.values[k] >= suite.classifiers[k].threshold();
  }
  return p;
}

double macro_f1(std::span<const int> predicted, std::span<const int> gold) {
  if (predicted.size() != gold.size()) throw UsageError("macro_f1: length mismatch");
  double total = 0.0;
  for (int cls = 0; cls <= 1; ++cls) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const bool p = (predicted[i] != 0) == (cls == 1);
      const bool g = (gold[i] != 0) == (cls == 1);
      tp += p && g;
      fp += p && !g;
      fn += !p && g;
    }
    total += (tp + fp + fn == 0) ? 1.0 : 2.0 * tp / (2.0 * tp + fp + fn);
  }
  return total / 2.0;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw UsageError("pearson: length mismatch");
  if (x.size() < 2) throw UsageError("pearson: need at least two observations");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw NumericalError("pearson: zero variance, correlation undefined");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationReport correlation_report(const Corpus& corpus) {
  std::array<std::vector<double>, kNumStrategies> rates;
  for (const Game& g : corpus.games) {
    std::map<PlayerId, std::pair<std::array<double, kNumStrategies>, double>> acc;
    for (const Thread& t : g.threads) {
      for (const Message& m : t.messages) {
        const StrategyLabels* src = m.labels ? &*m.labels : (m.predicted ? &*m.predicted : nullptr);
        if (!src) continue;
        auto& [hits, n] = acc[m.sender];
        for (std::size_t k = 0; k < kNumStrategies; ++k) hits[k] += src->values[k] >= 0.5;
        n += 1.0;
      }
    }
    for (auto& [player, entry] : acc)
      for (std::size_t k = 0; k < kNumStrategies; ++k) rates[k].push_back(entry.first[k] / entry.second);
  }
  CorrelationReport rep;
  rep.n_players = rates[0].size();
  for (std::size_t a = 0; a < kNumStrategies; ++a) {
    rep.r[a][a] = 1.0;
    if (rep.n_players < 2) {
      for (std::size_t b = a + 1; b < kNumStrategies; ++b) rep.r[a][b] = rep.r[b][a] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    for (std::size_t b = a + 1; b < kNumStrategies; ++b) {
      double r = std::numeric_limits<double>::quiet_NaN();
      try {
        r = pearson(rates[a], rates[b]);
      } catch (const NumericalError&) {
      }
      rep.r[a][b] = rep.r[b][a] = r;
    }
  }
  return rep;
}

Action assign_action(const std::array<bool, kNumStrategies>& flags, VoteRule rule) {
  const bool f = flags[static_cast<std::size_t>(Strategy::kFriendship)];
  const bool r = flags[static_cast<std::size_t>(Strategy::kReasoning)];
  if (f && !r) return Action::kFriendship;
  if (r && !f) return Action::kReasoning;
  if (!f && !r) return Action::kNeutral;
  const int votes = flags[static_cast<std::size_t>(Strategy::kGameMove)] +
                    flags[static_cast<std::size_t>(Strategy::kShareInfo)];
  const int needed = rule == VoteRule::kAnyVote ? 1 : 2;
  return votes >= needed ? Action::kReasoning : Action::kFriendship;
}

Action effective_action(const Message& m, VoteRule rule) {
  if (m.action) return *m.action;
  const StrategyLabels* src = m.labels ? &*m.labels : (m.predicted ? &*m.predicted : nullptr);
  if (!src) return Action::kNeutral;
  std::array<bool, kNumStrategies> flags{};
  for (std::size_t k = 0; k < kNumStrategies; ++k) flags[k] = src->values[k] >= 0.5;
  return assign_action(flags, rule);
}

LabelResult label_corpus(const Corpus& corpus, const LabelConfig& cfg, Exec exec) {
  std::vector<Message*> all;
  LabelResult out;
  out.corpus = corpus;
  for (Game& g : out.corpus.games)
    for (Thread& t : g.threads)
      for (Message& m : t.messages) all.push_back(&m);

  std::vector<std::size_t> gold;
  std::vector<std::string> gold_texts;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i]->labels) {
      gold.push_back(i);
      gold_texts.push_back(all[i]->text);
    }
  }
  if (gold.empty()) {
    throw DataError("no gold-labeled messages: set \"labels\" on at least part of the corpus to train the labeler");
  }

  out.suite.vocab = build_vocabulary(gold_texts, cfg.min_freq, cfg.max_vocab);
  std::vector<TextFeatures> feats(all.size());
  const auto n_all = static_cast<std::ptrdiff_t>(all.size());
#pragma omp parallel for schedule(static) if (exec == Exec::kParallel)
  for (std::ptrdiff_t i = 0; i < n_all; ++i) feats[i] = featurize(all[i]->text, out.suite.vocab);

  // Deterministic held-out split of the gold slice.
  std::vector<std::size_t> perm(gold.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::floor(cfg.holdout_fraction * static_cast<double>(gold.size())));
  std::vector<bool> is_test(gold.size(), false);
  for (std::size_t k = 0; k < n_test; ++k) is_test[perm[k]] = true;

  for (std::size_t s = 0; s < kNumStrategies; ++s) {
    std::vector<TextFeatures> x_all, x_tr, x_te;
    std::vector<int> y_all, y_tr, y_te;
    for (std::size_t k = 0; k < gold.size(); ++k) {
      const auto& f = feats[gold[k]];
      const int y = all[gold[k]]->labels->values[s] >= 0.5;
      x_all.push_back(f);
      y_all.push_back(y);
      (is_test[k] ? x_te : x_tr).push_back(f);
      (is_test[k] ? y_te : y_tr).push_back(y);
    }
    const bool tr_ok = std::count(y_tr.begin(), y_tr.end(), 1) > 0 && std::count(y_tr.begin(), y_tr.end(), 0) > 0;
    const bool holdout = tr_ok && !x_te.empty();
    if (!holdout) {
      x_tr = x_all;
      y_tr = y_all;
      x_te = x_all;
      y_te = y_all;
    }

    double best = -1.0;
    std::size_t best_row = 0;
    for (ClassifierKind kind : kAllClassifierKinds) {
      double f1 = std::numeric_limits<double>::quiet_NaN();
      try {
        const auto clf = train_classifier(kind, x_tr, y_tr, cfg.params);
        const auto proba = predict_proba_batch(clf, x_te, exec);
        std::vector<int> pred(proba.size());
        for (std::size_t i = 0; i < proba.size(); ++i) pred[i] = proba[i] >= clf.threshold();
        f1 = macro_f1(pred, y_te);
      } catch (const DataError&) {
      }
      if (!std::isnan(f1) && f1 > best) {
        best = f1;
        best_row = out.f1_table.size();
      }
      out.f1_table.push_back({kind, static_cast<Strategy>(s), f1, false, holdout});
    }
    if (best < 0.0) {
      throw DataError(std::string("cannot train a classifier for '") + kStrategyKeys[s] +
                      "': gold labels contain a single class");
    }
    out.f1_table[best_row].selected = true;
    out.suite.classifiers[s] = train_classifier(out.f1_table[best_row].kind, x_all, y_all, cfg.params);
  }

  std::array<std::vector<double>, kNumStrategies> proba;
  for (std::size_t s = 0; s < kNumStrategies; ++s) proba[s] = predict_proba_batch(out.suite.classifiers[s], feats, exec);

  for (std::size_t i = 0; i < all.size(); ++i) {
    Message& m = *all[i];
    StrategyLabels p;
    std::array<bool, kNumStrategies> flags{};
    for (std::size_t s = 0; s < kNumStrategies; ++s) {
      p.values[s] = proba[s][i];
      flags[s] = proba[s][i] >= out.suite.classifiers[s].threshold();
    }
    m.predicted = p;
    if (m.labels) {
      for (std::size_t s = 0; s < kNumStrategies; ++s) flags[s] = m.labels->values[s] >= 0.5;
    }
    m.action = assign_action(flags, cfg.vote);
  }
  out.correlation = correlation_report(out.corpus);
  return out;
}

}  // namespace diplo
