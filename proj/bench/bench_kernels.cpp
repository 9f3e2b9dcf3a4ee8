// Serial reference vs OpenMP kernels. Arg 0 of each benchmark selects the
// execution path (0 serial, 1 parallel).

#include <benchmark/benchmark.h>

#include <random>

#include "diplo/encoding.hpp"
#include "diplo/graph.hpp"
#include "diplo/kernels.hpp"
#include "diplo/labeler.hpp"
#include "diplo/synth.hpp"

using namespace diplo;

namespace {

Exec exec_of(const benchmark::State& st) { return st.range(0) ? Exec::kParallel : Exec::kSerial; }

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

void BM_NormalEquations(benchmark::State& st) {
  const std::size_t n = static_cast<std::size_t>(st.range(1)), d = 10;
  const auto x = random_values(n * d, 1), y = random_values(n, 2);
  const kernels::RowsView view{x, n, d};
  for (auto _ : st) benchmark::DoNotOptimize(kernels::normal_equations(view, y, exec_of(st)));
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * n));
}
BENCHMARK(BM_NormalEquations)->ArgsProduct({{0, 1}, {1 << 12, 1 << 18}});

void BM_DiscountedSums(benchmark::State& st) {
  const std::size_t seqs = static_cast<std::size_t>(st.range(1)), len = 12, d = 10;
  const auto x = random_values(seqs * len * d, 3);
  std::vector<std::size_t> offsets(seqs + 1);
  for (std::size_t k = 0; k <= seqs; ++k) offsets[k] = k * len;
  const kernels::Sequences s{{x, seqs * len, d}, offsets};
  for (auto _ : st) benchmark::DoNotOptimize(kernels::discounted_sums(s, 0.9, exec_of(st)));
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * seqs));
}
BENCHMARK(BM_DiscountedSums)->ArgsProduct({{0, 1}, {1 << 10, 1 << 16}});

void BM_RowDots(benchmark::State& st) {
  const std::size_t n = static_cast<std::size_t>(st.range(1)), d = 10;
  const auto x = random_values(n * d, 4), theta = random_values(d, 5);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::row_dots({x, n, d}, theta, exec_of(st)));
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * n));
}
BENCHMARK(BM_RowDots)->ArgsProduct({{0, 1}, {1 << 12, 1 << 18}});

const Corpus& bench_corpus() {
  static const Corpus c = [] {
    SynthConfig cfg;
    cfg.n_games = 40;
    cfg.threads_per_game = 40;
    return generate(cfg).corpus;
  }();
  return c;
}

void BM_EncodeCorpus(benchmark::State& st) {
  const Corpus& c = bench_corpus();
  const auto cache = CentralityCache::build(c);
  const auto schema = FeatureSchema::make(Variant::kGraphAware);
  for (auto _ : st) benchmark::DoNotOptimize(encode_corpus(c, schema, &cache, VoteRule::kAnyVote, exec_of(st)));
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * c.num_messages()));
}
BENCHMARK(BM_EncodeCorpus)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_CentralityCache(benchmark::State& st) {
  const Corpus& c = bench_corpus();
  for (auto _ : st) benchmark::DoNotOptimize(CentralityCache::build(c, {}, exec_of(st)));
}
BENCHMARK(BM_CentralityCache)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PredictProba(benchmark::State& st) {
  const Corpus& c = bench_corpus();
  std::vector<std::string> texts;
  std::vector<int> y;
  for (const auto& g : c.games)
    for (const auto& t : g.threads)
      for (const auto& m : t.messages)
        if (m.labels) {
          texts.push_back(m.text);
          y.push_back(m.labels->flag(Strategy::kReasoning));
        }
  const Vocabulary vocab = build_vocabulary(texts, 1);
  std::vector<TextFeatures> x;
  for (const auto& t : texts) x.push_back(featurize(t, vocab));
  const auto clf = train_classifier(ClassifierKind::kGaussianNB, x, y);
  for (auto _ : st) benchmark::DoNotOptimize(predict_proba_batch(clf, x, exec_of(st)));
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * x.size()));
}
BENCHMARK(BM_PredictProba)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
