#include <random>
#include <sstream>

#include "doctest.h"
#include "diplo/sbirl.hpp"
#include "diplo/synth.hpp"
#include "support/fixtures.hpp"
#include "support/oracle.hpp"

using namespace diplo;

namespace {

FeatureSchema schema_of(std::size_t d, double gamma = 0.9) {
  FeatureSchema s;
  s.names.assign(d, "f");
  for (std::size_t j = 0; j < d; ++j) s.names[j] += std::to_string(j);
  s.gamma = gamma;
  return s;
}

std::vector<TrainingPair> pairs_of(const std::vector<double>& rows, std::size_t n, std::size_t d,
                                   const std::vector<double>& y) {
  std::vector<TrainingPair> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].mu = Eigen::Map<const Eigen::VectorXd>(rows.data() + i * d, static_cast<Eigen::Index>(d));
    out[i].final_score = y[i];
  }
  return out;
}

}  // namespace

TEST_CASE("zero targets give zero weights") {
  std::vector<double> rows = {1, 2, 3, 4, 5, 7, 2, 0, 1};
  const auto pairs = pairs_of(rows, 3, 3, {0, 0, 0});
  for (double lambda : {0.0, 0.1}) CHECK(fit(pairs, schema_of(3), lambda).theta.isZero(0.0));
}

TEST_CASE("orthonormal design recovers targets exactly") {
  const auto pairs = pairs_of({1, 0, 0, 1}, 2, 2, {2, 3});
  const auto m = fit(pairs, schema_of(2), 0.0);
  CHECK(m.theta[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(m.theta[1] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(m.diagnostics.rank == 2);
  // ridge shrinks each coordinate by 1/(1 + n*lambda)
  const auto r = fit(pairs, schema_of(2), 0.5);
  CHECK(r.theta[0] == doctest::Approx(1.0));
  CHECK(r.theta[1] == doctest::Approx(1.5));
}

TEST_CASE("solver agrees with the SVD reference on random instances") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = diplo::testing::pick(rng, 1, 8);
    const std::size_t n = diplo::testing::pick(rng, 1, 64);
    const bool deficient = trial % 4 == 0 && d > 1;
    std::vector<double> rows(n * d), y(n);
    for (auto& v : rows) v = diplo::testing::uniform(rng, -2, 2);
    if (deficient)  // duplicate a column
      for (std::size_t i = 0; i < n; ++i) rows[i * d + d - 1] = rows[i * d];
    for (auto& v : y) v = diplo::testing::uniform(rng, -5, 5);
    for (double lambda : {0.0, 1e-3}) {
      const auto m = fit(pairs_of(rows, n, d, y), schema_of(d), lambda);
      const auto ref = diplo::oracle::pseudo_inverse(rows, n, d, y, lambda);
      double scale = 1.0;
      for (double v : ref) scale = std::max(scale, std::abs(v));
      for (std::size_t j = 0; j < d; ++j) CHECK(std::abs(m.theta[static_cast<Eigen::Index>(j)] - ref[j]) <= 1e-8 * scale);
    }
  }
}

TEST_CASE("fit argument checks") {
  CHECK_THROWS_AS(fit({}, schema_of(2), 0.0), DataError);
  const auto pairs = pairs_of({1, 0}, 1, 2, {1});
  CHECK_THROWS_AS(fit(pairs, schema_of(2), -1.0), UsageError);
  CHECK_THROWS_AS(fit(pairs, schema_of(3), 0.0), DataError);
  auto bad = pairs;
  bad[0].final_score = std::nan("");
  CHECK_THROWS_AS(fit(bad, schema_of(2), 0.0), DataError);
}

TEST_CASE("serial and parallel fits agree") {
  std::mt19937_64 rng(5);
  const std::size_t n = 3000, d = 6;
  std::vector<double> rows(n * d), y(n);
  for (auto& v : rows) v = diplo::testing::uniform(rng, -1, 1);
  for (auto& v : y) v = diplo::testing::uniform(rng, -1, 1);
  const auto p = pairs_of(rows, n, d, y);
  const auto a = fit(p, schema_of(d), 1e-3, Exec::kSerial), b = fit(p, schema_of(d), 1e-3, Exec::kParallel);
  CHECK((a.theta - b.theta).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("rewards and averages") {
  RewardModel m;
  m.schema = schema_of(2, 0.5);
  m.theta = Eigen::Vector2d(2.0, -1.0);
  CHECK(reward(m, Eigen::Vector2d(1, 0)) == 2.0);
  CHECK(reward(m, Eigen::Vector2d(0, 1)) == -1.0);
  CHECK(reward(m, Eigen::Vector2d(3, 4)) == 2.0);
  CHECK_THROWS_AS(reward(m, Eigen::Vector3d(1, 1, 1)), UsageError);

  m.theta = Eigen::Vector2d(1.0, 0.0);
  const std::vector<StateVector> s = {Eigen::Vector2d(1, 0), Eigen::Vector2d(2, 0), Eigen::Vector2d(3, 0)};
  CHECK(average_reward(m, s) == 2.0);
  // weights 1, .5, .25
  CHECK(average_reward(m, s, AverageMode::kDiscounted) == doctest::Approx((1 + 1.0 + 0.75) / 1.75));
  const std::vector<StateVector> same(5, Eigen::Vector2d(4, 9));
  CHECK(average_reward(m, same) == 4.0);
  CHECK(average_reward(m, same, AverageMode::kDiscounted) == doctest::Approx(4.0));
  CHECK(average_reward(m, std::span(s).first(1)) == 1.0);
  CHECK_THROWS_AS(average_reward(m, std::span<const StateVector>{}), DataError);
}

TEST_CASE("the discounted sum of rewards equals theta . mu") {
  // Linear reward identity, checked over synthetic subthreads in both variants.
  std::mt19937_64 rng(17);
  for (Variant v : {Variant::kContextAgnostic, Variant::kGraphAware}) {
    const Corpus c = generate(diplo::testing::small_synth(4)).corpus;
    const auto cache = CentralityCache::build(c);
    const auto schema = FeatureSchema::make(v, 0.8);
    const auto enc = encode_corpus(c, schema, v == Variant::kGraphAware ? &cache : nullptr);
    RewardModel m;
    m.schema = schema;
    m.theta.resize(static_cast<Eigen::Index>(schema.dim()));
    for (Eigen::Index j = 0; j < m.theta.size(); ++j) m.theta[j] = diplo::testing::uniform(rng, -2, 2);
    for (const auto& t : enc)
      for (const auto& side : t.sides) {
        if (side.states.empty()) continue;
        double sum = 0.0, w = 1.0;
        for (const auto& s : side.states) {
          sum += w * reward(m, s);
          w *= schema.gamma;
        }
        CHECK(std::abs(sum - m.theta.dot(feature_map(side, schema).mu)) <= 1e-10 * std::max(1.0, std::abs(sum)));
      }
  }
}

TEST_CASE("noiseless planted scores are recovered") {
  auto cfg = diplo::testing::small_synth(8, ScoreMode::kPlantedRegression);
  cfg.n_games = 4;
  cfg.threads_per_game = 12;
  cfg.min_messages = 4;
  for (Variant v : {Variant::kContextAgnostic, Variant::kGraphAware}) {
    cfg.planted_variant = v;
    const auto out = generate(cfg);
    const auto schema = planted_schema(cfg);
    const auto cache = CentralityCache::build(out.corpus);
    const auto enc = encode_corpus(out.corpus, schema, v == Variant::kGraphAware ? &cache : nullptr);
    const auto pairs = training_pairs(enc, schema);
    const auto m = fit(pairs, schema, 0.0);
    for (std::size_t j = 0; j < schema.dim(); ++j)
      CHECK(m.theta[static_cast<Eigen::Index>(j)] == doctest::Approx(out.ledger.planted_theta[j]).epsilon(1e-6));
    CHECK(m.diagnostics.rank == schema.dim() - 1);  // bias equals the sum of the action columns
    CHECK(m.diagnostics.residual_norm <= 1e-8);
  }
}

TEST_CASE("ridge shrinks the weight norm monotonically") {
  std::mt19937_64 rng(99);
  const std::size_t n = 40, d = 4;
  std::vector<double> rows(n * d), y(n);
  for (auto& v : rows) v = diplo::testing::uniform(rng, -1, 1);
  for (auto& v : y) v = diplo::testing::uniform(rng, -1, 1);
  const auto p = pairs_of(rows, n, d, y);
  double prev = fit(p, schema_of(d), 0.0).theta.norm();
  for (double lambda : {1e-4, 1e-2, 1.0, 100.0}) {
    const double now = fit(p, schema_of(d), lambda).theta.norm();
    CHECK(now < prev);
    prev = now;
  }
}

TEST_CASE("scaling the targets scales the weights") {
  std::mt19937_64 rng(7);
  const std::size_t n = 30, d = 5;
  std::vector<double> rows(n * d), y(n), y3(n);
  for (auto& v : rows) v = diplo::testing::uniform(rng, -1, 1);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = diplo::testing::uniform(rng, -1, 1);
    y3[i] = 3.0 * y[i];
  }
  for (double lambda : {0.0, 0.01}) {
    const auto a = fit(pairs_of(rows, n, d, y), schema_of(d), lambda);
    const auto b = fit(pairs_of(rows, n, d, y3), schema_of(d), lambda);
    CHECK((b.theta - 3.0 * a.theta).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("model files round-trip exactly") {
  std::mt19937_64 rng(3);
  RewardModel m;
  m.schema = FeatureSchema::make(Variant::kGraphAware, 0.75, TimeIndex::kGlobal, false);
  m.theta.resize(static_cast<Eigen::Index>(m.schema.dim()));
  for (Eigen::Index j = 0; j < m.theta.size(); ++j) m.theta[j] = diplo::testing::uniform(rng, -1e3, 1e3) / 7.0;
  m.lambda = 1e-6;
  m.diagnostics = {123, 0.1 / 3.0, 4.5e7, 9};
  std::stringstream ss;
  save_model(ss, m);
  const auto back = load_model(ss);
  CHECK(back.schema == m.schema);
  CHECK(back.theta == m.theta);
  CHECK(back.lambda == m.lambda);
  CHECK(back.diagnostics.n == 123);
  CHECK(back.diagnostics.residual_norm == m.diagnostics.residual_norm);
  CHECK(back.diagnostics.rank == 9);

  std::istringstream junk("not a model\n");
  CHECK_THROWS_AS(load_model(junk), DataError);
}
