#include <cmath>
#include <random>

#include "doctest.h"
#include "diplo/graph.hpp"
#include "diplo/synth.hpp"
#include "support/centrality_oracle.hpp"
#include "support/fixtures.hpp"

using namespace diplo;
using diplo::testing::msg;
using doctest::Approx;

namespace {

CommGraph reversed(const CommGraph& g) {
  CommGraph r = g;
  const std::size_t n = g.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) r.weight[i * n + j] = g.w(j, i);
  return r;
}

}  // namespace

TEST_CASE("edge weights count messages") {
  const Corpus c = assemble_corpus({msg("t", 0, "A", "B", 1, 0), msg("t", 1, "A", "B", 1, 1), msg("t", 2, "B", "A", 1, 2)});
  const CommGraph g = build_graph(c, "g", 5);
  const std::size_t a = g.index_of("A"), b = g.index_of("B");
  CHECK(g.w(a, b) == 2.0);
  CHECK(g.w(b, a) == 1.0);
  CHECK(g.num_edges() == 2);

  const CommGraph early = build_graph(c, "g", -1);
  CHECK(early.num_edges() == 0);
  CHECK(early.size() == 2);
  const CommGraph mid = build_graph(c, "g", 1);
  CHECK(mid.w(a, b) == 2.0);
  CHECK(mid.w(b, a) == 0.0);
  CHECK_THROWS_AS(build_graph(c, "nope", 0), DataError);
}

TEST_CASE("graph weights and degrees match the generator's messages") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto out = generate(diplo::testing::small_synth(seed));
    for (const auto& game : out.corpus.games) {
      const std::int64_t cutoff = 6;
      std::map<std::pair<std::string, std::string>, double> expected;
      std::map<std::string, double> sent, received;
      for (const auto& t : game.threads)
        for (const auto& m : t.messages)
          if (m.turn <= cutoff) {
            expected[{m.sender, m.recipient}] += 1;
            sent[m.sender] += 1;
            received[m.recipient] += 1;
          }
      const CommGraph g = build_graph(out.corpus, game.game_id, cutoff);
      for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = 0; j < g.size(); ++j) {
          auto it = expected.find({g.nodes[i], g.nodes[j]});
          CHECK(g.w(i, j) == (it == expected.end() ? 0.0 : it->second));
        }
      const auto deg = degree_centrality(g);
      for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(deg.out[i] == sent[g.nodes[i]]);
        CHECK(deg.in[i] == received[g.nodes[i]]);
      }
    }
  }
}

TEST_CASE("eigen centrality small cases") {
  SUBCASE("single node") {
    const auto g = graph_from_edges({"v"}, {});
    CHECK(eigen_centrality(g) == std::vector<double>{0.0});
  }
  SUBCASE("reciprocal pair") {
    const auto g = graph_from_edges({"a", "b"}, {{"a", "b", 1.0}, {"b", "a", 1.0}});
    const auto e = eigen_centrality(g);
    CHECK(e[0] == Approx(1.0).epsilon(1e-12));
    CHECK(e[1] == Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("3-path") {
    const auto g = graph_from_edges({"a", "b", "c"}, {{"a", "b", 1.0}, {"b", "c", 1.0}});
    const auto e = eigen_centrality(g);
    CHECK(e[0] == Approx(0.7071).epsilon(1e-4));
    CHECK(e[1] == Approx(1.0).epsilon(1e-12));
    CHECK(e[2] == Approx(0.7071).epsilon(1e-4));
    CHECK(e[0] == Approx(std::sqrt(0.5)).epsilon(1e-9));
  }
  SUBCASE("isolated node next to an edge") {
    const auto g = graph_from_edges({"a", "b", "z"}, {{"a", "b", 1.0}});
    const auto e = eigen_centrality(g);
    CHECK(e[2] == 0.0);
    CHECK(e[0] == Approx(1.0));
  }
}

TEST_CASE("HITS canonical and duality cases") {
  const auto g = graph_from_edges({"A", "B"}, {{"A", "B", 1.0}});
  const auto h = hits(g);
  CHECK(h.authority == std::vector<double>{0.0, 1.0});
  CHECK(h.hub == std::vector<double>{1.0, 0.0});

  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = diplo::testing::random_graph(rng, diplo::testing::pick(rng, 2, 7));
    const auto fwd = hits(g);
    const auto rev = hits(reversed(g));
    CHECK(fwd.authority == rev.hub);
    CHECK(fwd.hub == rev.authority);
  }
}

TEST_CASE("HITS settles when the leading eigenvalue is repeated") {
  // Symmetric star-like weights: A^T A = A^2 has a repeated top eigenvalue, so
  // any vector in that eigenspace is a valid answer.
  const auto g = graph_from_edges({"a", "b", "c"}, {{"a", "b", 2}, {"b", "a", 2}, {"b", "c", 1}, {"c", "b", 1}});
  CentralityOptions opts;
  opts.hits_max_iterations = 5000;
  const auto h = hits(g, opts);
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = g.w(i, j);
  const Eigen::Vector3d auth(h.authority[0], h.authority[1], h.authority[2]);
  const Eigen::Vector3d image = a.transpose() * a * auth;
  CHECK((image - 5.0 * auth).cwiseAbs().maxCoeff() <= 1e-8);  // top eigenvalue of A^T A is 4 + 1
  CHECK(auth.maxCoeff() == 1.0);
}

TEST_CASE("centralities match dense eigendecompositions on graphs up to 5 nodes") {
  std::mt19937_64 rng(23);
  int compared = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto g = diplo::testing::random_graph(rng, diplo::testing::pick(rng, 1, 5));
    const auto oracle = diplo::testing::dense_centrality(g);
    const auto e = eigen_centrality(g);
    const auto h = hits(g);
    if (oracle.eigen) {
      ++compared;
      for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(e[i] - (*oracle.eigen)[i]) <= 1e-6);
    }
    if (oracle.authority) {
      for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(h.authority[i] - (*oracle.authority)[i]) <= 1e-6);
    }
  }
  CHECK(compared > 200);
}

TEST_CASE("degree centrality") {
  const auto g = graph_from_edges({"A", "B"}, {{"A", "B", 2.0}});
  const auto d = degree_centrality(g);
  CHECK(d.out[0] == 2.0);
  CHECK(d.in[1] == 2.0);
  CHECK(d.in[0] == 0.0);
  const auto empty = graph_from_edges({}, {});
  CHECK(degree_centrality(empty).in.empty());
  CHECK(compute_centrality(empty).values.empty());
}

TEST_CASE("scaling weights leaves normalized centralities unchanged (property)") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = diplo::testing::random_graph(rng, diplo::testing::pick(rng, 2, 6));
    CommGraph scaled = g;
    const double c = diplo::testing::uniform(rng, 0.1, 20.0);
    for (auto& w : scaled.weight) w *= c;
    const auto a = compute_centrality(g), b = compute_centrality(scaled);
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(b.values[i].eigen == Approx(a.values[i].eigen).epsilon(1e-8));
      CHECK(b.values[i].authority == Approx(a.values[i].authority).epsilon(1e-8));
      CHECK(b.values[i].hub == Approx(a.values[i].hub).epsilon(1e-8));
    }
  }
}

TEST_CASE("relabeling nodes permutes scores (property)") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = diplo::testing::random_graph(rng, diplo::testing::pick(rng, 2, 6));
    // New names reverse the sorted order.
    std::vector<PlayerId> renamed;
    std::map<PlayerId, PlayerId> to_new;
    for (std::size_t i = 0; i < g.size(); ++i) {
      to_new[g.nodes[i]] = "n" + std::to_string(g.size() - i);
      renamed.push_back(to_new[g.nodes[i]]);
    }
    std::vector<std::tuple<PlayerId, PlayerId, double>> edges;
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < g.size(); ++j)
        if (g.w(i, j) > 0) edges.emplace_back(to_new[g.nodes[i]], to_new[g.nodes[j]], g.w(i, j));
    const auto h = graph_from_edges(renamed, edges);
    const auto a = compute_centrality(g), b = compute_centrality(h);
    for (const auto& p : g.nodes) {
      const auto& x = a.at(p);
      const auto& y = b.at(to_new[p]);
      CHECK(y.eigen == Approx(x.eigen).epsilon(1e-9));
      CHECK(y.authority == Approx(x.authority).epsilon(1e-9));
      CHECK(y.hub == Approx(x.hub).epsilon(1e-9));
      CHECK(y.in_degree == x.in_degree);
      CHECK(y.out_degree == x.out_degree);
    }
  }
}

TEST_CASE("centrality cache covers every message turn and is deterministic") {
  const auto out = generate(diplo::testing::small_synth(6));
  const auto serial = CentralityCache::build(out.corpus, {}, Exec::kSerial);
  const auto parallel = CentralityCache::build(out.corpus, {}, Exec::kParallel);
  for (const auto& g : out.corpus.games)
    for (const auto& t : g.threads)
      for (const auto& m : t.messages) CHECK_NOTHROW(serial.at(g.game_id, m.turn).at(m.sender));
  REQUIRE(serial.tables().size() == parallel.tables().size());
  for (const auto& [key, table] : serial.tables()) {
    const auto& other = parallel.at(key.first, key.second);
    for (std::size_t i = 0; i < table.values.size(); ++i) {
      CHECK(table.values[i].eigen == other.values[i].eigen);
      CHECK(table.values[i].authority == other.values[i].authority);
    }
  }
  CHECK_THROWS_AS(serial.at("nope", 0), DataError);
}
