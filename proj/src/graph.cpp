#include "diplo/graph.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include "diplo/csv.hpp"

namespace diplo {

namespace {

// Divides by the maximum entry; leaves an all-zero vector untouched.
void max_normalize(std::vector<double>& x) {
  double mx = 0.0;
  for (double v : x) mx = std::max(mx, std::abs(v));
  if (mx > 0.0)
    for (double& v : x) v /= mx;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// y = W x (transpose = false) or y = W^T x. Both sum over the inner index in
// ascending order so that reversing a graph reproduces results bit for bit.
std::vector<double> multiply(const CommGraph& g, const std::vector<double>& x, bool transpose) {
  const std::size_t n = g.size();
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += (transpose ? g.w(j, i) : g.w(i, j)) * x[j];
    y[i] = s;
  }
  return y;
}

}  // namespace

std::size_t CommGraph::index_of(const PlayerId& p) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), p);
  return (it != nodes.end() && *it == p) ? static_cast<std::size_t>(it - nodes.begin()) : nodes.size();
}

std::size_t CommGraph::num_edges() const {
  return static_cast<std::size_t>(std::count_if(weight.begin(), weight.end(), [](double v) { return v > 0.0; }));
}

CommGraph build_graph(const Corpus& corpus, const std::string& game_id, std::int64_t cutoff) {
  const Game* game = corpus.find_game(game_id);
  if (!game) throw DataError("unknown game '" + game_id + "'");
  CommGraph g;
  g.nodes = game->players;
  g.cutoff = cutoff;
  const std::size_t n = g.nodes.size();
  g.weight.assign(n * n, 0.0);
  for (const Thread& t : game->threads) {
    const std::size_t a = g.index_of(t.participants[0]), b = g.index_of(t.participants[1]);
    for (const Message& m : t.messages) {
      if (m.turn > cutoff) continue;
      if (m.sender == t.participants[0]) {
        g.weight[a * n + b] += 1.0;
      } else {
        g.weight[b * n + a] += 1.0;
      }
    }
  }
  return g;
}

CommGraph graph_from_edges(std::vector<PlayerId> nodes,
                           const std::vector<std::tuple<PlayerId, PlayerId, double>>& edges) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  CommGraph g;
  g.nodes = std::move(nodes);
  const std::size_t n = g.size();
  g.weight.assign(n * n, 0.0);
  for (const auto& [u, v, w] : edges) {
    const std::size_t a = g.index_of(u), b = g.index_of(v);
    if (a == n || b == n) throw DataError("edge endpoint is not a node: " + u + "->" + v);
    if (a == b) throw DataError("self-loop on " + u);
    if (!(w > 0.0)) throw DataError("edge weight must be positive");
    g.weight[a * n + b] += w;
  }
  return g;
}

std::vector<double> eigen_centrality(const CommGraph& g, const CentralityOptions& opts) {
  const std::size_t n = g.size();
  // Adjacency used for the iteration; directed variant follows incoming edges.
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] = opts.symmetrize_eigen ? g.w(i, j) + g.w(j, i) : g.w(j, i);

  std::vector<char> active(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (g.w(i, j) > 0.0 || g.w(j, i) > 0.0) active[i] = 1;

  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = active[i] ? 1.0 : 0.0;
  if (std::none_of(active.begin(), active.end(), [](char c) { return c; })) return x;

  // Iterating with A + I keeps the dominant eigenvalue strictly dominant on
  // bipartite graphs, where plain A oscillates.
  for (int it = 0; it < opts.max_iterations; ++it) {
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      double s = x[i];
      for (std::size_t j = 0; j < n; ++j) s += a[i * n + j] * x[j];
      y[i] = s;
    }
    max_normalize(y);
    const double diff = max_abs_diff(x, y);
    x = std::move(y);
    if (diff < opts.tolerance) break;
  }
  return x;
}

HitsScores hits(const CommGraph& g, const CentralityOptions& opts) {
  const std::size_t n = g.size();
  HitsScores s{std::vector<double>(n, 1.0), std::vector<double>(n, 1.0)};
  if (g.num_edges() == 0) {
    std::fill(s.authority.begin(), s.authority.end(), 0.0);
    std::fill(s.hub.begin(), s.hub.end(), 0.0);
    return s;
  }
  // Authority and hub are updated from each other's previous iterate, which
  // makes the procedure exactly symmetric under edge reversal. Every second
  // iterate is then a power step of A^T A (resp. A A^T), so convergence is
  // judged against the iterate two steps back: when the leading eigenvalue is
  // repeated the odd and even iterates settle on different valid vectors.
  HitsScores before = s;
  for (int it = 0; it < opts.hits_max_iterations; ++it) {
    auto auth = multiply(g, s.hub, true);
    auto hub = multiply(g, s.authority, false);
    max_normalize(auth);
    max_normalize(hub);
    const double diff = std::max(max_abs_diff(auth, before.authority), max_abs_diff(hub, before.hub));
    before = std::move(s);
    s.authority = std::move(auth);
    s.hub = std::move(hub);
    if (it > 0 && diff < opts.tolerance) break;
  }
  return s;
}

DegreeScores degree_centrality(const CommGraph& g) {
  const std::size_t n = g.size();
  DegreeScores d{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      d.out[i] += g.w(i, j);
      d.in[j] += g.w(i, j);
    }
  return d;
}

const NodeCentrality& CentralityScores::at(const PlayerId& p) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), p);
  if (it == nodes.end() || *it != p) throw DataError("no centrality for player '" + p + "'");
  return values[it - nodes.begin()];
}

CentralityScores compute_centrality(const CommGraph& g, const CentralityOptions& opts) {
  CentralityScores out;
  out.nodes = g.nodes;
  out.values.resize(g.size());
  const auto eig = eigen_centrality(g, opts);
  const auto h = hits(g, opts);
  const auto deg = degree_centrality(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.values[i] = {eig[i], h.authority[i], h.hub[i], deg.in[i], deg.out[i]};
  }
  return out;
}

CentralityCache CentralityCache::build(const Corpus& corpus, const CentralityOptions& opts, Exec exec) {
  std::vector<Key> keys;
  {
    std::set<Key> distinct;
    for (const Game& g : corpus.games)
      for (const Thread& t : g.threads)
        for (const Message& m : t.messages) distinct.emplace(g.game_id, m.turn);
    keys.assign(distinct.begin(), distinct.end());
  }
  std::vector<CentralityScores> scores(keys.size());
  const auto n = static_cast<std::ptrdiff_t>(keys.size());
#pragma omp parallel for schedule(dynamic) if (exec == Exec::kParallel)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    scores[k] = compute_centrality(build_graph(corpus, keys[k].first, keys[k].second), opts);
  }
  CentralityCache cache;
  for (std::size_t k = 0; k < keys.size(); ++k) cache.tables_.emplace(keys[k], std::move(scores[k]));
  return cache;
}

const CentralityScores& CentralityCache::at(const std::string& game_id, std::int64_t cutoff) const {
  auto it = tables_.find({game_id, cutoff});
  if (it == tables_.end()) {
    throw DataError("no centrality table for game '" + game_id + "' at turn " + std::to_string(cutoff));
  }
  return it->second;
}

void write_centrality_csv(std::ostream& out, const CentralityCache& cache) {
  out << "game_id,cutoff,player,eigen,authority,hub,in_degree,out_degree\n";
  for (const auto& [key, table] : cache.tables()) {
    for (std::size_t i = 0; i < table.nodes.size(); ++i) {
      const auto& v = table.values[i];
      out << csv_field(key.first) << ',' << key.second << ',' << csv_field(table.nodes[i]) << ','
          << format_double(v.eigen) << ',' << format_double(v.authority) << ',' << format_double(v.hub) << ','
          << format_double(v.in_degree) << ',' << format_double(v.out_degree) << '\n';
    }
  }
}

}  // namespace diplo
