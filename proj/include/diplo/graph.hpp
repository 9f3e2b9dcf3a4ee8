#pragma once

// Directed, weighted player-communication graphs and their centralities.
// All score vectors are indexed like CommGraph::nodes.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "diplo/corpus.hpp"
#include "diplo/kernels.hpp"

namespace diplo {

struct CommGraph {
  std::vector<PlayerId> nodes;  // sorted
  std::vector<double> weight;   // row-major n x n; weight[u*n + v] = messages u sent v
  std::int64_t cutoff = 0;

  std::size_t size() const { return nodes.size(); }
  double w(std::size_t u, std::size_t v) const { return weight[u * nodes.size() + v]; }
  /// Index of `p` in nodes, or size() when absent.
  std::size_t index_of(const PlayerId& p) const;
  std::size_t num_edges() const;
};

/// Counts the messages of `game_id` sent at turn <= cutoff. Every player of the
/// game is a node, isolated or not.
CommGraph build_graph(const Corpus& corpus, const std::string& game_id, std::int64_t cutoff);

/// Graph from an explicit edge list; repeated edges accumulate.
CommGraph graph_from_edges(std::vector<PlayerId> nodes,
                           const std::vector<std::tuple<PlayerId, PlayerId, double>>& edges);

struct CentralityOptions {
  bool symmetrize_eigen = true;
  double tolerance = 1e-10;
  int max_iterations = 1000;
  // HITS runs to tolerance; the cap only guards against non-convergence. Each
  // authority iterate advances by A^T A every second step, so close leading
  // eigenvalues need far more than max_iterations.
  int hits_max_iterations = 200000;
};

/// Principal eigenvector of the (by default symmetrized) weighted adjacency,
/// max-normalized. Nodes without incident edges score 0.
std::vector<double> eigen_centrality(const CommGraph& g, const CentralityOptions& opts = {});

struct HitsScores {
  std::vector<double> authority;
  std::vector<double> hub;
};

/// HITS mutual reinforcement on the weighted adjacency, both vectors max-normalized.
HitsScores hits(const CommGraph& g, const CentralityOptions& opts = {});

struct DegreeScores {
  std::vector<double> in;
  std::vector<double> out;
};

DegreeScores degree_centrality(const CommGraph& g);

struct NodeCentrality {
  double eigen = 0.0;
  double authority = 0.0;
  double hub = 0.0;
  double in_degree = 0.0;
  double out_degree = 0.0;
};

struct CentralityScores {
  std::vector<PlayerId> nodes;
  std::vector<NodeCentrality> values;

  /// Throws DataError for unknown players.
  const NodeCentrality& at(const PlayerId& p) const;
};

CentralityScores compute_centrality(const CommGraph& g, const CentralityOptions& opts = {});

/// Centrality tables per (game, cutoff turn), filled once and read-only afterwards.
class CentralityCache {
 public:
  using Key = std::pair<std::string, std::int64_t>;

  /// Computes tables for every (game, turn) that some message of the corpus is sent at.
  static CentralityCache build(const Corpus& corpus, const CentralityOptions& opts = {},
                               Exec exec = Exec::kParallel);

  const CentralityScores& at(const std::string& game_id, std::int64_t cutoff) const;
  const std::map<Key, CentralityScores>& tables() const { return tables_; }

 private:
  std::map<Key, CentralityScores> tables_;
};

/// CSV: game_id,cutoff,player,eigen,authority,hub,in_degree,out_degree
void write_centrality_csv(std::ostream& out, const CentralityCache& cache);

}  // namespace diplo
