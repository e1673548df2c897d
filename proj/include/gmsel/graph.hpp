#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gmsel/csv.hpp"

namespace gmsel {

using Edge = std::pair<int, int>;

/// Simple sparse graph. Immutable after construction; node indices are
/// dense in [0, n). Undirected edges are stored canonically with u <= v.
struct Graph {
  std::string id;
  std::string name;
  std::string domain;
  int n = 0;
  std::vector<Edge> edges;
  bool directed = false;
  std::optional<std::vector<int>> node_labels;

  int num_edges() const { return static_cast<int>(edges.size()); }

  /// Sorted adjacency lists of the symmetrized graph.
  std::vector<std::vector<int>> adjacency() const;
};

struct LoadOptions {
  bool directed = false;
  char comment_prefix = '#';
};

/// Parses a whitespace-separated edge list. Node ids are re-indexed densely
/// in first-appearance order; duplicate edges and self-loops are dropped.
Graph load_edge_list(const std::string& path, const LoadOptions& options = {});

/// Builds a Graph from in-memory edges (same canonicalization as the loader,
/// node count fixed to n).
Graph make_graph(int n, std::vector<Edge> edges, bool directed = false,
                 std::string id = "g");

/// Reads "node_index label" lines into g.node_labels.
void load_node_labels(Graph& g, const std::string& path);

/// Undirected view: edge set {(u,v) : (u,v) or (v,u) in g}. Idempotent on
/// undirected input.
Graph symmetrize(const Graph& g);

struct NodeSplit {
  std::vector<int> train, val, test;
  std::uint64_t seed = 0;
};

struct EdgeSplit {
  std::vector<Edge> pos_train, pos_val, pos_test;
  std::vector<Edge> neg_train, neg_val, neg_test;
  std::uint64_t seed = 0;
};

/// 64/16/20 node split: floor(0.64 n) train, floor(0.16 n) val, rest test,
/// over a seeded uniform permutation.
NodeSplit generate_node_split(const Graph& g, std::uint64_t seed);

/// 64/16/20 positive edge split plus equally sized negative (non-edge) sets,
/// disjoint across splits.
EdgeSplit generate_edge_split(const Graph& g, std::uint64_t seed);

void save_node_split(const NodeSplit& s, const std::string& path);
NodeSplit load_node_split(const std::string& path);
void save_edge_split(const EdgeSplit& s, const std::string& path);
EdgeSplit load_edge_split(const std::string& path);

/// Row of the graph catalog CSV
/// (`graph_id,name,domain,n_nodes,n_edges,has_labels`).
struct CatalogEntry {
  std::string graph_id;
  std::string name;
  std::string domain;
  long n_nodes = 0;
  long n_edges = 0;
  bool has_labels = false;
};

std::vector<CatalogEntry> load_graph_catalog(const std::string& path);
void save_graph_catalog(const std::vector<CatalogEntry>& entries,
                        const std::string& path);

}  // namespace gmsel
