#pragma once

#include <Eigen/Core>
#include <array>
#include <map>
#include <string>
#include <vector>

#include "gmsel/graph.hpp"
#include "gmsel/stats.hpp"

namespace gmsel {

/// Per-node or per-edge feature distribution.
struct Distribution {
  enum class Level { node, edge };
  Eigen::VectorXd values;
  Level level = Level::node;
  std::string name;
};

/// Edge orbits of the connected 3- and 4-node graphlets, in schema order.
enum EdgeOrbit : int {
  kP3Edge = 0,
  kTriangleEdge,
  kP4EndEdge,
  kP4MidEdge,
  kStar4Edge,
  kC4Edge,
  kTailedTriangleTail,
  kTailedTriangleBase,
  kTailedTriangleApex,
  kDiamondChord,
  kDiamondCycle,
  kK4Edge,
  kNumEdgeOrbits
};

const std::array<std::string, kNumEdgeOrbits>& edge_orbit_names();

/// Connected 4-node graphlets, in schema order.
enum Graphlet4 : int {
  kPath4 = 0,
  kStar4,
  kCycle4,
  kTailedTriangle,
  kDiamond,
  kClique4,
  kNumGraphlets4
};

/// Core numbers: core(v) is the largest k such that v survives iterative
/// removal of all nodes with degree < k. Expects an undirected graph.
Distribution kcore_numbers(const Graph& g);

struct PageRankOptions {
  double damping = 0.85;
  double tol = 1e-8;
  int max_iter = 200;
};

/// Power iteration with uniform teleport; dangling mass is redistributed
/// uniformly. `converged`, when non-null, reports whether tol was reached.
Distribution pagerank(const Graph& g, const PageRankOptions& opts = {},
                      bool* converged = nullptr);

/// Node-centered wedge and triangle counts:
/// wedges(v) = C(deg(v), 2), triangles(v) = #triangles containing v.
std::pair<Distribution, Distribution> wedge_triangle_counts(const Graph& g);

/// Induced per-edge frequencies of the 12 connected 3/4-node graphlet edge
/// orbits, indexed [orbit][edge] with edges in g.edges order.
std::vector<Distribution> edge_orbit_counts(const Graph& g);

/// Raw induced counts of the six connected 4-node graphlets.
std::array<long long, kNumGraphlets4> four_node_graphlet_counts(
    const Graph& g);

/// Counts normalized to sum 1 (all zeros when the graph has no connected
/// 4-node induced subgraph).
Eigen::VectorXd four_node_graphlet_frequencies(const Graph& g);

/// Graph-level statistics; see global_stat_names() for the key set.
std::map<std::string, double> global_stats(const Graph& g);

enum class FeatureSchema { regular, graphlets, compact, reg_plus_graphlets };

FeatureSchema parse_schema(const std::string& name);
std::string schema_name(FeatureSchema s);
int schema_dim(FeatureSchema s);  // 318 / 756 / 58 / 1074

struct MetaFeatureVector {
  FeatureSchema schema = FeatureSchema::regular;
  Eigen::VectorXd values;
  std::string graph_id;
  int nonfinite_replaced = 0;  // extraction log: summaries replaced by 0
};

/// Fixed-length structural fingerprint of a graph under the given schema.
/// Directed inputs are symmetrized for all extractors except the two
/// density globals, which use both forms.
MetaFeatureVector meta_features(const Graph& g, FeatureSchema schema);

/// Feature matrix persistence: CSV `graph_id,f0,...,f{d-1}` plus a JSON
/// sidecar `<path>.meta.json` recording the schema.
void save_feature_matrix(const std::vector<MetaFeatureVector>& rows,
                         const std::string& path);
std::pair<Eigen::MatrixXd, std::vector<std::string>> load_feature_matrix(
    const std::string& path, FeatureSchema* schema = nullptr);

}  // namespace gmsel
