#include "gmsel/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>

namespace gmsel {

namespace {

double median_of(Eigen::VectorXd v) {
  const Eigen::Index n = v.size();
  if (n == 0) return 0.0;
  std::sort(v.data(), v.data() + n);
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool adjacent(const std::vector<std::vector<int>>& adj, int u, int v) {
  return std::binary_search(adj[u].begin(), adj[u].end(), v);
}

}  // namespace

const std::array<std::string, kNumEdgeOrbits>& edge_orbit_names() {
  static const std::array<std::string, kNumEdgeOrbits> names = {
      "p3_edge",
      "triangle_edge",
      "p4_end_edge",
      "p4_mid_edge",
      "star4_edge",
      "c4_edge",
      "tailed_triangle_tail",
      "tailed_triangle_base",
      "tailed_triangle_apex",
      "diamond_chord",
      "diamond_cycle",
      "k4_edge"};
  return names;
}

Distribution kcore_numbers(const Graph& g) {
  const auto adj = g.adjacency();
  const int n = g.n;
  std::vector<int> degree(n), core(n);
  for (int v = 0; v < n; ++v) degree[v] = static_cast<int>(adj[v].size());

  // Peeling in O(n + m) via bucket sort on degrees.
  const int max_deg = n == 0 ? 0 : *std::max_element(degree.begin(), degree.end());
  std::vector<std::vector<int>> buckets(max_deg + 1);
  for (int v = 0; v < n; ++v) buckets[degree[v]].push_back(v);
  std::vector<int> cur_deg = degree;
  std::vector<bool> removed(n, false);
  int k = 0;
  for (int processed = 0; processed < n;) {
    int d = 0;
    while (d <= max_deg && buckets[d].empty()) ++d;
    if (d > max_deg) break;
    int v = buckets[d].back();
    buckets[d].pop_back();
    if (removed[v] || cur_deg[v] != d) continue;  // stale bucket entry
    k = std::max(k, d);
    core[v] = k;
    removed[v] = true;
    ++processed;
    for (int w : adj[v]) {
      if (!removed[w] && cur_deg[w] > d) {
        --cur_deg[w];
        buckets[cur_deg[w]].push_back(w);
      }
    }
  }

  Distribution out;
  out.level = Distribution::Level::node;
  out.name = "kcore";
  out.values = Eigen::VectorXd(n);
  for (int v = 0; v < n; ++v) out.values[v] = core[v];
  return out;
}

Distribution pagerank(const Graph& g, const PageRankOptions& opts,
                      bool* converged) {
  const int n = g.n;
  if (n < 1) throw DataError("pagerank: empty graph");

  // Out-neighbor lists; for undirected graphs each edge acts both ways.
  std::vector<std::vector<int>> out_nbrs(n);
  for (const auto& [u, v] : g.edges) {
    out_nbrs[u].push_back(v);
    if (!g.directed) out_nbrs[v].push_back(u);
  }

  Eigen::VectorXd rank = Eigen::VectorXd::Constant(n, 1.0 / n);
  Eigen::VectorXd next(n);
  bool ok = false;
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    next.setZero();
    double dangling = 0.0;
    for (int u = 0; u < n; ++u) {
      if (out_nbrs[u].empty()) {
        dangling += rank[u];
        continue;
      }
      const double share = rank[u] / out_nbrs[u].size();
      for (int v : out_nbrs[u]) next[v] += share;
    }
    next = ((1.0 - opts.damping) / n + opts.damping * dangling / n) +
           (opts.damping * next.array());
    const double delta = (next - rank).cwiseAbs().sum();
    rank.swap(next);
    if (delta < opts.tol) {
      ok = true;
      break;
    }
  }
  if (converged) *converged = ok;
  rank /= rank.sum();

  Distribution out;
  out.level = Distribution::Level::node;
  out.name = "pagerank";
  out.values = std::move(rank);
  return out;
}

std::pair<Distribution, Distribution> wedge_triangle_counts(const Graph& g) {
  const auto adj = g.adjacency();
  const int n = g.n;
  Eigen::VectorXd wedges(n), triangles = Eigen::VectorXd::Zero(n);
  for (int v = 0; v < n; ++v) {
    const double d = static_cast<double>(adj[v].size());
    wedges[v] = d * (d - 1.0) / 2.0;
  }
  for (const auto& [u, v] : g.edges) {
    // Triangles through edge (u,v): common neighbors.
    const auto& a = adj[u];
    const auto& b = adj[v];
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i] < b[j]) {
        ++i;
      } else if (a[i] > b[j]) {
        ++j;
      } else {
        if (a[i] > std::max(u, v)) {  // count each triangle once
          triangles[u] += 1.0;
          triangles[v] += 1.0;
          triangles[a[i]] += 1.0;
        }
        ++i;
        ++j;
      }
    }
  }
  Distribution w{std::move(wedges), Distribution::Level::node, "wedges"};
  Distribution t{std::move(triangles), Distribution::Level::node, "triangles"};
  return {std::move(w), std::move(t)};
}

std::vector<Distribution> edge_orbit_counts(const Graph& g) {
  const auto adj = g.adjacency();
  const int m = g.num_edges();
  std::vector<Distribution> out(kNumEdgeOrbits);
  for (int o = 0; o < kNumEdgeOrbits; ++o) {
    out[o].level = Distribution::Level::edge;
    out[o].name = edge_orbit_names()[o];
    out[o].values = Eigen::VectorXd::Zero(m);
  }

  std::vector<int> candidates;
  for (int ei = 0; ei < m; ++ei) {
    const auto [u, v] = g.edges[ei];
    auto& counts = out;
    auto bump = [&](EdgeOrbit o) { counts[o].values[ei] += 1.0; };

    // 3-node orbits from endpoint neighborhoods.
    long common = 0;
    candidates.clear();
    for (int w : adj[u])
      if (w != v) candidates.push_back(w);
    for (int w : adj[v])
      if (w != u) candidates.push_back(w);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()),
                     candidates.end());
    for (int w : candidates)
      if (adjacent(adj, u, w) && adjacent(adj, v, w)) ++common;
    counts[kTriangleEdge].values[ei] = static_cast<double>(common);
    counts[kP3Edge].values[ei] =
        static_cast<double>(adj[u].size() - 1 + adj[v].size() - 1 -
                            2 * common);

    // 4-node orbits, case 1: both extra vertices adjacent to {u,v}.
    const int s = static_cast<int>(candidates.size());
    for (int i = 0; i < s; ++i) {
      const int w = candidates[i];
      const bool uw = adjacent(adj, u, w);
      const bool vw = adjacent(adj, v, w);
      for (int j = i + 1; j < s; ++j) {
        const int x = candidates[j];
        const bool ux = adjacent(adj, u, x);
        const bool vx = adjacent(adj, v, x);
        const bool wx = adjacent(adj, w, x);
        const int e4 = 1 + uw + vw + ux + vx + wx;
        const int du = 1 + uw + ux;
        const int dv = 1 + vw + vx;
        const int dw = uw + vw + wx;
        const int dx = ux + vx + wx;
        switch (e4) {
          case 3:
            // Both w and x touch {u,v}: star on u or v, or a mid path.
            if ((uw && ux) || (vw && vx))
              bump(kStar4Edge);
            else
              bump(kP4MidEdge);
            break;
          case 4:
            if (std::max({du, dv, dw, dx}) == 2) {
              bump(kC4Edge);
            } else if (du == 1 || dv == 1) {
              bump(kTailedTriangleTail);  // a pendant endpoint of (u,v)
            } else if (du == 2 && dv == 2) {
              bump(kTailedTriangleBase);
            } else {
              bump(kTailedTriangleApex);
            }
            break;
          case 5:
            if (du == 3 && dv == 3)
              bump(kDiamondChord);
            else
              bump(kDiamondCycle);
            break;
          case 6:
            bump(kK4Edge);
            break;
          default:
            break;  // e4 < 3 cannot occur with both vertices attached
        }
      }
      // Case 2: x hangs off w only (not adjacent to u or v).
      for (int x : adj[w]) {
        if (x == u || x == v) continue;
        if (adjacent(adj, u, x) || adjacent(adj, v, x)) continue;
        if (uw && vw)
          bump(kTailedTriangleBase);  // triangle u,v,w with pendant on w
        else
          bump(kP4EndEdge);
      }
    }
  }

  return out;
}

std::array<long long, kNumGraphlets4> four_node_graphlet_counts(
    const Graph& g) {
  const auto orbits = edge_orbit_counts(g);
  auto total = [&](EdgeOrbit o) {
    return static_cast<long long>(std::llround(orbits[o].values.sum()));
  };
  std::array<long long, kNumGraphlets4> counts{};
  counts[kPath4] = (total(kP4EndEdge) + total(kP4MidEdge)) / 3;
  counts[kStar4] = total(kStar4Edge) / 3;
  counts[kCycle4] = total(kC4Edge) / 4;
  counts[kTailedTriangle] =
      (total(kTailedTriangleTail) + total(kTailedTriangleBase) +
       total(kTailedTriangleApex)) /
      4;
  counts[kDiamond] = (total(kDiamondChord) + total(kDiamondCycle)) / 5;
  counts[kClique4] = total(kK4Edge) / 6;
  return counts;
}

Eigen::VectorXd four_node_graphlet_frequencies(const Graph& g) {
  const auto counts = four_node_graphlet_counts(g);
  Eigen::VectorXd freq(kNumGraphlets4);
  double total = 0.0;
  for (int i = 0; i < kNumGraphlets4; ++i) {
    freq[i] = static_cast<double>(counts[i]);
    total += freq[i];
  }
  if (total > 0.0) freq /= total;
  return freq;
}

std::map<std::string, double> global_stats(const Graph& g) {
  const Graph sym = symmetrize(g);
  const auto adj = sym.adjacency();
  const double n = g.n;
  const double m = g.num_edges();
  const double m_sym = sym.num_edges();

  std::map<std::string, double> s;
  s["n"] = n;
  s["m"] = m;
  const double pairs = n * (n - 1.0);
  s["density"] =
      pairs > 0.0 ? (g.directed ? m / pairs : m / (pairs / 2.0)) : 0.0;
  s["density_symmetrized"] = pairs > 0.0 ? m_sym / (pairs / 2.0) : 0.0;

  Eigen::VectorXd degree(sym.n);
  for (int v = 0; v < sym.n; ++v)
    degree[v] = static_cast<double>(adj[v].size());
  s["max_degree"] = degree.size() ? degree.maxCoeff() : 0.0;
  s["mean_degree"] = degree.size() ? degree.mean() : 0.0;

  // Degree assortativity: Pearson correlation over directed edge stubs.
  {
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0, cnt = 0;
    for (const auto& [u, v] : sym.edges) {
      const double du = degree[u], dv = degree[v];
      sx += du + dv;
      sy += du + dv;
      sxx += du * du + dv * dv;
      syy += du * du + dv * dv;
      sxy += 2.0 * du * dv;
      cnt += 2.0;
    }
    double assort = 0.0;
    if (cnt > 0.0) {
      const double cov = sxy / cnt - (sx / cnt) * (sy / cnt);
      const double var = sxx / cnt - (sx / cnt) * (sx / cnt);
      assort = var > 1e-15 ? cov / var : 0.0;
    }
    s["assortativity"] = assort;
  }

  const auto core = kcore_numbers(sym);
  s["max_core"] = core.values.size() ? core.values.maxCoeff() : 0.0;
  s["mean_core"] = core.values.size() ? core.values.mean() : 0.0;
  s["median_core"] = median_of(core.values);

  const auto [wedges, triangles] = wedge_triangle_counts(sym);
  const double wedge_total = wedges.values.sum();
  const double tri_total = triangles.values.sum() / 3.0;
  s["global_clustering"] =
      wedge_total > 0.0 ? 3.0 * tri_total / wedge_total : 0.0;
  s["triangle_total"] = tri_total;

  const auto orbits = edge_orbit_counts(sym);
  const auto& tri_per_edge = orbits[kTriangleEdge].values;
  const auto& k4_per_edge = orbits[kK4Edge].values;
  s["mean_triangles_per_edge"] =
      tri_per_edge.size() ? tri_per_edge.mean() : 0.0;
  s["median_triangles_per_edge"] = median_of(tri_per_edge);
  s["four_clique_total"] = k4_per_edge.sum() / 6.0;
  s["mean_4cliques_per_edge"] = k4_per_edge.size() ? k4_per_edge.mean() : 0.0;
  s["median_4cliques_per_edge"] = median_of(k4_per_edge);
  return s;
}

FeatureSchema parse_schema(const std::string& name) {
  if (name == "regular") return FeatureSchema::regular;
  if (name == "graphlets") return FeatureSchema::graphlets;
  if (name == "compact") return FeatureSchema::compact;
  if (name == "reg_plus_graphlets" || name == "reg+graphlets")
    return FeatureSchema::reg_plus_graphlets;
  throw DataError("unknown feature schema: " + name);
}

std::string schema_name(FeatureSchema s) {
  switch (s) {
    case FeatureSchema::regular: return "regular";
    case FeatureSchema::graphlets: return "graphlets";
    case FeatureSchema::compact: return "compact";
    case FeatureSchema::reg_plus_graphlets: return "reg_plus_graphlets";
  }
  return "?";
}

int schema_dim(FeatureSchema s) {
  switch (s) {
    case FeatureSchema::regular: return 5 * kNumSummaryFunctions + 3;
    case FeatureSchema::graphlets: return 12 * kNumSummaryFunctions;
    case FeatureSchema::compact: return 16 + 12 * 3 + 6;
    case FeatureSchema::reg_plus_graphlets:
      return 17 * kNumSummaryFunctions + 3;
  }
  return 0;
}

namespace {

Eigen::VectorXd regular_features(const Graph& g, const Graph& sym,
                                 int* replaced) {
  const auto adj = sym.adjacency();
  Eigen::VectorXd degree(sym.n);
  for (int v = 0; v < sym.n; ++v)
    degree[v] = static_cast<double>(adj[v].size());
  const auto core = kcore_numbers(sym);
  const auto pr = pagerank(sym);
  const auto [wedges, triangles] = wedge_triangle_counts(sym);

  Eigen::VectorXd out(5 * kNumSummaryFunctions + 3);
  int k = 0;
  const std::array<const Eigen::VectorXd*, 5> dists = {
      &degree, &core.values, &pr.values, &wedges.values, &triangles.values};
  for (const Eigen::VectorXd* dist : dists) {
    out.segment(k, kNumSummaryFunctions) = summarize(*dist, replaced);
    k += kNumSummaryFunctions;
  }
  const auto globals = global_stats(g);
  out[k++] = globals.at("density");
  out[k++] = globals.at("density_symmetrized");
  out[k++] = globals.at("assortativity");
  return out;
}

Eigen::VectorXd graphlet_features(const Graph& sym, int* replaced) {
  const auto orbits = edge_orbit_counts(sym);
  Eigen::VectorXd out(12 * kNumSummaryFunctions);
  for (int o = 0; o < kNumEdgeOrbits; ++o) {
    out.segment(o * kNumSummaryFunctions, kNumSummaryFunctions) =
        summarize(orbits[o].values, replaced);
  }
  return out;
}

Eigen::VectorXd compact_features(const Graph& g, const Graph& sym) {
  static const char* kGlobalOrder[16] = {
      "n",
      "m",
      "density",
      "max_degree",
      "mean_degree",
      "assortativity",
      "max_core",
      "mean_core",
      "median_core",
      "global_clustering",
      "triangle_total",
      "mean_triangles_per_edge",
      "median_triangles_per_edge",
      "four_clique_total",
      "mean_4cliques_per_edge",
      "median_4cliques_per_edge"};
  const auto globals = global_stats(g);
  Eigen::VectorXd out(58);
  int k = 0;
  for (const char* name : kGlobalOrder) out[k++] = globals.at(name);
  const auto orbits = edge_orbit_counts(sym);
  for (int o = 0; o < kNumEdgeOrbits; ++o) {
    const auto& v = orbits[o].values;
    out[k++] = v.size() ? v.mean() : 0.0;
    out[k++] = median_of(v);
    out[k++] = v.size() ? v.maxCoeff() : 0.0;
  }
  out.segment(k, kNumGraphlets4) = four_node_graphlet_frequencies(sym);
  return out;
}

}  // namespace

MetaFeatureVector meta_features(const Graph& g, FeatureSchema schema) {
  if (g.n == 0) throw DataError("meta_features: empty graph");
  const Graph sym = symmetrize(g);
  MetaFeatureVector mf;
  mf.schema = schema;
  mf.graph_id = g.id;
  int replaced = 0;
  switch (schema) {
    case FeatureSchema::regular:
      mf.values = regular_features(g, sym, &replaced);
      break;
    case FeatureSchema::graphlets:
      mf.values = graphlet_features(sym, &replaced);
      break;
    case FeatureSchema::compact:
      mf.values = compact_features(g, sym);
      break;
    case FeatureSchema::reg_plus_graphlets: {
      const Eigen::VectorXd reg = regular_features(g, sym, &replaced);
      const Eigen::VectorXd glt = graphlet_features(sym, &replaced);
      mf.values.resize(reg.size() + glt.size());
      mf.values << reg, glt;
      break;
    }
  }
  for (Eigen::Index i = 0; i < mf.values.size(); ++i) {
    if (!std::isfinite(mf.values[i])) {
      mf.values[i] = 0.0;
      ++replaced;
    }
  }
  mf.nonfinite_replaced = replaced;
  return mf;
}

void save_feature_matrix(const std::vector<MetaFeatureVector>& rows,
                         const std::string& path) {
  if (rows.empty()) throw DataError("save_feature_matrix: no rows");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  const Eigen::Index d = rows[0].values.size();
  out << "graph_id";
  for (Eigen::Index j = 0; j < d; ++j) out << ",f" << j;
  out << '\n';
  for (const auto& r : rows) {
    if (r.values.size() != d)
      throw DataError("save_feature_matrix: inconsistent dimensions");
    out << r.graph_id;
    for (Eigen::Index j = 0; j < d; ++j)
      out << ',' << csv::format_double(r.values[j]);
    out << '\n';
  }
  nlohmann::json meta = {{"schema", schema_name(rows[0].schema)},
                         {"dim", d},
                         {"rows", rows.size()}};
  std::ofstream side(path + ".meta.json");
  side << meta.dump(2) << '\n';
}

std::pair<Eigen::MatrixXd, std::vector<std::string>> load_feature_matrix(
    const std::string& path, FeatureSchema* schema) {
  const auto rows = csv::read_file(path);
  if (rows.empty() || rows[0].empty() || rows[0][0] != "graph_id")
    throw DataError(path + ": expected feature matrix header");
  const size_t d = rows[0].size() - 1;
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size() - 1),
                    static_cast<Eigen::Index>(d));
  std::vector<std::string> ids;
  for (size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != d + 1)
      throw DataError(path + ": ragged row " + std::to_string(i));
    ids.push_back(rows[i][0]);
    for (size_t j = 0; j < d; ++j)
      M(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j)) =
          std::stod(rows[i][j + 1]);
  }
  if (schema) {
    std::ifstream side(path + ".meta.json");
    if (side) {
      nlohmann::json meta;
      side >> meta;
      *schema = parse_schema(meta.value("schema", "regular"));
    }
  }
  return {std::move(M), std::move(ids)};
}

}  // namespace gmsel
