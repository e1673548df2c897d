// Independent reference implementations used to validate the library.
// Everything here is written from the definitions, not from the library
// sources, so agreement is meaningful.
#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <vector>

#include "gmsel/features.hpp"
#include "gmsel/graph.hpp"
#include "gmsel/perf.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// Statistical summary reference (63 functions, same conventions as the
// library contract, independently coded with plain loops).

inline double ref_round8(double v) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.8g", v);
  return std::strtod(buf, nullptr);
}

inline double ref_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::vector<double> ref_summarize(const std::vector<double>& x) {
  const size_t n = x.size();
  const double len = static_cast<double>(n);
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());

  const double vmin = sorted.front();
  const double vmax = sorted.back();
  const double med = ref_median(x);

  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= len;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : x) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= len;
  m3 /= len;
  m4 /= len;
  const double variance = m2;
  const double stdev = std::sqrt(variance);

  const double shift = vmin <= 0.0 ? 1.0 - vmin : 0.0;
  double log_sum = 0.0, inv_sum = 0.0;
  for (double v : x) {
    log_sum += std::log(v + shift);
    inv_sum += 1.0 / (v + shift);
  }
  const double geo = std::exp(log_sum / len);
  const double harm = len / inv_sum;

  const double skew = m2 > 0 ? m3 / std::pow(m2, 1.5) : 0.0;
  const double kpb = m2 > 0 ? m4 / (m2 * m2) : 0.0;
  const double kfb = m2 > 0 ? kpb - 3.0 : 0.0;
  double kfu = 0.0, kpu = 0.0;
  if (m2 > 0 && n > 3) {
    kfu = ((len + 1.0) * kfb + 6.0) * (len - 1.0) /
          ((len - 2.0) * (len - 3.0));
    kpu = kfu + 3.0;
  }

  // Tukey hinges.
  const size_t half = (n + 1) / 2;
  const std::vector<double> lower(sorted.begin(), sorted.begin() + half);
  const std::vector<double> upper(sorted.end() - half, sorted.end());
  const double q1 = ref_median(lower);
  const double q3 = ref_median(upper);
  const double iqr = q3 - q1;
  const double qdisp = (q1 + q3) != 0.0 ? iqr / (q1 + q3) : 0.0;

  std::vector<double> admed;
  for (double v : x) admed.push_back(std::fabs(v - med));
  const double mad = ref_median(admed);
  double aad = 0.0;
  for (double v : x) aad += std::fabs(v - mean);
  aad /= len;

  const double cv = mean != 0.0 ? stdev / mean : 0.0;
  const double eff = mean != 0.0 ? variance / (mean * mean) : 0.0;
  const double vmr = mean != 0.0 ? variance / mean : 0.0;
  const double snr = variance > 0.0 ? mean * mean / variance : 0.0;

  double entropy = 0.0;
  {
    double total = 0.0;
    const double hshift = vmin < 0.0 ? -vmin : 0.0;
    for (double v : x) total += v + hshift;
    if (total > 0.0) {
      for (double v : x) {
        const double p = (v + hshift) / total;
        if (p > 0.0) entropy -= p * std::log2(p);
      }
    }
  }
  const double norm_entropy = n == 1 ? 1.0 : entropy / std::log2(len);

  double gini = 0.0;
  {
    double total = 0.0, acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
      total += sorted[i];
      acc += (2.0 * (i + 1) - len - 1.0) * sorted[i];
    }
    if (total != 0.0) gini = acc / (len * total);
  }

  auto below = [&](double b) {
    double c = 0;
    for (double v : x) c += v < b ? 1.0 : 0.0;
    return c;
  };
  auto above = [&](double b) {
    double c = 0;
    for (double v : x) c += v > b ? 1.0 : 0.0;
    return c;
  };

  std::vector<double> out = {vmin, vmax,  med,  geo,  harm, mean, stdev,
                             variance, skew, kpb,  kpu,  kfb,  kfu,  qdisp,
                             mad,  aad,   cv,   eff,  vmr,  snr,  entropy,
                             norm_entropy, gini, q1, q3, iqr};
  for (double a : {1.5, 3.0}) {
    out.push_back(q1 - a * iqr);
    out.push_back(q3 + a * iqr);
  }
  std::vector<double> counts;
  for (double a : {1.5, 3.0}) {
    const double lb = below(q1 - a * iqr);
    const double ub = above(q3 + a * iqr);
    counts.insert(counts.end(), {lb, ub, lb + ub});
  }
  for (double c : counts) out.push_back(c);
  for (double c : counts) out.push_back(c / len);
  counts.clear();
  for (int a = 1; a <= 3; ++a) {
    const double lb = below(mean - a * stdev);
    const double ub = above(mean + a * stdev);
    counts.insert(counts.end(), {lb, ub, lb + ub});
  }
  for (double c : counts) out.push_back(c);
  for (double c : counts) out.push_back(c / len);

  std::map<double, long> freq;
  for (double v : x) ++freq[ref_round8(v)];
  double mode = 0.0;
  long mode_count = 0;
  for (const auto& [value, count] : freq) {
    if (count > mode_count) {
      mode = value;
      mode_count = count;
    }
  }
  out.push_back(mode);
  out.push_back(static_cast<double>(mode_count));
  out.push_back(static_cast<double>(mode_count) / len);

  for (double& v : out)
    if (!std::isfinite(v)) v = 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Exhaustive induced-subgraph enumeration for graphlet orbits.

struct SubgraphCounts {
  Eigen::MatrixXd per_edge;  // kNumEdgeOrbits x m
  std::array<long long, gmsel::kNumGraphlets4> graphlets{};
  Eigen::VectorXd wedges, triangles;  // per node
  long long triangle_total = 0;
};

inline bool connected4(const bool a[4][4]) {
  bool seen[4] = {true, false, false, false};
  int stack[4] = {0}, top = 1;
  int count = 1;
  while (top) {
    const int v = stack[--top];
    for (int w = 0; w < 4; ++w) {
      if (a[v][w] && !seen[w]) {
        seen[w] = true;
        stack[top++] = w;
        ++count;
      }
    }
  }
  return count == 4;
}

inline SubgraphCounts enumerate_subgraphs(const gmsel::Graph& g) {
  using namespace gmsel;
  const int n = g.n;
  std::vector<std::vector<bool>> A(n, std::vector<bool>(n, false));
  for (const auto& [u, v] : g.edges) A[u][v] = A[v][u] = true;
  std::vector<int> deg(n, 0);
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (A[u][v]) ++deg[u];

  SubgraphCounts out;
  const int m = g.num_edges();
  out.per_edge = Eigen::MatrixXd::Zero(kNumEdgeOrbits, m);
  out.wedges.resize(n);
  out.triangles = Eigen::VectorXd::Zero(n);
  for (int v = 0; v < n; ++v)
    out.wedges[v] = deg[v] * (deg[v] - 1) / 2.0;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c)
        if (A[a][b] && A[b][c] && A[a][c]) {
          ++out.triangle_total;
          out.triangles[a] += 1;
          out.triangles[b] += 1;
          out.triangles[c] += 1;
        }

  for (int ei = 0; ei < m; ++ei) {
    const auto [u, v] = g.edges[ei];
    for (int w = 0; w < n; ++w) {
      if (w == u || w == v) continue;
      if (A[u][w] && A[v][w])
        out.per_edge(kTriangleEdge, ei) += 1;
      else if (A[u][w] || A[v][w])
        out.per_edge(kP3Edge, ei) += 1;
    }
    for (int w = 0; w < n; ++w) {
      if (w == u || w == v) continue;
      for (int x = w + 1; x < n; ++x) {
        if (x == u || x == v) continue;
        const int ids[4] = {u, v, w, x};
        bool a4[4][4] = {};
        int e = 0;
        for (int i = 0; i < 4; ++i)
          for (int j = i + 1; j < 4; ++j)
            if (A[ids[i]][ids[j]]) {
              a4[i][j] = a4[j][i] = true;
              ++e;
            }
        if (!connected4(a4)) continue;
        int d4[4] = {};
        for (int i = 0; i < 4; ++i)
          for (int j = 0; j < 4; ++j)
            if (a4[i][j]) ++d4[i];
        const int du = d4[0], dv = d4[1];
        const int dmax = *std::max_element(d4, d4 + 4);
        EdgeOrbit orbit;
        if (e == 3) {
          if (dmax == 3)
            orbit = kStar4Edge;
          else
            orbit = (du == 1 || dv == 1) ? kP4EndEdge : kP4MidEdge;
        } else if (e == 4) {
          if (dmax == 2)
            orbit = kC4Edge;
          else if (du == 1 || dv == 1)
            orbit = kTailedTriangleTail;
          else if (du == 2 && dv == 2)
            orbit = kTailedTriangleBase;
          else
            orbit = kTailedTriangleApex;
        } else if (e == 5) {
          orbit = (du == 3 && dv == 3) ? kDiamondChord : kDiamondCycle;
        } else {
          orbit = kK4Edge;
        }
        out.per_edge(orbit, ei) += 1;
      }
    }
  }

  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c)
        for (int d = c + 1; d < n; ++d) {
          const int ids[4] = {a, b, c, d};
          bool a4[4][4] = {};
          int e = 0;
          for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j)
              if (A[ids[i]][ids[j]]) {
                a4[i][j] = a4[j][i] = true;
                ++e;
              }
          if (!connected4(a4)) continue;
          int dmax = 0;
          for (int i = 0; i < 4; ++i) {
            int di = 0;
            for (int j = 0; j < 4; ++j)
              if (a4[i][j]) ++di;
            dmax = std::max(dmax, di);
          }
          if (e == 3)
            ++out.graphlets[dmax == 3 ? kStar4 : kPath4];
          else if (e == 4)
            ++out.graphlets[dmax == 2 ? kCycle4 : kTailedTriangle];
          else if (e == 5)
            ++out.graphlets[kDiamond];
          else
            ++out.graphlets[kClique4];
        }
  return out;
}

// ---------------------------------------------------------------------------
// Dense PageRank reference.

inline Eigen::VectorXd dense_pagerank(const gmsel::Graph& g, double damping,
                                      int iters = 2000) {
  const int n = g.n;
  std::vector<std::vector<int>> out_nbrs(n);
  for (const auto& [u, v] : g.edges) {
    out_nbrs[u].push_back(v);
    if (!g.directed) out_nbrs[v].push_back(u);
  }
  Eigen::VectorXd r = Eigen::VectorXd::Constant(n, 1.0 / n);
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(n);
    double dangling = 0.0;
    for (int u = 0; u < n; ++u) {
      if (out_nbrs[u].empty()) {
        dangling += r[u];
        continue;
      }
      for (int v : out_nbrs[u])
        next[v] += r[u] / static_cast<double>(out_nbrs[u].size());
    }
    Eigen::VectorXd updated =
        Eigen::VectorXd::Constant(
            n, (1.0 - damping) / n + damping * dangling / n) +
        damping * next;
    if ((updated - r).cwiseAbs().maxCoeff() < 1e-14) {
      r = updated;
      break;
    }
    r = updated;
  }
  return r / r.sum();
}

// ---------------------------------------------------------------------------
// Metric references.

inline double ref_top1_auc(const Eigen::VectorXd& s, Eigen::Index best) {
  double wins = 0.0;
  long pairs = 0;
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    if (j == best) continue;
    ++pairs;
    if (s[best] > s[j])
      wins += 1.0;
    else if (s[best] == s[j])
      wins += 0.5;
  }
  return wins / pairs;
}

inline double ref_mrr(const Eigen::VectorXd& s, Eigen::Index best) {
  // Average rank of the tie group containing `best`, computed by sorting.
  std::vector<double> desc(s.data(), s.data() + s.size());
  std::sort(desc.begin(), desc.end(), std::greater<double>());
  double first = 0, last = 0;
  for (size_t r = 0; r < desc.size(); ++r) {
    if (desc[r] == s[best]) {
      first = static_cast<double>(r + 1);
      break;
    }
  }
  for (size_t r = desc.size(); r-- > 0;) {
    if (desc[r] == s[best]) {
      last = static_cast<double>(r + 1);
      break;
    }
  }
  return 1.0 / ((first + last) / 2.0);
}

inline double ref_ndcg_at_1(const Eigen::VectorXd& s,
                            const Eigen::VectorXd& perfs) {
  double pmin = perfs[0], pmax = perfs[0];
  Eigen::Index top = 0;
  for (Eigen::Index j = 0; j < perfs.size(); ++j) {
    pmin = std::min(pmin, perfs[j]);
    pmax = std::max(pmax, perfs[j]);
    if (s[j] > s[top]) top = j;
  }
  if (pmax - pmin == 0.0) return 1.0;
  return (perfs[top] - pmin) / (pmax - pmin);
}

// ---------------------------------------------------------------------------
// Random graph and synthetic corpus generators.

inline gmsel::Graph random_er_graph(int n, double p, std::mt19937_64& rng,
                                    const std::string& id = "er") {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<gmsel::Edge> edges;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (u(rng) < p) edges.emplace_back(a, b);
  return gmsel::make_graph(n, std::move(edges), false, id);
}

/// Planted-cluster corpus: `clusters` groups of `per_cluster` graphs, each
/// cluster with its own best model; one globally strong decoy model that is
/// never the cluster best. Returns (M, P, cluster assignment).
struct PlantedCorpus {
  Eigen::MatrixXd M;
  gmsel::PerformanceMatrix P;
  std::vector<int> cluster;
  std::vector<gmsel::CatalogEntry> catalog;
};

inline PlantedCorpus planted_corpus(int clusters, int per_cluster,
                                    int n_models, std::uint64_t seed) {
  const int n = clusters * per_cluster;
  const int d = 10;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::normal_distribution<double> feat_noise(0.0, 0.5);

  PlantedCorpus out;
  out.M.resize(n, d);
  out.P.values.resize(n, n_models);
  out.P.mask = gmsel::Mask::Constant(n, n_models, true);
  const int decoy = n_models - 1;
  for (int i = 0; i < n; ++i) {
    const int c = i / per_cluster;
    out.cluster.push_back(c);
    for (int j = 0; j < d; ++j)
      out.M(i, j) = (j == c ? 10.0 : 0.0) + feat_noise(rng);
    for (int j = 0; j < n_models; ++j) {
      double base = 0.5;
      if (j == c) base += 0.3;       // planted cluster best
      if (j == decoy) base += 0.2;   // globally strong, never best
      out.P.values(i, j) = base + noise(rng);
    }
    out.P.graph_ids.push_back("g" + std::to_string(i));
    gmsel::CatalogEntry e;
    e.graph_id = out.P.graph_ids.back();
    e.name = e.graph_id;
    e.domain = "synthetic";
    e.n_nodes = 100;
    e.n_edges = 200;
    out.catalog.push_back(e);
  }
  for (int j = 0; j < n_models; ++j)
    out.P.model_ids.push_back("m" + std::to_string(j));
  return out;
}

}  // namespace oracle
