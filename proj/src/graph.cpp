#include "gmsel/graph.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace gmsel {

namespace {

Edge canonical(int u, int v, bool directed) {
  if (!directed && u > v) std::swap(u, v);
  return {u, v};
}

std::vector<Edge> dedupe(std::vector<Edge> edges, bool directed) {
  for (auto& e : edges) e = canonical(e.first, e.second, directed);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  std::erase_if(edges, [](const Edge& e) { return e.first == e.second; });
  return edges;
}

}  // namespace

std::vector<std::vector<int>> Graph::adjacency() const {
  std::vector<std::vector<int>> adj(n);
  for (const auto& [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  for (auto& nbrs : adj) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  return adj;
}

Graph load_edge_list(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge list: " + path);

  Graph g;
  g.directed = options.directed;
  std::unordered_map<long, int> index_of;
  std::vector<Edge> raw;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == options.comment_prefix) continue;
    std::istringstream ss(line);
    long a, b;
    if (!(ss >> a >> b)) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected two integer node ids");
    }
    auto index = [&](long raw_id) {
      auto [it, inserted] = index_of.emplace(raw_id, (int)index_of.size());
      return it->second;
    };
    int u = index(a);
    int v = index(b);
    raw.emplace_back(u, v);
  }
  g.n = static_cast<int>(index_of.size());
  g.edges = dedupe(std::move(raw), g.directed);
  if (g.edges.empty()) throw DataError(path + ": empty graph (no edges)");
  return g;
}

Graph make_graph(int n, std::vector<Edge> edges, bool directed,
                 std::string id) {
  Graph g;
  g.id = std::move(id);
  g.n = n;
  g.directed = directed;
  g.edges = dedupe(std::move(edges), directed);
  for (const auto& [u, v] : g.edges) {
    if (u < 0 || u >= n || v < 0 || v >= n)
      throw DataError("edge index out of range");
  }
  return g;
}

void load_node_labels(Graph& g, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label file: " + path);
  std::vector<int> labels(g.n, 0);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    long idx, lab;
    if (!(ss >> idx >> lab) || idx < 0 || idx >= g.n || lab < 0) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": bad label line");
    }
    labels[idx] = static_cast<int>(lab);
  }
  g.node_labels = std::move(labels);
}

Graph symmetrize(const Graph& g) {
  if (!g.directed) return g;
  Graph out = g;
  out.directed = false;
  out.edges = dedupe(g.edges, /*directed=*/false);
  return out;
}

NodeSplit generate_node_split(const Graph& g, std::uint64_t seed) {
  if (g.n < 5) throw DataError("node split requires n >= 5");
  std::vector<int> perm(g.n);
  for (int i = 0; i < g.n; ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  const int n_train = static_cast<int>(0.64 * g.n);
  const int n_val = static_cast<int>(0.16 * g.n);
  NodeSplit s;
  s.seed = seed;
  s.train.assign(perm.begin(), perm.begin() + n_train);
  s.val.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  s.test.assign(perm.begin() + n_train + n_val, perm.end());
  return s;
}

EdgeSplit generate_edge_split(const Graph& g, std::uint64_t seed) {
  const long m = g.num_edges();
  if (m < 5) throw DataError("edge split requires m >= 5");

  std::mt19937_64 rng(seed);
  std::vector<Edge> perm = g.edges;
  std::shuffle(perm.begin(), perm.end(), rng);

  const long n_train = static_cast<long>(0.64 * m);
  const long n_val = static_cast<long>(0.16 * m);
  EdgeSplit s;
  s.seed = seed;
  s.pos_train.assign(perm.begin(), perm.begin() + n_train);
  s.pos_val.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  s.pos_test.assign(perm.begin() + n_train + n_val, perm.end());

  const long n = g.n;
  const long max_pairs = g.directed ? n * (n - 1) : n * (n - 1) / 2;
  const long num_non_edges = max_pairs - m;
  if (num_non_edges < m)
    throw DataError("not enough non-edges to sample negatives");

  std::set<Edge> existing(g.edges.begin(), g.edges.end());
  std::vector<Edge> negatives;
  negatives.reserve(m);
  const double density = static_cast<double>(m) / std::max(max_pairs, 1L);
  if (density > 0.4) {
    // Dense graph: enumerate non-edges and sample without replacement.
    std::vector<Edge> pool;
    pool.reserve(num_non_edges);
    for (int u = 0; u < n; ++u) {
      for (int v = g.directed ? 0 : u + 1; v < n; ++v) {
        if (u == v) continue;
        Edge e{u, v};
        if (!existing.count(e)) pool.push_back(e);
      }
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    negatives.assign(pool.begin(), pool.begin() + m);
  } else {
    std::set<Edge> seen;
    std::uniform_int_distribution<int> pick(0, g.n - 1);
    while (static_cast<long>(negatives.size()) < m) {
      int u = pick(rng);
      int v = pick(rng);
      if (u == v) continue;
      Edge e = canonical(u, v, g.directed);
      if (existing.count(e) || seen.count(e)) continue;
      seen.insert(e);
      negatives.push_back(e);
    }
  }
  s.neg_train.assign(negatives.begin(), negatives.begin() + n_train);
  s.neg_val.assign(negatives.begin() + n_train,
                   negatives.begin() + n_train + n_val);
  s.neg_test.assign(negatives.begin() + n_train + n_val, negatives.end());
  return s;
}

namespace {

void write_index_rows(std::ofstream& out, const std::string& role,
                      const std::vector<int>& idx) {
  for (int i : idx) out << role << ',' << i << '\n';
}

void write_edge_rows(std::ofstream& out, const std::string& role,
                     const std::vector<Edge>& edges) {
  for (const auto& [u, v] : edges) out << role << ',' << u << ',' << v << '\n';
}

}  // namespace

void save_node_split(const NodeSplit& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "role,node\n";
  out << "seed," << s.seed << '\n';
  write_index_rows(out, "train", s.train);
  write_index_rows(out, "val", s.val);
  write_index_rows(out, "test", s.test);
}

NodeSplit load_node_split(const std::string& path) {
  NodeSplit s;
  for (const auto& row : csv::read_file(path)) {
    if (row[0] == "role") continue;
    if (row[0] == "seed") {
      s.seed = std::stoull(row[1]);
      continue;
    }
    int v = std::stoi(row[1]);
    if (row[0] == "train")
      s.train.push_back(v);
    else if (row[0] == "val")
      s.val.push_back(v);
    else if (row[0] == "test")
      s.test.push_back(v);
    else
      throw DataError(path + ": unknown split role " + row[0]);
  }
  return s;
}

void save_edge_split(const EdgeSplit& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "role,u,v\n";
  out << "seed," << s.seed << ",0\n";
  write_edge_rows(out, "pos_train", s.pos_train);
  write_edge_rows(out, "pos_val", s.pos_val);
  write_edge_rows(out, "pos_test", s.pos_test);
  write_edge_rows(out, "neg_train", s.neg_train);
  write_edge_rows(out, "neg_val", s.neg_val);
  write_edge_rows(out, "neg_test", s.neg_test);
}

EdgeSplit load_edge_split(const std::string& path) {
  EdgeSplit s;
  for (const auto& row : csv::read_file(path)) {
    if (row[0] == "role") continue;
    if (row[0] == "seed") {
      s.seed = std::stoull(row[1]);
      continue;
    }
    Edge e{std::stoi(row[1]), std::stoi(row[2])};
    if (row[0] == "pos_train")
      s.pos_train.push_back(e);
    else if (row[0] == "pos_val")
      s.pos_val.push_back(e);
    else if (row[0] == "pos_test")
      s.pos_test.push_back(e);
    else if (row[0] == "neg_train")
      s.neg_train.push_back(e);
    else if (row[0] == "neg_val")
      s.neg_val.push_back(e);
    else if (row[0] == "neg_test")
      s.neg_test.push_back(e);
    else
      throw DataError(path + ": unknown split role " + row[0]);
  }
  return s;
}

std::vector<CatalogEntry> load_graph_catalog(const std::string& path) {
  auto rows = csv::read_file(path);
  if (rows.empty() || rows[0].size() < 6 || rows[0][0] != "graph_id")
    throw DataError(path + ": expected graph catalog header");
  std::vector<CatalogEntry> entries;
  std::unordered_set<std::string> seen;
  for (size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() < 6)
      throw DataError(path + ": catalog row " + std::to_string(i) +
                      " has too few fields");
    CatalogEntry e;
    e.graph_id = r[0];
    e.name = r[1];
    e.domain = r[2];
    e.n_nodes = std::stol(r[3]);
    e.n_edges = std::stol(r[4]);
    e.has_labels = (r[5] == "1" || r[5] == "true");
    if (!seen.insert(e.graph_id).second)
      throw DataError(path + ": duplicate graph_id " + e.graph_id);
    entries.push_back(std::move(e));
  }
  return entries;
}

void save_graph_catalog(const std::vector<CatalogEntry>& entries,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "graph_id,name,domain,n_nodes,n_edges,has_labels\n";
  for (const auto& e : entries) {
    out << e.graph_id << ',' << e.name << ',' << e.domain << ',' << e.n_nodes
        << ',' << e.n_edges << ',' << (e.has_labels ? 1 : 0) << '\n';
  }
}

}  // namespace gmsel
