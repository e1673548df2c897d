#include "gmsel/testbeds.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <map>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace gmsel {

Testbed parse_testbed(const std::string& name) {
  if (name == "fully_observed") return Testbed::fully_observed;
  if (name == "sparse") return Testbed::sparse;
  if (name == "out_of_domain" || name == "ood") return Testbed::out_of_domain;
  if (name == "small_to_large") return Testbed::small_to_large;
  if (name == "cross_task") return Testbed::cross_task;
  throw DataError("unknown testbed: " + name);
}

std::string testbed_name(Testbed t) {
  switch (t) {
    case Testbed::fully_observed: return "fully_observed";
    case Testbed::sparse: return "sparse";
    case Testbed::out_of_domain: return "out_of_domain";
    case Testbed::small_to_large: return "small_to_large";
    case Testbed::cross_task: return "cross_task";
  }
  return "?";
}

TestbedSplit fully_observed_splits(const std::vector<CatalogEntry>& graphs,
                                   std::uint64_t seed) {
  if (graphs.size() < 5)
    throw DataError("fully_observed_splits: need at least 5 graphs");
  constexpr int kFolds = 5;
  TestbedSplit split;
  split.testbed = Testbed::fully_observed;
  split.seed = seed;
  split.folds.resize(kFolds);

  // Domains processed in sorted order so the split depends only on content.
  std::map<std::string, std::vector<std::string>> by_domain;
  for (const auto& g : graphs) by_domain[g.domain].push_back(g.graph_id);

  std::mt19937_64 rng(seed);
  int offset = 0;
  std::vector<std::vector<std::string>> test_sets(kFolds);
  for (auto& [domain, ids] : by_domain) {
    std::shuffle(ids.begin(), ids.end(), rng);
    for (size_t i = 0; i < ids.size(); ++i)
      test_sets[(offset + i) % kFolds].push_back(ids[i]);
    offset = (offset + static_cast<int>(ids.size())) % kFolds;
  }
  for (int f = 0; f < kFolds; ++f) {
    split.folds[f].test_ids = test_sets[f];
    for (int other = 0; other < kFolds; ++other) {
      if (other == f) continue;
      split.folds[f].train_ids.insert(split.folds[f].train_ids.end(),
                                      test_sets[other].begin(),
                                      test_sets[other].end());
    }
  }
  return split;
}

TestbedSplit sparse_testbed(const std::vector<CatalogEntry>& graphs,
                            const PerformanceMatrix& P, double p,
                            std::uint64_t seed) {
  TestbedSplit split = fully_observed_splits(graphs, seed);
  split.testbed = Testbed::sparse;
  split.params["p"] = csv::format_double(p);

  std::unordered_map<std::string, Eigen::Index> row_of;
  for (Eigen::Index i = 0; i < P.num_graphs(); ++i) row_of[P.graph_ids[i]] = i;

  for (size_t f = 0; f < split.folds.size(); ++f) {
    auto& fold = split.folds[f];
    PerformanceMatrix sub;
    sub.model_ids = P.model_ids;
    sub.graph_ids = fold.train_ids;
    const Eigen::Index rows = static_cast<Eigen::Index>(fold.train_ids.size());
    sub.values.resize(rows, P.num_models());
    sub.mask = Mask::Constant(rows, P.num_models(), true);
    for (Eigen::Index r = 0; r < rows; ++r) {
      auto it = row_of.find(fold.train_ids[r]);
      if (it == row_of.end())
        throw DataError("sparse_testbed: graph missing from P: " +
                        fold.train_ids[r]);
      if (!P.mask.row(it->second).all())
        throw DataError("sparse_testbed: training row not fully observed: " +
                        fold.train_ids[r]);
      sub.values.row(r) = P.values.row(it->second);
    }
    fold.train_mask =
        sparsify_rows(sub, p, seed + 1000 + static_cast<std::uint64_t>(f))
            .mask;
  }
  return split;
}

TestbedSplit out_of_domain_splits(const std::vector<CatalogEntry>& graphs,
                                  std::uint64_t seed) {
  std::map<std::string, std::vector<std::string>> by_domain;
  for (const auto& g : graphs) by_domain[g.domain].push_back(g.graph_id);
  if (by_domain.size() < 2)
    throw DataError("out_of_domain_splits: need at least 2 domains");

  std::vector<std::string> domains;
  for (const auto& [d, ids] : by_domain) domains.push_back(d);
  std::mt19937_64 rng(seed);
  std::shuffle(domains.begin(), domains.end(), rng);

  const int k = std::min<int>(5, static_cast<int>(domains.size()));
  TestbedSplit split;
  split.testbed = Testbed::out_of_domain;
  split.seed = seed;
  split.folds.resize(k);

  // Contiguous chunking, sizes differing by at most one.
  const size_t base = domains.size() / k;
  const size_t extra = domains.size() % k;
  size_t pos = 0;
  for (int f = 0; f < k; ++f) {
    const size_t take = base + (static_cast<size_t>(f) < extra ? 1 : 0);
    std::set<std::string> test_domains(domains.begin() + pos,
                                       domains.begin() + pos + take);
    pos += take;
    for (const auto& g : graphs) {
      if (test_domains.count(g.domain))
        split.folds[f].test_ids.push_back(g.graph_id);
      else
        split.folds[f].train_ids.push_back(g.graph_id);
    }
  }
  return split;
}

TestbedSplit small_to_large_split(const std::vector<CatalogEntry>& graphs,
                                  long epsilon) {
  TestbedSplit split;
  split.testbed = Testbed::small_to_large;
  split.params["epsilon"] = std::to_string(epsilon);
  split.folds.resize(1);
  for (const auto& g : graphs) {
    if (g.n_nodes < epsilon)
      split.folds[0].train_ids.push_back(g.graph_id);
    else
      split.folds[0].test_ids.push_back(g.graph_id);
  }
  if (split.folds[0].train_ids.empty() || split.folds[0].test_ids.empty())
    throw DataError("small_to_large_split: one side of the threshold is empty");
  return split;
}

CrossTaskResult cross_task_split(
    const std::vector<CatalogEntry>& source_graphs,
    const PerformanceMatrix& P_source,
    const std::vector<ModelConfig>& source_models,
    const std::vector<CatalogEntry>& target_graphs,
    const PerformanceMatrix& P_target,
    const std::vector<ModelConfig>& target_models) {
  std::unordered_map<std::string, Eigen::Index> target_by_key;
  for (size_t j = 0; j < target_models.size(); ++j)
    target_by_key[target_models[j].canonical_key()] =
        static_cast<Eigen::Index>(j);

  CrossTaskResult result;
  for (size_t j = 0; j < source_models.size(); ++j) {
    auto it = target_by_key.find(source_models[j].canonical_key());
    if (it == target_by_key.end()) continue;
    result.source_columns.push_back(static_cast<Eigen::Index>(j));
    result.target_columns.push_back(it->second);
  }
  if (result.source_columns.empty())
    throw DataError("cross_task_split: no shared models between catalogs");

  result.split.testbed = Testbed::cross_task;
  result.split.folds.resize(1);
  auto& fold = result.split.folds[0];
  std::unordered_set<std::string> source_ids;
  for (const auto& g : source_graphs) {
    fold.train_ids.push_back(g.graph_id);
    source_ids.insert(g.graph_id);
  }
  for (const auto& g : target_graphs) {
    if (!source_ids.count(g.graph_id))  // shared graphs would leak
      fold.test_ids.push_back(g.graph_id);
  }
  if (fold.test_ids.empty())
    throw DataError("cross_task_split: no target-only graphs to test");
  (void)P_source;
  (void)P_target;
  return result;
}

void save_testbed_split(const TestbedSplit& split,
                        const std::vector<std::string>& model_ids,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "fold,role,graph_id\n";
  bool any_mask = false;
  for (size_t f = 0; f < split.folds.size(); ++f) {
    for (const auto& id : split.folds[f].train_ids)
      out << f << ",train," << id << '\n';
    for (const auto& id : split.folds[f].test_ids)
      out << f << ",test," << id << '\n';
    if (split.folds[f].train_mask) any_mask = true;
  }
  if (any_mask) {
    std::ofstream mout(path + ".mask.csv");
    mout << "fold,graph_id,model_id\n";
    for (size_t f = 0; f < split.folds.size(); ++f) {
      const auto& fold = split.folds[f];
      if (!fold.train_mask) continue;
      for (Eigen::Index r = 0; r < fold.train_mask->rows(); ++r)
        for (Eigen::Index c = 0; c < fold.train_mask->cols(); ++c)
          if ((*fold.train_mask)(r, c))
            mout << f << ',' << fold.train_ids[r] << ',' << model_ids[c]
                 << '\n';
    }
  }
  nlohmann::json meta = {{"testbed", testbed_name(split.testbed)},
                         {"seed", split.seed},
                         {"params", split.params}};
  std::ofstream side(path + ".meta.json");
  side << meta.dump(2) << '\n';
}

TestbedSplit load_testbed_split(const std::string& path,
                                const std::vector<std::string>& model_ids) {
  TestbedSplit split;
  {
    std::ifstream side(path + ".meta.json");
    if (side) {
      nlohmann::json meta;
      side >> meta;
      split.testbed = parse_testbed(meta.value("testbed", "fully_observed"));
      split.seed = meta.value("seed", 0ULL);
      split.params =
          meta.value("params", std::map<std::string, std::string>{});
    }
  }
  for (const auto& row : csv::read_file(path)) {
    if (row[0] == "fold") continue;
    const size_t f = std::stoul(row[0]);
    if (f >= split.folds.size()) split.folds.resize(f + 1);
    if (row[1] == "train")
      split.folds[f].train_ids.push_back(row[2]);
    else if (row[1] == "test")
      split.folds[f].test_ids.push_back(row[2]);
    else
      throw DataError(path + ": unknown role " + row[1]);
  }
  std::ifstream mask_file(path + ".mask.csv");
  if (mask_file) {
    std::unordered_map<std::string, Eigen::Index> col_of;
    for (size_t j = 0; j < model_ids.size(); ++j)
      col_of[model_ids[j]] = static_cast<Eigen::Index>(j);
    for (auto& fold : split.folds) {
      fold.train_mask =
          Mask::Constant(static_cast<Eigen::Index>(fold.train_ids.size()),
                         static_cast<Eigen::Index>(model_ids.size()), false);
    }
    std::string line;
    std::getline(mask_file, line);  // header
    while (std::getline(mask_file, line)) {
      if (line.empty()) continue;
      const auto row = csv::split_line(line);
      const size_t f = std::stoul(row[0]);
      auto& fold = split.folds.at(f);
      const auto it =
          std::find(fold.train_ids.begin(), fold.train_ids.end(), row[1]);
      if (it == fold.train_ids.end() || !col_of.count(row[2]))
        throw DataError(path + ".mask.csv: unknown graph or model id");
      (*fold.train_mask)(it - fold.train_ids.begin(), col_of[row[2]]) = true;
    }
  }
  return split;
}

}  // namespace gmsel
