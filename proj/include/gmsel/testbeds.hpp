#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gmsel/graph.hpp"
#include "gmsel/perf.hpp"

namespace gmsel {

enum class Testbed {
  fully_observed,
  sparse,
  out_of_domain,
  small_to_large,
  cross_task,
};

Testbed parse_testbed(const std::string& name);
std::string testbed_name(Testbed t);

struct Fold {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  /// Sparse testbed: observation mask restricted to training rows, aligned
  /// with train_ids x model_ids. Test rows are never masked.
  std::optional<Mask> train_mask;
};

struct TestbedSplit {
  Testbed testbed = Testbed::fully_observed;
  std::vector<Fold> folds;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> params;
};

/// Domain-stratified 5-fold cross validation: per domain, graphs are
/// shuffled under the seed and dealt round-robin, so every graph is tested
/// exactly once and per-domain fold sizes differ by at most one.
TestbedSplit fully_observed_splits(const std::vector<CatalogEntry>& graphs,
                                   std::uint64_t seed);

/// Same folds as fully_observed; each fold carries a train mask produced by
/// sparsify_rows(p) over the training rows of P.
TestbedSplit sparse_testbed(const std::vector<CatalogEntry>& graphs,
                            const PerformanceMatrix& P, double p,
                            std::uint64_t seed);

/// Group 5-fold over domains: domains shuffled under seed and chunked into
/// 5 groups with sizes differing by at most one; fold i tests group i.
TestbedSplit out_of_domain_splits(const std::vector<CatalogEntry>& graphs,
                                  std::uint64_t seed);

/// Single fold: train = graphs with fewer than epsilon nodes, test = the
/// rest.
TestbedSplit small_to_large_split(const std::vector<CatalogEntry>& graphs,
                                  long epsilon = 10000);

struct CrossTaskResult {
  TestbedSplit split;
  /// Shared model columns, as indices into the source and target catalogs.
  std::vector<Eigen::Index> source_columns;
  std::vector<Eigen::Index> target_columns;
};

/// Single fold: train on all source graphs, test on target graphs not
/// present in the source task, over the models shared by both catalogs
/// (matched by method + canonical hyperparameters).
CrossTaskResult cross_task_split(
    const std::vector<CatalogEntry>& source_graphs,
    const PerformanceMatrix& P_source,
    const std::vector<ModelConfig>& source_models,
    const std::vector<CatalogEntry>& target_graphs,
    const PerformanceMatrix& P_target,
    const std::vector<ModelConfig>& target_models);

/// Split files: CSV `fold,role,graph_id`, and when any fold carries a train
/// mask an extra file `<path>.mask.csv` of observed cells
/// `fold,graph_id,model_id`.
void save_testbed_split(const TestbedSplit& split,
                        const std::vector<std::string>& model_ids,
                        const std::string& path);
TestbedSplit load_testbed_split(const std::string& path,
                                const std::vector<std::string>& model_ids);

}  // namespace gmsel
