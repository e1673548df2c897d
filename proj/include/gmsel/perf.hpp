#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gmsel/csv.hpp"

namespace gmsel {

using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Observed model performances over a set of graphs. Immutable by
/// convention after load; transformations return new values.
struct PerformanceMatrix {
  Eigen::MatrixXd values;  // n graphs x m models
  Mask mask;               // true = observed
  std::vector<std::string> graph_ids;
  std::vector<std::string> model_ids;
  std::string metric;  // e.g. map, auc, ndcg
  std::string task;    // link_prediction | node_classification

  Eigen::Index num_graphs() const { return values.rows(); }
  Eigen::Index num_models() const { return values.cols(); }

  void check() const;
};

/// A graph-learning model identity: method plus hyperparameter settings.
struct ModelConfig {
  std::string model_id;
  std::string method;
  std::map<std::string, std::string> hyperparameters;  // ordered keys

  /// Canonical key used to match models across catalogs.
  std::string canonical_key() const;
};

/// CSV with header `graph_id,<model_id>,...`; empty cells are unobserved.
PerformanceMatrix load_performance_matrix(const std::string& path);
void save_performance_matrix(const PerformanceMatrix& P,
                             const std::string& path);

/// Model catalog CSV `model_id,method,hyperparams_json` (sorted-key JSON
/// written with ';' instead of ',' so rows stay comma-splittable).
std::vector<ModelConfig> load_model_catalog(const std::string& path);
void save_model_catalog(const std::vector<ModelConfig>& models,
                        const std::string& path);

/// Keeps exactly max(1, round(p*m)) observed entries per row, sampled
/// uniformly without replacement. Rows must be fully observed.
PerformanceMatrix sparsify_rows(const PerformanceMatrix& P, double p,
                                std::uint64_t seed);

}  // namespace gmsel
