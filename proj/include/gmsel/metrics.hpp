#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "gmsel/selectors.hpp"
#include "gmsel/testbeds.hpp"

namespace gmsel {

/// Rank-based AUC of the one-vs-rest problem labeling only `best_index`
/// positive. Ties contribute half a pair.
double top1_auc(const Eigen::VectorXd& scores, Eigen::Index best_index);

/// Reciprocal rank of `best_index` with scores sorted descending; tied
/// scores receive the average rank of their tie group. With one positive
/// label per query, MAP computes the same quantity, so both names report
/// this value.
double mrr(const Eigen::VectorXd& scores, Eigen::Index best_index);

/// NDCG@1: relevance = perfs shifted by -min(perfs); the relevance of the
/// predicted top model divided by the maximum relevance, 1.0 when every
/// model performs identically.
double ndcg_at_1(const Eigen::VectorXd& scores, const Eigen::VectorXd& perfs);

/// Index of the true best model: lowest index attaining max(perfs).
Eigen::Index best_model_index(const Eigen::VectorXd& perfs);

struct FoldMetrics {
  int fold = 0;
  long count = 0;  // test graphs in the fold
  double auc = 0.0;
  double mrr = 0.0;
  double map = 0.0;
  double ndcg1 = 0.0;
};

struct EvaluationReport {
  std::string testbed;
  std::string algorithm;
  std::vector<FoldMetrics> folds;
  long count = 0;  // test graphs overall
  // Means over all test graphs, with standard error = sample stdev / sqrt(n).
  double mean_auc = 0.0, se_auc = 0.0;
  double mean_mrr = 0.0, se_mrr = 0.0;
  double mean_map = 0.0, se_map = 0.0;
  double mean_ndcg1 = 0.0, se_ndcg1 = 0.0;
};

/// Runs one algorithm through every fold of a testbed split: fit on the
/// training rows (honoring the fold's train mask if present), predict each
/// test graph, score against its fully observed performance row.
/// `M` is the meta-feature matrix aligned row-wise with `P.graph_ids`.
/// `jobs` bounds the number of folds trained in parallel; aggregation order
/// is fixed, so results do not depend on it.
EvaluationReport evaluate(const TestbedSplit& split,
                          const PerformanceMatrix& P,
                          const Eigen::MatrixXd& M, Algorithm algorithm,
                          const SelectorConfig& config = {},
                          std::uint64_t seed = 0, int jobs = 1);

/// Report CSV: `testbed,algorithm,metric,fold,value` with per-fold rows
/// followed by `mean` and `stderr` aggregate rows per metric, plus `count`
/// rows (per fold and `total`) recording test-graph counts.
void save_report_csv(const std::vector<EvaluationReport>& reports,
                     const std::string& path);
std::vector<EvaluationReport> load_report_csv(const std::string& path);

/// Markdown table, one row per (testbed, algorithm), cells "mean (se)".
std::string report_markdown(const std::vector<EvaluationReport>& reports);

}  // namespace gmsel
