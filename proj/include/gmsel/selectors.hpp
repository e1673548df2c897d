#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gmsel/autodiff.hpp"
#include "gmsel/forest.hpp"
#include "gmsel/perf.hpp"

namespace gmsel {

/// The ten instantaneous model-selection algorithms.
enum class Algorithm {
  random_selection,
  gb_avgperf,
  gb_avgrank,
  isac,
  argosmart,
  s2,
  alors,
  ncf,
  metaod,
  metagl_lite,
};

Algorithm parse_algorithm(const std::string& name);
std::string algorithm_name(Algorithm a);
const std::vector<Algorithm>& all_algorithms();

/// Sentinel score for models never observed anywhere in the corpus: finite
/// (predict must not emit non-finite scores) but ranked last.
inline constexpr double kUnobservedScore =
    -std::numeric_limits<double>::max();

/// Meta-training corpus: meta-features aligned row-wise with performances.
struct TrainCorpus {
  Eigen::MatrixXd M;  // n x d meta-feature matrix
  PerformanceMatrix P;
  std::vector<ModelConfig> catalog;  // optional, may be empty

  void check() const;
};

/// String key/value hyperparameter map with typed accessors. Unset keys
/// fall back to per-algorithm defaults.
struct SelectorConfig {
  std::map<std::string, std::string> entries;

  double get(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::string get_str(const std::string& key,
                      const std::string& fallback) const;
  void set(const std::string& key, const std::string& value) {
    entries[key] = value;
  }
};

/// A fitted selector. predict() is pure and thread-safe; scores are an
/// m-vector, higher = better, selection = argmax.
class SelectorModel {
 public:
  Algorithm algorithm = Algorithm::random_selection;
  SelectorConfig config;
  std::uint64_t seed = 0;

  Eigen::VectorXd predict(const Eigen::VectorXd& query) const;

  Eigen::Index num_models() const { return model_ids_.size(); }
  const std::vector<std::string>& model_ids() const { return model_ids_; }

  void save(const std::string& dir) const;
  static SelectorModel load(const std::string& dir);

  /// Learned payload. Which fields are populated depends on the algorithm.
  struct State {
    std::vector<std::string> model_ids;
    Eigen::VectorXd feature_mean, feature_std;  // z-scoring statistics
    std::vector<bool> column_observed;          // any observation per model

    Eigen::VectorXd global_scores;    // GB-AvgPerf / GB-AvgRank / fallback
    Eigen::MatrixXd centroids;        // ISAC
    Eigen::MatrixXd cluster_scores;   // ISAC: k x m
    Eigen::MatrixXd train_features;   // AS (raw), MetaGL (z-scored)
    Eigen::MatrixXd train_rows;       // AS: imputed performance rows
    std::vector<ad::Parameter> params;  // network weights
    Eigen::MatrixXd factors_v;        // ALORS / MetaOD / NCF model factors
    double value_shift = 0.0;         // ALORS nonnegativity shift
    RandomForest forest;              // MetaOD
    Eigen::MatrixXd graph_embeddings;  // MetaGL-lite
    Eigen::MatrixXd model_embeddings;  // MetaGL-lite
  };

  State state;

 private:
  std::vector<std::string> model_ids_;
  friend SelectorModel fit_selector(Algorithm, const TrainCorpus&,
                                    const SelectorConfig&, std::uint64_t);
};

/// Fits the given algorithm on the corpus. Deterministic for fixed
/// (corpus, config, seed). Gradient-trained algorithms throw DataError
/// naming the epoch if the loss becomes non-finite.
SelectorModel fit_selector(Algorithm algorithm, const TrainCorpus& corpus,
                           const SelectorConfig& config = {},
                           std::uint64_t seed = 0);

/// Softmax of a score vector: the predicted top-1 probability per model.
Eigen::VectorXd top1_probabilities(const Eigen::VectorXd& scores);

/// Indices of the (at most k) nearest neighbors of row `i` of X by cosine
/// similarity, excluding `i` itself; ties broken by lowest index. An
/// all-zero vector has cosine 0 against everything.
std::vector<int> top_cosine_neighbors(const Eigen::MatrixXd& X, int i,
                                      int k);

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace gmsel
