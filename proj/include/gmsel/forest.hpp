#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace gmsel {

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 10;
  int min_samples_split = 2;
  bool bootstrap = true;
  /// Features tried per split; -1 means round(sqrt(d)).
  int max_features = -1;
  std::uint64_t seed = 0;
};

/// Multi-output regression forest (variance-reduction splits, mean leaves).
class RandomForest {
 public:
  struct Node {
    int feature = -1;  // -1 = leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    Eigen::VectorXd value;  // leaf mean (empty for internal nodes)
  };

  void fit(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
           const ForestConfig& config);
  Eigen::VectorXd predict(const Eigen::VectorXd& x) const;

  bool trained() const { return !trees_.empty(); }
  int output_dim() const { return output_dim_; }

  /// Preorder node list per tree: rows `tree,node,feature,threshold,left,
  /// right,value...` for round-tripping through CSV bundles.
  std::vector<std::string> serialize() const;
  static RandomForest deserialize(const std::vector<std::string>& rows);

 private:
  std::vector<std::vector<Node>> trees_;
  int output_dim_ = 0;
};

}  // namespace gmsel
