#include "gmsel/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "gmsel/csv.hpp"

namespace gmsel {

namespace {

struct TreeBuilder {
  const Eigen::MatrixXd& X;
  const Eigen::MatrixXd& Y;
  const ForestConfig& cfg;
  int max_features;
  std::mt19937_64& rng;
  std::vector<RandomForest::Node>& nodes;

  Eigen::VectorXd mean_of(const std::vector<int>& idx) const {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(Y.cols());
    for (int i : idx) mean += Y.row(i);
    return mean / static_cast<double>(idx.size());
  }

  double sse_of(const std::vector<int>& idx) const {
    const Eigen::VectorXd mean = mean_of(idx);
    double sse = 0.0;
    for (int i : idx) sse += (Y.row(i).transpose() - mean).squaredNorm();
    return sse;
  }

  int build(std::vector<int> idx, int depth) {
    const int node_id = static_cast<int>(nodes.size());
    nodes.emplace_back();

    const Eigen::VectorXd mean = mean_of(idx);
    bool pure = true;
    for (int i : idx) {
      if ((Y.row(i).transpose() - mean).squaredNorm() > 1e-24) {
        pure = false;
        break;
      }
    }
    if (pure || depth >= cfg.max_depth ||
        static_cast<int>(idx.size()) < cfg.min_samples_split) {
      nodes[node_id].value = mean;
      return node_id;
    }

    // Pick the best (feature, threshold) among a random feature subset.
    std::vector<int> features(X.cols());
    std::iota(features.begin(), features.end(), 0);
    std::shuffle(features.begin(), features.end(), rng);
    features.resize(std::min<size_t>(max_features, features.size()));

    const double parent_sse = sse_of(idx);
    double best_gain = 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;

    std::vector<int> order = idx;
    for (int f : features) {
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        return X(a, f) < X(b, f);
      });
      // Prefix scan of sums and squared norms for O(n) threshold search.
      Eigen::VectorXd left_sum = Eigen::VectorXd::Zero(Y.cols());
      double left_sq = 0.0;
      Eigen::VectorXd total_sum = Eigen::VectorXd::Zero(Y.cols());
      double total_sq = 0.0;
      for (int i : order) {
        total_sum += Y.row(i);
        total_sq += Y.row(i).squaredNorm();
      }
      const double n_total = static_cast<double>(order.size());
      for (size_t s = 0; s + 1 < order.size(); ++s) {
        left_sum += Y.row(order[s]);
        left_sq += Y.row(order[s]).squaredNorm();
        if (X(order[s], f) == X(order[s + 1], f)) continue;
        const double nl = static_cast<double>(s + 1);
        const double nr = n_total - nl;
        const double sse_l = left_sq - left_sum.squaredNorm() / nl;
        const Eigen::VectorXd right_sum = total_sum - left_sum;
        const double sse_r =
            (total_sq - left_sq) - right_sum.squaredNorm() / nr;
        const double gain = parent_sse - sse_l - sse_r;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          best_threshold = 0.5 * (X(order[s], f) + X(order[s + 1], f));
        }
      }
    }

    if (best_feature < 0) {
      nodes[node_id].value = mean;
      return node_id;
    }

    std::vector<int> left_idx, right_idx;
    for (int i : idx) {
      (X(i, best_feature) <= best_threshold ? left_idx : right_idx)
          .push_back(i);
    }
    if (left_idx.empty() || right_idx.empty()) {
      nodes[node_id].value = mean;
      return node_id;
    }
    nodes[node_id].feature = best_feature;
    nodes[node_id].threshold = best_threshold;
    nodes[node_id].left = build(std::move(left_idx), depth + 1);
    nodes[node_id].right = build(std::move(right_idx), depth + 1);
    return node_id;
  }
};

}  // namespace

void RandomForest::fit(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                       const ForestConfig& config) {
  if (X.rows() != Y.rows() || X.rows() == 0)
    throw std::invalid_argument("forest: bad training shapes");
  output_dim_ = static_cast<int>(Y.cols());
  trees_.clear();
  std::mt19937_64 rng(config.seed);
  const int d = static_cast<int>(X.cols());
  int max_features = config.max_features > 0
                         ? std::min(config.max_features, d)
                         : std::max(1, (int)std::lround(std::sqrt(d)));

  std::uniform_int_distribution<int> pick(0, static_cast<int>(X.rows()) - 1);
  for (int t = 0; t < config.n_trees; ++t) {
    std::vector<int> idx;
    idx.reserve(X.rows());
    if (config.bootstrap) {
      for (Eigen::Index i = 0; i < X.rows(); ++i) idx.push_back(pick(rng));
    } else {
      for (Eigen::Index i = 0; i < X.rows(); ++i)
        idx.push_back(static_cast<int>(i));
    }
    trees_.emplace_back();
    TreeBuilder builder{X, Y, config, max_features, rng, trees_.back()};
    builder.build(std::move(idx), 0);
  }
}

Eigen::VectorXd RandomForest::predict(const Eigen::VectorXd& x) const {
  if (trees_.empty()) throw std::logic_error("forest: not fitted");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(output_dim_);
  for (const auto& tree : trees_) {
    int cur = 0;
    while (tree[cur].feature >= 0) {
      cur = x[tree[cur].feature] <= tree[cur].threshold ? tree[cur].left
                                                        : tree[cur].right;
    }
    out += tree[cur].value;
  }
  return out / static_cast<double>(trees_.size());
}

std::vector<std::string> RandomForest::serialize() const {
  std::vector<std::string> rows;
  rows.push_back("tree,node,feature,threshold,left,right,value");
  for (size_t t = 0; t < trees_.size(); ++t) {
    for (size_t i = 0; i < trees_[t].size(); ++i) {
      const Node& nd = trees_[t][i];
      std::ostringstream ss;
      ss << t << ',' << i << ',' << nd.feature << ','
         << csv::format_double(nd.threshold) << ',' << nd.left << ','
         << nd.right;
      for (Eigen::Index j = 0; j < nd.value.size(); ++j)
        ss << (j == 0 ? ',' : ';') << csv::format_double(nd.value[j]);
      rows.push_back(ss.str());
    }
  }
  return rows;
}

RandomForest RandomForest::deserialize(const std::vector<std::string>& rows) {
  RandomForest forest;
  for (size_t r = 1; r < rows.size(); ++r) {
    const auto fields = csv::split_line(rows[r]);
    if (fields.size() < 6) throw DataError("forest: bad node row");
    const size_t tree = std::stoul(fields[0]);
    if (tree >= forest.trees_.size()) forest.trees_.resize(tree + 1);
    Node nd;
    nd.feature = std::stoi(fields[2]);
    nd.threshold = std::stod(fields[3]);
    nd.left = std::stoi(fields[4]);
    nd.right = std::stoi(fields[5]);
    if (fields.size() > 6 && !fields[6].empty()) {
      std::vector<double> vals;
      std::istringstream ss(fields[6]);
      std::string tok;
      while (std::getline(ss, tok, ';')) vals.push_back(std::stod(tok));
      nd.value = Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
      forest.output_dim_ = static_cast<int>(vals.size());
    }
    forest.trees_[tree].push_back(std::move(nd));
  }
  return forest;
}

}  // namespace gmsel
