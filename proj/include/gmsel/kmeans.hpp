#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace gmsel {

struct KMeansResult {
  Eigen::MatrixXd centroids;     // k x d
  std::vector<int> assignments;  // size n
  double inertia = 0.0;
  std::vector<double> inertia_trace;  // one entry per Lloyd iteration
};

/// Lloyd's algorithm with k-means++ initialization. Empty clusters are
/// reseeded to the point farthest from its centroid. Inertia is monotone
/// non-increasing across iterations.
KMeansResult kmeans(const Eigen::MatrixXd& X, int k, std::uint64_t seed,
                    int max_iter = 100);

/// Index of the centroid nearest to `x` (Euclidean, lowest index on ties).
int nearest_centroid(const Eigen::MatrixXd& centroids,
                     const Eigen::VectorXd& x);

}  // namespace gmsel
