#include "gmsel/kmeans.hpp"

#include <limits>
#include <random>
#include <stdexcept>

namespace gmsel {

int nearest_centroid(const Eigen::MatrixXd& centroids,
                     const Eigen::VectorXd& x) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = (centroids.row(c).transpose() - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

KMeansResult kmeans(const Eigen::MatrixXd& X, int k, std::uint64_t seed,
                    int max_iter) {
  const Eigen::Index n = X.rows();
  if (k < 1 || n < k) throw std::invalid_argument("kmeans: need n >= k >= 1");

  std::mt19937_64 rng(seed);
  Eigen::MatrixXd centroids(k, X.cols());

  // k-means++ seeding.
  {
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    std::vector<bool> used(n, false);
    const Eigen::Index first = pick(rng);
    used[first] = true;
    centroids.row(0) = X.row(first);
    Eigen::VectorXd dist2(n);
    for (Eigen::Index i = 0; i < n; ++i)
      dist2[i] = (X.row(i) - centroids.row(0)).squaredNorm();
    for (int c = 1; c < k; ++c) {
      const double total = dist2.sum();
      Eigen::Index chosen = 0;
      if (total > 0.0) {
        std::uniform_real_distribution<double> u(0.0, total);
        double r = u(rng);
        for (Eigen::Index i = 0; i < n; ++i) {
          r -= dist2[i];
          if (r <= 0.0) {
            chosen = i;
            break;
          }
        }
      } else {
        // All remaining distances are zero; take any unused point.
        while (used[chosen] && chosen + 1 < n) ++chosen;
      }
      used[chosen] = true;
      centroids.row(c) = X.row(chosen);
      for (Eigen::Index i = 0; i < n; ++i)
        dist2[i] =
            std::min(dist2[i], (X.row(i) - centroids.row(c)).squaredNorm());
    }
  }

  KMeansResult result;
  result.assignments.assign(n, 0);
  double prev_inertia = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iter; ++iter) {
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      result.assignments[i] = nearest_centroid(centroids, X.row(i));
      inertia +=
          (X.row(i) - centroids.row(result.assignments[i])).squaredNorm();
    }
    // Recompute centroids; reseed empty clusters to the farthest point.
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, X.cols());
    std::vector<long> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(result.assignments[i]) += X.row(i);
      ++counts[result.assignments[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centroids.row(c) = sums.row(c) / static_cast<double>(counts[c]);
      } else {
        Eigen::Index far_idx = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double d =
              (X.row(i) - centroids.row(result.assignments[i])).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far_idx = i;
          }
        }
        centroids.row(c) = X.row(far_idx);
        result.assignments[far_idx] = c;
      }
    }
    result.inertia = inertia;
    result.inertia_trace.push_back(inertia);
    if (prev_inertia - inertia < 1e-12) break;
    prev_inertia = inertia;
  }
  // Final assignment pass against the last centroids.
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    result.assignments[i] = nearest_centroid(centroids, X.row(i));
    inertia += (X.row(i) - centroids.row(result.assignments[i])).squaredNorm();
  }
  result.inertia = inertia;
  result.centroids = std::move(centroids);
  return result;
}

}  // namespace gmsel
