#include "gmsel/nmf.hpp"

#include <random>
#include <stdexcept>

namespace gmsel {

NmfResult nmf(const Eigen::MatrixXd& P, const Mask& mask, int rank,
              std::uint64_t seed, int max_iter) {
  const Eigen::Index n = P.rows(), m = P.cols();
  if (rank < 1 || rank > std::min(n, m))
    throw std::invalid_argument("nmf: rank must be in [1, min(n, m)]");
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (mask(i, j) && P(i, j) < 0.0)
        throw DataError("nmf: observed entries must be >= 0");

  const Eigen::MatrixXd W = mask.cast<double>();
  const Eigen::MatrixXd WP = W.cwiseProduct(P);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  NmfResult r;
  r.U.resize(n, rank);
  r.V.resize(m, rank);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int k = 0; k < rank; ++k) r.U(i, k) = u(rng);
  for (Eigen::Index j = 0; j < m; ++j)
    for (int k = 0; k < rank; ++k) r.V(j, k) = u(rng);

  constexpr double kEps = 1e-12;
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::MatrixXd approx = W.cwiseProduct(r.U * r.V.transpose());
    r.U.array() *= ((WP * r.V).array() / ((approx * r.V).array() + kEps));
    approx = W.cwiseProduct(r.U * r.V.transpose());
    r.V.array() *= ((WP.transpose() * r.U).array() /
                    ((approx.transpose() * r.U).array() + kEps));
    const double obj =
        W.cwiseProduct(P - r.U * r.V.transpose()).squaredNorm();
    r.objective_trace.push_back(obj);
    if (r.objective_trace.size() > 1) {
      const double prev = r.objective_trace[r.objective_trace.size() - 2];
      if (prev - obj < 1e-12 * std::max(1.0, prev)) break;
    }
  }
  return r;
}

}  // namespace gmsel
