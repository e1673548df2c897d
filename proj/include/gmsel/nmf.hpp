#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "gmsel/perf.hpp"  // Mask

namespace gmsel {

struct NmfResult {
  Eigen::MatrixXd U;  // n x rank
  Eigen::MatrixXd V;  // m x rank
  std::vector<double> objective_trace;  // masked squared error per iteration
};

/// Masked nonnegative matrix factorization P ~= U * V^T by multiplicative
/// updates. Observed entries of P must be nonnegative. The masked squared
/// error is non-increasing across iterations.
NmfResult nmf(const Eigen::MatrixXd& P, const Mask& mask, int rank,
              std::uint64_t seed, int max_iter = 200);

}  // namespace gmsel
