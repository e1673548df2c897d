#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "gmsel/perf.hpp"  // Mask

namespace gmsel::ad {

/// A trainable matrix with its gradient accumulator.
struct Parameter {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;

  Parameter() = default;
  Parameter(std::string n, Eigen::MatrixXd v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(Eigen::MatrixXd::Zero(value.rows(), value.cols())) {}
};

/// Reverse-mode tape over dense matrices. A tape is built per forward pass;
/// parameters live outside the tape so their values persist across passes.
class Tape {
 public:
  using Var = int;

  Var leaf(Parameter& p);
  Var constant(Eigen::MatrixXd v);

  Var matmul(Var a, Var b);     // A * B
  Var matmul_nt(Var a, Var b);  // A * B^T
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var cmul(Var a, Var b);  // elementwise
  Var scale(Var a, double s);
  Var add_row(Var a, Var row);  // broadcast a 1 x k row (bias) to each row
  Var relu(Var a);
  Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
  /// Rows of the result enumerate all (i, j) pairs, row i*m + j being
  /// [U.row(i), V.row(j)].
  Var pairwise_concat(Var u, Var v);
  /// (n*m) x 1 column reshaped into n x m, pair order as pairwise_concat.
  Var reshape_rows(Var a, Eigen::Index n, Eigen::Index m);

  /// Mean over observed entries of squared error. Returns a 1x1 node.
  Var masked_mse(Var pred, const Eigen::MatrixXd& target, const Mask& mask);
  /// ListNet top-1 loss: per row, cross-entropy between the softmax of the
  /// observed targets and the softmax of the observed predictions,
  /// averaged over rows with >= 1 observation. Returns a 1x1 node.
  Var listnet_top1(Var scores, const Eigen::MatrixXd& target,
                   const Mask& mask);

  const Eigen::MatrixXd& value(Var v) const { return nodes_[v].value; }

  /// Backpropagates from a scalar (1x1) node, accumulating into the
  /// gradients of all leaf parameters.
  void backward(Var loss);

 private:
  struct Node {
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
    std::function<void(Tape&, const Node&)> pull;
  };

  Var push(Eigen::MatrixXd value,
           std::function<void(Tape&, const Node&)> pull);
  Eigen::MatrixXd& grad(Var v) { return nodes_[v].grad; }

  std::vector<Node> nodes_;
};

void zero_grads(std::vector<Parameter>& params);

/// Gradient-descent update rules. Weight decay is plain L2 on the values.
struct SgdMomentum {
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0;
  void step(std::vector<Parameter>& params);

 private:
  std::vector<Eigen::MatrixXd> velocity_;
};

struct Adam {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  void step(std::vector<Parameter>& params);

 private:
  std::vector<Eigen::MatrixXd> m_, v_;
  long t_ = 0;
};

/// Central finite-difference check. `loss` must recompute the scalar loss
/// from the current parameter values. Returns the max relative error over
/// entries whose analytic gradient magnitude exceeds `grad_floor`.
double gradient_check(std::vector<Parameter>& params,
                      const std::function<double()>& loss,
                      const std::function<void()>& compute_grads,
                      double step = 1e-5, double grad_floor = 1e-6);

}  // namespace gmsel::ad
