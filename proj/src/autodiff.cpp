#include "gmsel/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace gmsel::ad {

Tape::Var Tape::push(Eigen::MatrixXd value,
                     std::function<void(Tape&, const Node&)> pull) {
  Node node;
  node.grad = Eigen::MatrixXd::Zero(value.rows(), value.cols());
  node.value = std::move(value);
  node.pull = std::move(pull);
  nodes_.push_back(std::move(node));
  return static_cast<Var>(nodes_.size() - 1);
}

Tape::Var Tape::leaf(Parameter& p) {
  Parameter* ptr = &p;
  return push(p.value, [ptr](Tape&, const Node& self) {
    ptr->grad += self.grad;
  });
}

Tape::Var Tape::constant(Eigen::MatrixXd v) {
  return push(std::move(v), nullptr);
}

Tape::Var Tape::matmul(Var a, Var b) {
  return push(value(a) * value(b), [a, b](Tape& t, const Node& self) {
    t.grad(a) += self.grad * t.value(b).transpose();
    t.grad(b) += t.value(a).transpose() * self.grad;
  });
}

Tape::Var Tape::matmul_nt(Var a, Var b) {
  return push(value(a) * value(b).transpose(),
              [a, b](Tape& t, const Node& self) {
                t.grad(a) += self.grad * t.value(b);
                t.grad(b) += self.grad.transpose() * t.value(a);
              });
}

Tape::Var Tape::add(Var a, Var b) {
  return push(value(a) + value(b), [a, b](Tape& t, const Node& self) {
    t.grad(a) += self.grad;
    t.grad(b) += self.grad;
  });
}

Tape::Var Tape::sub(Var a, Var b) {
  return push(value(a) - value(b), [a, b](Tape& t, const Node& self) {
    t.grad(a) += self.grad;
    t.grad(b) -= self.grad;
  });
}

Tape::Var Tape::cmul(Var a, Var b) {
  return push(value(a).cwiseProduct(value(b)),
              [a, b](Tape& t, const Node& self) {
                t.grad(a) += self.grad.cwiseProduct(t.value(b));
                t.grad(b) += self.grad.cwiseProduct(t.value(a));
              });
}

Tape::Var Tape::scale(Var a, double s) {
  return push(value(a) * s, [a, s](Tape& t, const Node& self) {
    t.grad(a) += self.grad * s;
  });
}

Tape::Var Tape::add_row(Var a, Var row) {
  Eigen::MatrixXd v = value(a);
  v.rowwise() += value(row).row(0);
  return push(std::move(v), [a, row](Tape& t, const Node& self) {
    t.grad(a) += self.grad;
    t.grad(row).row(0) += self.grad.colwise().sum();
  });
}

Tape::Var Tape::relu(Var a) {
  return push(value(a).cwiseMax(0.0), [a](Tape& t, const Node& self) {
    t.grad(a).array() +=
        self.grad.array() * (t.value(a).array() > 0.0).cast<double>();
  });
}

Tape::Var Tape::slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  return push(value(a).middleRows(start, count),
              [a, start, count](Tape& t, const Node& self) {
                t.grad(a).middleRows(start, count) += self.grad;
              });
}

Tape::Var Tape::pairwise_concat(Var u, Var v) {
  const Eigen::MatrixXd& U = value(u);
  const Eigen::MatrixXd& V = value(v);
  const Eigen::Index n = U.rows(), m = V.rows();
  const Eigen::Index du = U.cols(), dv = V.cols();
  Eigen::MatrixXd out(n * m, du + dv);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      out.row(i * m + j) << U.row(i), V.row(j);
    }
  }
  return push(std::move(out),
              [u, v, n, m, du, dv](Tape& t, const Node& self) {
                for (Eigen::Index i = 0; i < n; ++i)
                  for (Eigen::Index j = 0; j < m; ++j) {
                    t.grad(u).row(i) += self.grad.row(i * m + j).head(du);
                    t.grad(v).row(j) += self.grad.row(i * m + j).tail(dv);
                  }
              });
}

Tape::Var Tape::reshape_rows(Var a, Eigen::Index n, Eigen::Index m) {
  const Eigen::MatrixXd& col = value(a);
  if (col.cols() != 1 || col.rows() != n * m)
    throw std::invalid_argument("reshape_rows: shape mismatch");
  Eigen::MatrixXd out(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) out(i, j) = col(i * m + j, 0);
  return push(std::move(out), [a, n, m](Tape& t, const Node& self) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m; ++j)
        t.grad(a)(i * m + j, 0) += self.grad(i, j);
  });
}

Tape::Var Tape::masked_mse(Var pred, const Eigen::MatrixXd& target,
                           const Mask& mask) {
  const Eigen::MatrixXd& P = value(pred);
  double count = 0.0, sum = 0.0;
  for (Eigen::Index i = 0; i < P.rows(); ++i)
    for (Eigen::Index j = 0; j < P.cols(); ++j)
      if (mask(i, j)) {
        const double d = P(i, j) - target(i, j);
        sum += d * d;
        count += 1.0;
      }
  if (count == 0.0) count = 1.0;
  Eigen::MatrixXd loss(1, 1);
  loss(0, 0) = sum / count;
  return push(std::move(loss),
              [pred, target, mask, count](Tape& t, const Node& self) {
                const double g = self.grad(0, 0) * 2.0 / count;
                const Eigen::MatrixXd& P = t.value(pred);
                for (Eigen::Index i = 0; i < P.rows(); ++i)
                  for (Eigen::Index j = 0; j < P.cols(); ++j)
                    if (mask(i, j))
                      t.grad(pred)(i, j) += g * (P(i, j) - target(i, j));
              });
}

namespace {

/// Softmax over the observed entries of one row; unobserved entries get 0.
Eigen::VectorXd masked_row_softmax(const Eigen::VectorXd& row,
                                   const Mask& mask, Eigen::Index i) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(row.size());
  double max_v = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < row.size(); ++j)
    if (mask(i, j)) max_v = std::max(max_v, row[j]);
  double z = 0.0;
  for (Eigen::Index j = 0; j < row.size(); ++j)
    if (mask(i, j)) {
      p[j] = std::exp(row[j] - max_v);
      z += p[j];
    }
  if (z > 0.0) p /= z;
  return p;
}

}  // namespace

Tape::Var Tape::listnet_top1(Var scores, const Eigen::MatrixXd& target,
                             const Mask& mask) {
  const Eigen::MatrixXd& S = value(scores);
  const Eigen::Index n = S.rows();
  double total = 0.0;
  double rows_used = 0.0;
  Eigen::MatrixXd dS = Eigen::MatrixXd::Zero(S.rows(), S.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!mask.row(i).any()) continue;
    const Eigen::VectorXd p = masked_row_softmax(target.row(i), mask, i);
    const Eigen::VectorXd q = masked_row_softmax(S.row(i), mask, i);
    rows_used += 1.0;
    for (Eigen::Index j = 0; j < S.cols(); ++j) {
      if (!mask(i, j)) continue;
      if (p[j] > 0.0) total -= p[j] * std::log(std::max(q[j], 1e-300));
      dS(i, j) = q[j] - p[j];
    }
  }
  if (rows_used == 0.0) rows_used = 1.0;
  Eigen::MatrixXd loss(1, 1);
  loss(0, 0) = total / rows_used;
  dS /= rows_used;
  return push(std::move(loss),
              [scores, dS](Tape& t, const Node& self) {
                t.grad(scores) += self.grad(0, 0) * dS;
              });
}

void Tape::backward(Var loss) {
  if (value(loss).size() != 1)
    throw std::invalid_argument("backward expects a scalar node");
  nodes_[loss].grad(0, 0) = 1.0;
  for (Var v = loss; v >= 0; --v) {
    if (nodes_[v].pull) nodes_[v].pull(*this, nodes_[v]);
  }
}

void zero_grads(std::vector<Parameter>& params) {
  for (auto& p : params) p.grad.setZero();
}

void SgdMomentum::step(std::vector<Parameter>& params) {
  if (velocity_.size() != params.size()) {
    velocity_.clear();
    for (const auto& p : params)
      velocity_.push_back(
          Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
  }
  for (size_t i = 0; i < params.size(); ++i) {
    Eigen::MatrixXd g = params[i].grad;
    if (weight_decay > 0.0) g += weight_decay * params[i].value;
    velocity_[i] = momentum * velocity_[i] + g;
    params[i].value -= lr * velocity_[i];
  }
}

void Adam::step(std::vector<Parameter>& params) {
  if (m_.size() != params.size()) {
    m_.clear();
    v_.clear();
    for (const auto& p : params) {
      m_.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
      v_.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
    }
    t_ = 0;
  }
  ++t_;
  for (size_t i = 0; i < params.size(); ++i) {
    Eigen::MatrixXd g = params[i].grad;
    if (weight_decay > 0.0) g += weight_decay * params[i].value;
    m_[i] = beta1 * m_[i] + (1.0 - beta1) * g;
    v_[i] = beta2 * v_[i] + (1.0 - beta2) * g.cwiseProduct(g);
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    params[i].value.array() -=
        lr * (m_[i].array() / bc1) /
        ((v_[i].array() / bc2).sqrt() + eps);
  }
}

double gradient_check(std::vector<Parameter>& params,
                      const std::function<double()>& loss,
                      const std::function<void()>& compute_grads,
                      double step, double grad_floor) {
  zero_grads(params);
  compute_grads();
  double worst = 0.0;
  for (auto& p : params) {
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
        const double analytic = p.grad(r, c);
        if (std::abs(analytic) <= grad_floor) continue;
        const double saved = p.value(r, c);
        p.value(r, c) = saved + step;
        const double hi = loss();
        p.value(r, c) = saved - step;
        const double lo = loss();
        p.value(r, c) = saved;
        const double numeric = (hi - lo) / (2.0 * step);
        const double rel = std::abs(numeric - analytic) /
                           std::max({std::abs(numeric), std::abs(analytic),
                                     1e-12});
        worst = std::max(worst, rel);
      }
    }
  }
  return worst;
}

}  // namespace gmsel::ad
