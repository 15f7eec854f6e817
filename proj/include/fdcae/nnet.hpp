// include/fdcae/nnet.hpp
//
// Minimal reverse-mode autodiff over Eigen matrices, plus the few layer
// types the acoustic models need: affine, relu, frame splicing, batch
// normalization with running statistics, and row-wise log-softmax. Training
// state lives in Param objects; a Tape is rebuilt per minibatch.

// Copyright 2026  f-DcAE lab authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fdcae/common.hpp"

namespace fdcae {

/// Trainable tensor with its gradient and Adam moments.
struct Param {
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;

  void init(int rows, int cols) {
    value = Matrix::Zero(rows, cols);
    reset_aux();
  }
  void reset_aux() {
    grad = Matrix::Zero(value.rows(), value.cols());
    adam_m = Matrix::Zero(value.rows(), value.cols());
    adam_v = Matrix::Zero(value.rows(), value.cols());
  }
  void zero_grad() { grad.setZero(); }
};

inline void glorot_init(Param& p, int rows, int cols, Rng& rng) {
  p.init(rows, cols);
  double limit = std::sqrt(6.0 / (rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) p.value(r, c) = dist(rng);
}

class Tape {
 public:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void()> backprop;  // adds into parents' grads
  };

  int emplace(Matrix value, std::function<void()> backprop = {}) {
    Node n;
    n.value = std::move(value);
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return int(nodes_.size()) - 1;
  }

  const Matrix& value(int id) const { return nodes_[id].value; }
  Matrix& grad(int id) { return nodes_[id].grad; }
  void set_backprop(int id, std::function<void()> fn) {
    nodes_[id].backprop = std::move(fn);
  }

  /// Runs reverse accumulation from a scalar node. Parameter leaves add
  /// into their Param::grad, so gradients accumulate across chunks.
  void backward(int loss_id) {
    if (nodes_[loss_id].value.size() != 1)
      throw Error("Tape::backward: loss must be scalar");
    nodes_[loss_id].grad(0, 0) = 1.0;
    for (int i = loss_id; i >= 0; --i)
      if (nodes_[i].backprop) nodes_[i].backprop();
  }

  // --- leaves ---

  int input(const Matrix& v) { return emplace(v); }

  int param(Param& p) {
    int id = emplace(p.value);
    Param* pp = &p;
    nodes_[id].backprop = [this, id, pp] { pp->grad += grad(id); };
    return id;
  }

  // --- ops ---

  /// x: T x In, w: Out x In, b: 1 x Out. Result T x Out.
  int affine(int x, int w, int b) {
    const Matrix& xv = value(x);
    const Matrix& wv = value(w);
    const Matrix& bv = value(b);
    if (xv.cols() != wv.cols() || bv.rows() != 1 || bv.cols() != wv.rows())
      throw Error("affine: shape mismatch");
    Matrix out = xv * wv.transpose();
    out.rowwise() += bv.row(0);
    int id = emplace(std::move(out));
    nodes_[id].backprop = [this, id, x, w, b] {
      const Matrix& g = grad(id);
      grad(x) += g * value(w);
      grad(w) += g.transpose() * value(x);
      grad(b).row(0) += g.colwise().sum();
    };
    return id;
  }

  int relu(int x) {
    int id = emplace(value(x).cwiseMax(0.0));
    nodes_[id].backprop = [this, id, x] {
      grad(x) += grad(id).cwiseProduct(
          (value(x).array() > 0.0).cast<double>().matrix());
    };
    return id;
  }

  /// Concatenates rows at the given time offsets, clamping at the edges.
  /// T x D becomes T x (D * offsets.size()).
  int splice(int x, const std::vector<int>& offsets) {
    const Matrix& xv = value(x);
    const int T = int(xv.rows()), D = int(xv.cols());
    Matrix out(T, D * int(offsets.size()));
    for (int t = 0; t < T; ++t)
      for (std::size_t k = 0; k < offsets.size(); ++k) {
        int src = std::clamp(t + offsets[k], 0, T - 1);
        out.block(t, int(k) * D, 1, D) = xv.row(src);
      }
    int id = emplace(std::move(out));
    std::vector<int> offs = offsets;
    nodes_[id].backprop = [this, id, x, offs, T, D] {
      const Matrix& g = grad(id);
      Matrix& gx = grad(x);
      for (int t = 0; t < T; ++t)
        for (std::size_t k = 0; k < offs.size(); ++k) {
          int src = std::clamp(t + offs[k], 0, T - 1);
          gx.row(src) += g.block(t, int(k) * D, 1, D);
        }
    };
    return id;
  }

  int add(int a, int b) {
    int id = emplace(value(a) + value(b));
    nodes_[id].backprop = [this, id, a, b] {
      grad(a) += grad(id);
      grad(b) += grad(id);
    };
    return id;
  }

  /// Column-wise concatenation of two nodes with equal row counts.
  int hcat(int a, int b) {
    const Matrix& av = value(a);
    const Matrix& bv = value(b);
    if (av.rows() != bv.rows()) throw Error("Tape::hcat: row mismatch");
    Matrix out(av.rows(), av.cols() + bv.cols());
    out << av, bv;
    int id = emplace(std::move(out));
    nodes_[id].backprop = [this, id, a, b] {
      const Matrix& g = grad(id);
      long ac = value(a).cols();
      grad(a) += g.leftCols(ac);
      grad(b) += g.rightCols(g.cols() - ac);
    };
    return id;
  }

  int scale(int a, double s) {
    int id = emplace(value(a) * s);
    nodes_[id].backprop = [this, id, a, s] { grad(a) += grad(id) * s; };
    return id;
  }

  /// Row-wise log-softmax.
  int log_softmax(int x) {
    Matrix out = value(x);
    for (int t = 0; t < out.rows(); ++t) {
      double m = out.row(t).maxCoeff();
      double lse = m + std::log((out.row(t).array() - m).exp().sum());
      out.row(t).array() -= lse;
    }
    int id = emplace(std::move(out));
    nodes_[id].backprop = [this, id, x] {
      const Matrix& g = grad(id);
      const Matrix& y = value(id);
      Vector row_sums = g.rowwise().sum();
      grad(x) += g - (y.array().exp().colwise() * row_sums.array()).matrix();
    };
    return id;
  }

  /// Mean negative log-probability of the target column per row.
  int nll_loss(int logprobs, const std::vector<int>& targets) {
    const Matrix& lp = value(logprobs);
    if (int(targets.size()) != lp.rows())
      throw Error("nll_loss: target count mismatch");
    double acc = 0.0;
    for (int t = 0; t < lp.rows(); ++t) {
      if (targets[t] < 0 || targets[t] >= lp.cols())
        throw Error("nll_loss: target out of range");
      acc -= lp(t, targets[t]);
    }
    const double inv = 1.0 / lp.rows();
    int id = emplace(Matrix::Constant(1, 1, acc * inv));
    std::vector<int> tg = targets;
    nodes_[id].backprop = [this, id, logprobs, tg, inv] {
      double g = grad(id)(0, 0);
      Matrix& gx = grad(logprobs);
      for (std::size_t t = 0; t < tg.size(); ++t)
        gx(int(t), tg[t]) -= g * inv;
    };
    return id;
  }

  /// Mean squared error per element against a constant target.
  int mse_loss(int pred, const Matrix& target) {
    const Matrix& pv = value(pred);
    if (pv.rows() != target.rows() || pv.cols() != target.cols())
      throw Error("mse_loss: shape mismatch");
    Matrix diff = pv - target;
    const double inv = 1.0 / double(pv.size());
    int id = emplace(Matrix::Constant(1, 1, diff.squaredNorm() * inv));
    nodes_[id].backprop = [this, id, pred, diff, inv] {
      grad(pred) += (2.0 * inv * grad(id)(0, 0)) * diff;
    };
    return id;
  }

 private:
  std::vector<Node> nodes_;
};

/// Per-feature normalization. Training passes use minibatch statistics and
/// update the running estimates; inference uses the running estimates only,
/// so outputs do not depend on batch composition.
struct BatchNorm {
  Param gamma;  // 1 x D
  Param beta;   // 1 x D
  Vector running_mean;
  Vector running_var;
  double momentum = 0.9;
  double eps = 1e-5;
  long batches_seen = 0;

  void init(int dim) {
    gamma.init(1, dim);
    gamma.value.setOnes();
    beta.init(1, dim);
    running_mean = Vector::Zero(dim);
    running_var = Vector::Ones(dim);
    batches_seen = 0;
  }
  int dim() const { return int(running_mean.size()); }
};

inline int batchnorm(Tape& tape, int x, BatchNorm& bn, bool training) {
  const Matrix& xv = tape.value(x);
  const int T = int(xv.rows()), D = int(xv.cols());
  if (D != bn.dim()) throw Error("batchnorm: dim mismatch");

  Vector mu, var;
  if (training) {
    mu = xv.colwise().mean().transpose();
    var = (xv.rowwise() - mu.transpose()).array().square().colwise().mean()
              .transpose();
    double m = bn.batches_seen == 0 ? 0.0 : bn.momentum;
    bn.running_mean = m * bn.running_mean + (1.0 - m) * mu;
    bn.running_var = m * bn.running_var + (1.0 - m) * var;
    bn.batches_seen += 1;
  } else {
    mu = bn.running_mean;
    var = bn.running_var;
  }
  Vector inv_std = (var.array() + bn.eps).rsqrt();
  Matrix xhat =
      ((xv.rowwise() - mu.transpose()).array().rowwise() *
       inv_std.transpose().array())
          .matrix();
  int g = tape.param(bn.gamma);
  int b = tape.param(bn.beta);
  Matrix out =
      (xhat.array().rowwise() * tape.value(g).row(0).array()).matrix();
  out.rowwise() += tape.value(b).row(0);
  int id = tape.emplace(std::move(out));
  Tape* tp = &tape;
  tape.set_backprop(id, [tp, id, x, g, b, xhat, inv_std, T, training] {
    const Matrix& gy = tp->grad(id);
    Eigen::RowVectorXd gamma_row = tp->value(g).row(0);
    tp->grad(b).row(0) += gy.colwise().sum();
    tp->grad(g).row(0) += gy.cwiseProduct(xhat).colwise().sum();
    Matrix gxhat = (gy.array().rowwise() * gamma_row.array()).matrix();
    if (!training) {
      tp->grad(x) +=
          (gxhat.array().rowwise() * inv_std.transpose().array()).matrix();
      return;
    }
    // full backward through the batch statistics
    Eigen::RowVectorXd sum_g = gxhat.colwise().sum();
    Eigen::RowVectorXd sum_gx = gxhat.cwiseProduct(xhat).colwise().sum();
    Matrix gx = gxhat * double(T);
    gx.rowwise() -= sum_g;
    gx -= (xhat.array().rowwise() * sum_gx.array()).matrix();
    gx.array().rowwise() *= (inv_std.transpose().array() / double(T));
    tp->grad(x) += gx;
  });
  return id;
}

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One Adam update over a parameter set; step counts from 1. Updates are
/// skipped wholesale when any gradient entry is not finite, which keeps a
/// single bad minibatch from poisoning the moments.
inline bool adam_step(std::vector<Param*>& params, const AdamOptions& opt,
                      long step) {
  for (Param* p : params)
    if (!all_finite(p->grad)) return false;
  double bc1 = 1.0 - std::pow(opt.beta1, double(step));
  double bc2 = 1.0 - std::pow(opt.beta2, double(step));
  for (Param* p : params) {
    p->adam_m = opt.beta1 * p->adam_m + (1.0 - opt.beta1) * p->grad;
    p->adam_v = opt.beta2 * p->adam_v +
                (1.0 - opt.beta2) * p->grad.cwiseProduct(p->grad);
    Matrix mhat = p->adam_m / bc1;
    Matrix vhat = p->adam_v / bc2;
    p->value -=
        opt.lr * mhat.cwiseQuotient((vhat.cwiseSqrt().array() + opt.eps)
                                        .matrix());
  }
  return true;
}

struct GradCheckReport {
  double max_rel_err = 0.0;
  int coords_checked = 0;
};

/// Central-difference check of analytic gradients. loss_fn must recompute
/// the scalar loss from current parameter values and, when asked, leave
/// fresh gradients in the Params.
inline GradCheckReport grad_check(
    const std::vector<Param*>& params,
    const std::function<double(bool /*want_grad*/)>& loss_fn, Rng& rng,
    int coords = 60, double eps = 1e-5) {
  for (Param* p : params) p->zero_grad();
  loss_fn(true);
  std::vector<Matrix> analytic;
  for (Param* p : params) analytic.push_back(p->grad);

  GradCheckReport rep;
  std::uniform_int_distribution<int> p_dist(0, int(params.size()) - 1);
  for (int i = 0; i < coords; ++i) {
    int pi = p_dist(rng);
    Param* p = params[pi];
    if (p->value.size() == 0) continue;
    std::uniform_int_distribution<int> idx(0, int(p->value.size()) - 1);
    int j = idx(rng);
    double saved = p->value.data()[j];
    p->value.data()[j] = saved + eps;
    double up = loss_fn(false);
    p->value.data()[j] = saved - eps;
    double dn = loss_fn(false);
    p->value.data()[j] = saved;
    double numeric = (up - dn) / (2.0 * eps);
    double a = analytic[pi].data()[j];
    // the floor keeps finite-difference roundoff on near-zero gradients
    // from dominating the report
    double rel =
        std::abs(a - numeric) / std::max(1e-4, std::abs(a) + std::abs(numeric));
    rep.max_rel_err = std::max(rep.max_rel_err, rel);
    rep.coords_checked += 1;
  }
  return rep;
}

// --- checkpointing -----------------------------------------------------

namespace nnet_detail {

inline void write_named_matrix(std::ostream& os, const std::string& name,
                               const Matrix& m) {
  os << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  os.precision(17);
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c)
      os << m(r, c) << ((c + 1 < m.cols()) ? ' ' : '\n');
}

}  // namespace nnet_detail

/// Writes named parameter values (no optimizer state) as text.
inline void save_params(const std::map<std::string, const Matrix*>& params,
                        const std::string& path, const std::string& tag) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path);
  os << tag << ' ' << params.size() << '\n';
  for (const auto& [name, m] : params)
    nnet_detail::write_named_matrix(os, name, *m);
}

inline std::map<std::string, Matrix> load_params(const std::string& path,
                                                 const std::string& tag) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read " + path);
  std::string got;
  std::size_t count;
  if (!(is >> got >> count) || got != tag)
    throw FormatError("checkpoint tag mismatch in " + path);
  std::map<std::string, Matrix> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::string name;
    long r, c;
    if (!(is >> name >> r >> c))
      throw FormatError("checkpoint: bad entry header in " + path);
    Matrix m(r, c);
    for (long a = 0; a < r; ++a)
      for (long b = 0; b < c; ++b)
        if (!(is >> m(a, b)))
          throw FormatError("checkpoint: short matrix in " + path);
    out.emplace(name, std::move(m));
  }
  return out;
}

}  // namespace fdcae
