// include/fdcae/loss.hpp
//
// Training objectives on top of the tape: frame cross-entropy, the
// sequence-discriminative numerator/denominator objective, and feature
// reconstruction error, plus their weighted combination.

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

#include "fdcae/graph.hpp"
#include "fdcae/nnet.hpp"

namespace fdcae {

/// Per-frame cross-entropy against aligned states; scalar to minimize.
inline int ce_loss(Tape& tape, int logits, const std::vector<int>& targets) {
  return tape.nll_loss(tape.log_softmax(logits), targets);
}

/// Sequence objective per frame: (log-score of the supervision graph minus
/// log-score of the phone-bigram graph), treating logits as frame scores.
/// Scalar to maximize; its logit gradient is the occupancy difference
/// (numerator minus denominator posteriors) scaled by 1/T, so every row of
/// the gradient sums to zero.
inline int lfmmi_objective(Tape& tape, int logits, const StateGraph& num,
                           const StateGraph& den) {
  const Matrix& scores = tape.value(logits);
  const int T = int(scores.rows());
  if (T == 0) throw Error("lfmmi_objective: empty chunk");
  FBResult fnum = forward_backward(num, scores);
  FBResult fden = forward_backward(den, scores);
  const double inv_t = 1.0 / T;
  int id = tape.emplace(
      Matrix::Constant(1, 1, (fnum.log_total - fden.log_total) * inv_t));
  Matrix occ_diff = (fnum.posteriors - fden.posteriors) * inv_t;
  Tape* tp = &tape;
  tape.set_backprop(id, [tp, id, logits, occ_diff] {
    tp->grad(logits) += tp->grad(id)(0, 0) * occ_diff;
  });
  return id;
}

/// Reconstruction error of the decoder output against clean features.
inline int recon_loss(Tape& tape, int recon, const Matrix& clean) {
  return tape.mse_loss(recon, clean);
}

struct LossWeights {
  double alpha = 5.0;     // cross-entropy weight
  double beta = 5e-14;    // reconstruction weight
};

struct LossTerms {
  int ce = -1;
  int lfmmi = -1;
  int mse = -1;  // -1 when the decoder is disabled
  int total = -1;
};

/// total = alpha * ce - lfmmi + beta * mse. mse_node < 0 omits the
/// reconstruction term.
inline LossTerms total_loss(Tape& tape, int ce_node, int lfmmi_node,
                            int mse_node, const LossWeights& w) {
  LossTerms t;
  t.ce = ce_node;
  t.lfmmi = lfmmi_node;
  t.mse = mse_node;
  int acc = tape.add(tape.scale(ce_node, w.alpha), tape.scale(lfmmi_node, -1.0));
  if (mse_node >= 0) acc = tape.add(acc, tape.scale(mse_node, w.beta));
  t.total = acc;
  return t;
}

}  // namespace fdcae
