// include/fdcae/train.hpp
//
// Chunked training for the autoencoder acoustic model. Utterances are cut
// into fixed-length chunks; each chunk carries its spliced inputs, clean
// reconstruction targets, aligned states and a supervision graph condensed
// from the alignment, so chunks can be shuffled freely.

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

#include <algorithm>
#include <numeric>

#include "fdcae/hmm.hpp"
#include "fdcae/loss.hpp"
#include "fdcae/model.hpp"

namespace fdcae {

struct TrainUtterance {
  std::string utt_id;
  Matrix inputs;            // T x input_dim, spliced
  Matrix recon_targets;     // T x recon_dim, clean features
  Matrix aux;               // T x aux_dim, zero columns when disabled
  std::vector<int> states;  // forced alignment, length T
};

struct TrainChunk {
  Matrix inputs;
  Matrix recon_targets;
  Matrix aux;
  std::vector<int> states;
  StateGraph numerator;
};

inline std::vector<TrainChunk> make_chunks(
    const std::vector<TrainUtterance>& utts, const HmmTopology& topo,
    int chunk_frames = 150) {
  if (chunk_frames <= 0) throw Error("make_chunks: bad chunk length");
  std::vector<TrainChunk> chunks;
  for (const auto& u : utts) {
    const int T = int(u.inputs.rows());
    if (int(u.states.size()) != T)
      throw Error("make_chunks: alignment length mismatch for " + u.utt_id);
    if (u.recon_targets.rows() != T || u.aux.rows() != T)
      throw Error("make_chunks: row count mismatch for " + u.utt_id);
    for (int begin = 0; begin < T; begin += chunk_frames) {
      int len = std::min(chunk_frames, T - begin);
      TrainChunk c;
      c.inputs = u.inputs.middleRows(begin, len);
      c.recon_targets = u.recon_targets.middleRows(begin, len);
      c.aux = u.aux.middleRows(begin, len);
      c.states.assign(u.states.begin() + begin,
                      u.states.begin() + begin + len);
      c.numerator = numerator_graph_from_alignment(c.states, topo);
      chunks.push_back(std::move(c));
    }
  }
  return chunks;
}

struct TrainOptions {
  int epochs = 4;
  double lr = 1e-3;
  double lr_decay = 0.95;     // applied per epoch
  LossWeights weights;
  bool use_decoder = true;    // reconstruction term on
  std::uint64_t seed = 0;
  int max_bad_chunks = 20;    // non-finite losses tolerated before aborting
  double clip_norm = 5.0;     // global gradient norm cap, <= 0 disables
};

struct EpochStats {
  double ce = 0.0;
  double lfmmi = 0.0;
  double mse = 0.0;
  double total = 0.0;
};

struct TrainLog {
  std::vector<EpochStats> epochs;
};

inline Matrix chunk_input(const TrainChunk& c) {
  if (c.aux.cols() == 0) return c.inputs;
  Matrix joined(c.inputs.rows(), c.inputs.cols() + c.aux.cols());
  joined << c.inputs, c.aux;
  return joined;
}

/// Runs chunk-level stochastic training against a shared denominator graph.
/// Throws when too many chunks in a row produce non-finite losses.
inline TrainLog train_model(FdcaeModel& model, std::vector<TrainChunk>& chunks,
                            const StateGraph& den, const TrainOptions& opt) {
  if (chunks.empty()) throw Error("train_model: no chunks");
  const bool with_decoder = opt.use_decoder && model.cfg.has_decoder;
  std::vector<Param*> params = model.trainable(with_decoder);
  Rng rng = make_rng(opt.seed, 0x7472u);
  std::vector<int> order(chunks.size());
  std::iota(order.begin(), order.end(), 0);

  TrainLog log;
  long step = 0;
  int bad_streak = 0;
  AdamOptions adam;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    adam.lr = opt.lr * std::pow(opt.lr_decay, double(epoch));
    std::shuffle(order.begin(), order.end(), rng);
    EpochStats stats;
    for (int ci : order) {
      const TrainChunk& c = chunks[ci];
      for (Param* p : params) p->zero_grad();
      Tape tape;
      double total;
      int ce, mmi, mse;
      LossTerms terms;
      try {
        int bneck = model.encode(tape, chunk_input(c), true);
        int logits = model.logits(tape, bneck);
        ce = ce_loss(tape, logits, c.states);
        mmi = lfmmi_objective(tape, logits, c.numerator, den);
        if (with_decoder) {
          int aux = c.aux.cols() > 0 ? tape.input(c.aux) : -1;
          mse = recon_loss(tape, model.decode(tape, bneck, aux),
                           c.recon_targets);
        } else {
          mse = -1;
        }
        terms = total_loss(tape, ce, mmi, mse, opt.weights);
        total = tape.value(terms.total)(0, 0);
        if (!std::isfinite(total)) throw Error("non-finite loss");
      } catch (const Error&) {
        if (++bad_streak > opt.max_bad_chunks)
          throw Error("train_model: training diverged");
        continue;
      }
      bad_streak = 0;
      tape.backward(terms.total);
      if (opt.clip_norm > 0.0) {
        double sq = 0.0;
        for (Param* p : params) sq += p->grad.squaredNorm();
        double norm = std::sqrt(sq);
        if (norm > opt.clip_norm)
          for (Param* p : params) p->grad *= opt.clip_norm / norm;
      }
      adam_step(params, adam, ++step);
      stats.ce += tape.value(ce)(0, 0);
      stats.lfmmi += tape.value(mmi)(0, 0);
      if (mse >= 0) stats.mse += tape.value(mse)(0, 0);
      stats.total += total;
    }
    const double n = double(chunks.size());
    stats.ce /= n;
    stats.lfmmi /= n;
    stats.mse /= n;
    stats.total /= n;
    log.epochs.push_back(stats);
  }
  return log;
}

/// Speaker or domain adaptation: brief fine-tuning at a reduced rate on the
/// adaptation chunks, starting from an already trained model.
inline TrainLog adapt_model(FdcaeModel& model, std::vector<TrainChunk>& chunks,
                            const StateGraph& den, TrainOptions opt) {
  opt.lr *= 0.5;
  opt.epochs = 1;
  // adaptation has one pass to move the model, so let it take larger steps
  opt.clip_norm *= 5.0;
  return train_model(model, chunks, den, opt);
}

}  // namespace fdcae
