// fdcae/hmm.hpp

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
#include <map>
#include <string>
#include <vector>

#include "fdcae/common.hpp"
#include "fdcae/corpus.hpp"
#include "fdcae/mfcc.hpp"

namespace fdcae {

// ---------------------------------------------------------------------------
// Topology: left-to-right phones, 3 emitting states (5 for sil), with
// self-loop/forward transition probabilities.

class HmmTopology {
 public:
  explicit HmmTopology(const PhoneInventory& inv, int states_per_phone = 3,
                       int sil_states = 5, double self_loop = 0.5)
      : HmmTopology(inv.size(), states_per_phone, sil_states, self_loop) {}

  /// Phone 0 is silence and gets sil_states emitting states.
  HmmTopology(int num_phones, int states_per_phone, int sil_states,
              double self_loop = 0.5)
      : self_loop_(std::log(self_loop)), forward_(std::log(1.0 - self_loop)) {
    offsets_.resize(num_phones);
    int next = 0;
    for (int p = 0; p < num_phones; ++p) {
      offsets_[p] = next;
      int n = (p == PhoneInventory::kSil) ? sil_states : states_per_phone;
      counts_.push_back(n);
      for (int i = 0; i < n; ++i) phone_of_state_.push_back(p);
      next += n;
    }
    num_states_ = next;
  }

  int num_states() const { return num_states_; }
  int num_phones() const { return int(offsets_.size()); }
  int phone_states(int phone) const { return counts_.at(phone); }
  int state_offset(int phone) const { return offsets_.at(phone); }
  int phone_of_state(int s) const { return phone_of_state_.at(s); }
  double self_loop_logprob() const { return self_loop_; }
  double forward_logprob() const { return forward_; }

  /// Global emitting-state ids of a transcript's composite chain.
  std::vector<int> composite_states(const std::vector<int>& phones) const {
    std::vector<int> states;
    for (int p : phones)
      for (int i = 0; i < counts_.at(p); ++i)
        states.push_back(offsets_.at(p) + i);
    return states;
  }

 private:
  double self_loop_, forward_;
  std::vector<int> offsets_, counts_, phone_of_state_;
  int num_states_ = 0;
};

// ---------------------------------------------------------------------------
// Diagonal-covariance GMM per state

struct DiagGmm {
  Matrix means;     // K x D
  Matrix vars;      // K x D, floored
  Vector weights;   // K, simplex

  int num_comps() const { return int(weights.size()); }

  double log_likelihood(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    double acc = kLogZero;
    for (int k = 0; k < num_comps(); ++k) {
      double ll = std::log(weights(k));
      for (int d = 0; d < x.size(); ++d) {
        double diff = x(d) - means(k, d);
        ll += -0.5 * (std::log(2.0 * M_PI * vars(k, d)) +
                      diff * diff / vars(k, d));
      }
      acc = log_add(acc, ll);
    }
    return acc;
  }

  Vector component_log_likes(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    Vector out(num_comps());
    for (int k = 0; k < num_comps(); ++k) {
      double ll = std::log(weights(k));
      for (int d = 0; d < x.size(); ++d) {
        double diff = x(d) - means(k, d);
        ll += -0.5 * (std::log(2.0 * M_PI * vars(k, d)) +
                      diff * diff / vars(k, d));
      }
      out(k) = ll;
    }
    return out;
  }
};

constexpr double kVarFloor = 1e-4;

struct GmmHmmModel {
  HmmTopology topology;
  std::vector<DiagGmm> state_gmms;  // indexed by global emitting state
  int dim = 0;

  explicit GmmHmmModel(const HmmTopology& topo) : topology(topo) {}

  double frame_loglike(int state,
                       const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    return state_gmms.at(state).log_likelihood(x);
  }
};

struct Alignment {
  std::string utt_id;
  std::vector<int> states;  // per-frame global emitting-state ids
};

// ---------------------------------------------------------------------------
// Forced alignment: Viterbi through the transcript's left-to-right chain.
// Ties prefer the forward transition.

inline Alignment force_align(const GmmHmmModel& model, const Matrix& feats,
                             const std::vector<int>& transcript_phones) {
  const std::vector<int> chain =
      model.topology.composite_states(transcript_phones);
  const int C = int(chain.size());
  const int T = int(feats.rows());
  if (T < 1 || C < 1 || T < C)
    throw Error("force_align: fewer frames than minimum path length");

  const double lself = model.topology.self_loop_logprob();
  const double lfwd = model.topology.forward_logprob();

  Matrix delta = Matrix::Constant(T, C, kLogZero);
  Eigen::MatrixXi back(T, C);
  back.setConstant(-1);

  // cache per-frame per-chain-position log-likelihoods
  Matrix ll(T, C);
  for (int t = 0; t < T; ++t)
    for (int c = 0; c < C; ++c)
      ll(t, c) = model.frame_loglike(chain[c], feats.row(t));

  delta(0, 0) = ll(0, 0);
  for (int t = 1; t < T; ++t) {
    int lo = std::max(0, C - (T - t));
    int hi = std::min(C - 1, t);
    for (int c = lo; c <= hi; ++c) {
      double from_self = delta(t - 1, c) + lself;
      double from_fwd = c > 0 ? delta(t - 1, c - 1) + lfwd : kLogZero;
      if (from_fwd >= from_self) {
        delta(t, c) = from_fwd + ll(t, c);
        back(t, c) = c - 1;
      } else {
        delta(t, c) = from_self + ll(t, c);
        back(t, c) = c;
      }
    }
  }
  if (delta(T - 1, C - 1) == kLogZero)
    throw Error("force_align: no valid path");

  Alignment a;
  a.states.resize(T);
  int c = C - 1;
  for (int t = T - 1; t >= 0; --t) {
    a.states[t] = chain[c];
    if (t > 0) c = back(t, c);
  }
  return a;
}

/// Total log-prob of an alignment path under the model (emissions plus
/// transition chain), used for monotonicity checks.
inline double alignment_loglike(const GmmHmmModel& model, const Matrix& feats,
                                const Alignment& a) {
  double acc = 0.0;
  for (int t = 0; t < int(a.states.size()); ++t) {
    acc += model.frame_loglike(a.states[t], feats.row(t));
    if (t > 0)
      acc += a.states[t] == a.states[t - 1]
                 ? model.topology.self_loop_logprob()
                 : model.topology.forward_logprob();
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Training

struct AlignedCorpus {
  // parallel arrays over utterances
  std::vector<std::string> utt_ids;
  std::vector<Matrix> features;
  std::vector<std::vector<int>> transcripts;  // phone indices
};

namespace hmm_detail {

struct StateAccumulator {
  double count = 0.0;
  Vector sum;
  Vector sumsq;
};

// single-Gaussian stats -> DiagGmm
inline DiagGmm gaussian_from_stats(const StateAccumulator& acc, int dim) {
  DiagGmm g;
  g.weights = Vector::Ones(1);
  g.means = Matrix::Zero(1, dim);
  g.vars = Matrix::Ones(1, dim);
  if (acc.count > 0.5) {
    g.means.row(0) = (acc.sum / acc.count).transpose();
    Vector var = acc.sumsq / acc.count -
                 (acc.sum / acc.count).cwiseProduct(acc.sum / acc.count);
    g.vars.row(0) = var.cwiseMax(kVarFloor).transpose();
  }
  return g;
}

}  // namespace hmm_detail

/// Uniform state segmentation, single Gaussian per state.
inline GmmHmmModel flat_start(const AlignedCorpus& corpus,
                              const HmmTopology& topo) {
  if (corpus.features.empty()) throw Error("flat_start: empty corpus");
  const int dim = int(corpus.features.front().cols());
  const int S = topo.num_states();

  std::vector<hmm_detail::StateAccumulator> acc(S);
  for (auto& a : acc) {
    a.sum = Vector::Zero(dim);
    a.sumsq = Vector::Zero(dim);
  }

  for (std::size_t u = 0; u < corpus.features.size(); ++u) {
    const Matrix& f = corpus.features[u];
    const auto chain = topo.composite_states(corpus.transcripts[u]);
    const int T = int(f.rows()), C = int(chain.size());
    if (T < C) continue;  // too short; skipped
    for (int t = 0; t < T; ++t) {
      int c = std::min(C - 1, t * C / T);
      int s = chain[c];
      acc[s].count += 1;
      acc[s].sum += f.row(t).transpose();
      acc[s].sumsq += f.row(t).cwiseProduct(f.row(t)).transpose();
    }
  }

  GmmHmmModel model(topo);
  model.dim = dim;
  for (int s = 0; s < S; ++s)
    model.state_gmms.push_back(hmm_detail::gaussian_from_stats(acc[s], dim));
  return model;
}

struct ViterbiTrainOptions {
  int iterations = 15;
  std::vector<int> split_iterations = {4, 8, 12};
  int max_components = 8;
  std::uint64_t seed = 0;
};

/// Iterate {align; re-estimate}; split the largest-weight component of each
/// state GMM at the configured iterations, capped at max_components.
inline GmmHmmModel viterbi_train(GmmHmmModel model, const AlignedCorpus& corpus,
                                 const ViterbiTrainOptions& opts = {},
                                 std::vector<double>* loglike_log = nullptr) {
  const int S = model.topology.num_states();
  const int dim = model.dim;
  Rng rng = make_rng(opts.seed, 0xbeef);

  for (int iter = 0; iter < opts.iterations; ++iter) {
    // split before alignment on the configured iterations
    if (std::find(opts.split_iterations.begin(), opts.split_iterations.end(),
                  iter) != opts.split_iterations.end()) {
      for (auto& g : model.state_gmms) {
        if (g.num_comps() >= opts.max_components) continue;
        int k_max = 0;
        g.weights.maxCoeff(&k_max);
        int K = g.num_comps();
        DiagGmm split;
        split.weights = Vector(K + 1);
        split.means = Matrix(K + 1, dim);
        split.vars = Matrix(K + 1, dim);
        split.weights.head(K) = g.weights;
        split.means.topRows(K) = g.means;
        split.vars.topRows(K) = g.vars;
        split.weights(k_max) *= 0.5;
        split.weights(K) = split.weights(k_max);
        Vector sigma = g.vars.row(k_max).transpose().cwiseSqrt();
        split.means.row(K) = g.means.row(k_max) + 0.2 * sigma.transpose();
        split.means.row(k_max) -= 0.2 * sigma.transpose();
        split.vars.row(K) = g.vars.row(k_max);
        g = split;
      }
    }

    // E-like step: hard state alignment, soft component responsibilities
    std::vector<double> count(S, 0.0);
    std::vector<Matrix> wsum(S), wsumsq(S);
    std::vector<Vector> wcount(S);
    for (int s = 0; s < S; ++s) {
      int K = model.state_gmms[s].num_comps();
      wsum[s] = Matrix::Zero(K, dim);
      wsumsq[s] = Matrix::Zero(K, dim);
      wcount[s] = Vector::Zero(K);
    }

    double total_ll = 0.0;
    for (std::size_t u = 0; u < corpus.features.size(); ++u) {
      const Matrix& f = corpus.features[u];
      const auto chain =
          model.topology.composite_states(corpus.transcripts[u]);
      if (int(f.rows()) < int(chain.size())) continue;
      Alignment a = force_align(model, f, corpus.transcripts[u]);
      total_ll += alignment_loglike(model, f, a);
      for (int t = 0; t < int(f.rows()); ++t) {
        int s = a.states[t];
        const DiagGmm& g = model.state_gmms[s];
        Vector lls = g.component_log_likes(f.row(t));
        double denom = kLogZero;
        for (int k = 0; k < lls.size(); ++k) denom = log_add(denom, lls(k));
        for (int k = 0; k < lls.size(); ++k) {
          double r = std::exp(lls(k) - denom);
          wcount[s](k) += r;
          wsum[s].row(k) += r * f.row(t);
          wsumsq[s].row(k) += r * f.row(t).cwiseProduct(f.row(t));
        }
        count[s] += 1;
      }
    }
    if (loglike_log) loglike_log->push_back(total_ll);

    // M step
    for (int s = 0; s < S; ++s) {
      if (count[s] < 1.0) continue;  // zero-frame state keeps its params
      DiagGmm& g = model.state_gmms[s];
      int K = g.num_comps();
      double tot = wcount[s].sum();
      for (int k = 0; k < K; ++k) {
        if (wcount[s](k) < 1e-2) continue;
        g.weights(k) = wcount[s](k) / tot;
        g.means.row(k) = wsum[s].row(k) / wcount[s](k);
        g.vars.row(k) = (wsumsq[s].row(k) / wcount[s](k) -
                         g.means.row(k).cwiseProduct(g.means.row(k)))
                            .cwiseMax(kVarFloor);
      }
      g.weights /= g.weights.sum();
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Serialization

constexpr const char* kGmmModelMagic = "fdcae-gmm-v1";

inline void save_gmm_model(const GmmHmmModel& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("save_gmm_model: cannot open " + path);
  os.precision(17);
  os << kGmmModelMagic << "\n" << m.dim << " " << m.state_gmms.size() << "\n";
  for (const auto& g : m.state_gmms) {
    os << g.num_comps() << "\n";
    for (int k = 0; k < g.num_comps(); ++k) {
      os << g.weights(k);
      for (int d = 0; d < m.dim; ++d) os << " " << g.means(k, d);
      for (int d = 0; d < m.dim; ++d) os << " " << g.vars(k, d);
      os << "\n";
    }
  }
}

inline GmmHmmModel load_gmm_model(const std::string& path,
                                  const HmmTopology& topo) {
  std::ifstream is(path);
  if (!is) throw Error("load_gmm_model: cannot open " + path);
  std::string magic;
  is >> magic;
  if (magic != kGmmModelMagic)
    throw FormatError("load_gmm_model: bad magic in " + path);
  GmmHmmModel m(topo);
  std::size_t n;
  is >> m.dim >> n;
  for (std::size_t s = 0; s < n; ++s) {
    int K;
    is >> K;
    DiagGmm g;
    g.weights = Vector(K);
    g.means = Matrix(K, m.dim);
    g.vars = Matrix(K, m.dim);
    for (int k = 0; k < K; ++k) {
      is >> g.weights(k);
      for (int d = 0; d < m.dim; ++d) is >> g.means(k, d);
      for (int d = 0; d < m.dim; ++d) is >> g.vars(k, d);
    }
    m.state_gmms.push_back(g);
  }
  if (!is) throw FormatError("load_gmm_model: truncated " + path);
  return m;
}

// Alignments as a text table: utt_id followed by per-frame state ids.
inline void save_alignments(const std::vector<Alignment>& aligns,
                            const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("save_alignments: cannot open " + path);
  for (const auto& a : aligns) {
    os << a.utt_id;
    for (int s : a.states) os << " " << s;
    os << "\n";
  }
}

inline std::map<std::string, Alignment> load_alignments(
    const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("load_alignments: cannot open " + path);
  std::map<std::string, Alignment> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    Alignment a;
    ss >> a.utt_id;
    int s;
    while (ss >> s) a.states.push_back(s);
    out[a.utt_id] = a;
  }
  return out;
}

}  // namespace fdcae
