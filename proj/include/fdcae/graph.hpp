// fdcae/graph.hpp

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
#include "fdcae/hmm.hpp"

namespace fdcae {

// ---------------------------------------------------------------------------
// Weighted acceptor over HMM emitting states. Epsilon-free: every arc
// consumes one frame and carries the emitting-state id it scores against.

struct GraphArc {
  int src = 0;
  int dst = 0;
  int state = 0;       // emitting-state id scored by loglikes(t, state)
  double weight = 0.0; // log domain
};

struct StateGraph {
  int num_nodes = 0;
  int start = 0;
  int num_states = 0;  // S: emitting-state inventory size
  std::vector<GraphArc> arcs;
  std::vector<double> final_weights;  // per node; kLogZero when non-final

  int add_node() {
    final_weights.push_back(kLogZero);
    return num_nodes++;
  }
  void add_arc(int src, int dst, int state, double weight) {
    arcs.push_back({src, dst, state, weight});
  }
  void set_final(int node, double weight) { final_weights[node] = weight; }
};

struct FBResult {
  double log_total = kLogZero;
  Matrix posteriors;  // T x S, rows sum to 1
};

// ---------------------------------------------------------------------------
// Numerator graph: left-to-right composition of the transcript's phone HMMs.

// ---------------------------------------------------------------------------
// Phone bigram LM with add-1 smoothing; boundary symbols implicit.

class PhoneBigram {
 public:
  PhoneBigram(int num_phones) : n_(num_phones) {
    counts_.assign(n_ + 1, std::vector<double>(n_ + 1, 1.0));  // add-1
  }

  /// history n_ means sentence start; successor n_ means sentence end.
  void observe(const std::vector<int>& transcript) {
    int prev = n_;
    for (int p : transcript) {
      counts_[prev][p] += 1.0;
      prev = p;
    }
    counts_[prev][n_] += 1.0;
  }

  double log_prob(int history, int next) const {
    const auto& row = counts_.at(history);
    double total = 0.0;
    for (double c : row) total += c;
    return std::log(row.at(next) / total);
  }

  double log_prob_initial(int p) const { return log_prob(n_, p); }
  double log_prob_final(int history) const { return log_prob(history, n_); }
  int num_phones() const { return n_; }

 private:
  int n_;
  std::vector<std::vector<double>> counts_;
};

inline PhoneBigram estimate_phone_bigram(
    const std::vector<std::vector<int>>& transcripts, int num_phones) {
  PhoneBigram lm(num_phones);
  for (const auto& t : transcripts) lm.observe(t);
  return lm;
}

namespace graph_detail {

/// Builds the supervision chain over an explicit state visit order. With an
/// LM, phone-boundary arcs carry the bigram weights the competitor graph
/// uses, which keeps the chain's mass a subset of the competitor's mass.
inline StateGraph chain_graph(const std::vector<int>& order,
                              const HmmTopology& topo, const PhoneBigram* lm) {
  StateGraph g;
  g.num_states = topo.num_states();
  g.start = g.add_node();
  const double lself = topo.self_loop_logprob();
  const double lfwd = topo.forward_logprob();
  int prev = g.start;
  int prev_phone = -1;
  for (int s : order) {
    int phone = topo.phone_of_state(s);
    double entry;
    if (prev == g.start)
      entry = lm ? lm->log_prob_initial(phone) : 0.0;
    else if (phone != prev_phone)
      entry = lfwd + (lm ? lm->log_prob(prev_phone, phone) : 0.0);
    else
      entry = lfwd;
    int node = g.add_node();
    g.add_arc(prev, node, s, entry);
    g.add_arc(node, node, s, lself);
    prev = node;
    prev_phone = phone;
  }
  g.set_final(prev, lfwd + (lm ? lm->log_prob_final(prev_phone) : 0.0));
  return g;
}

}  // namespace graph_detail

inline StateGraph build_numerator_graph(const std::vector<int>& transcript_phones,
                                        const HmmTopology& topo,
                                        const PhoneBigram* lm = nullptr) {
  if (transcript_phones.empty())
    throw Error("build_numerator_graph: empty transcript");
  std::vector<int> order;
  for (int p : transcript_phones)
    for (int i = 0; i < topo.phone_states(p); ++i)
      order.push_back(topo.state_offset(p) + i);
  return graph_detail::chain_graph(order, topo, lm);
}

/// Chunk-level numerator: the distinct state visit order of an alignment
/// slice, re-timeable via self-loops.
inline StateGraph numerator_graph_from_alignment(const std::vector<int>& states,
                                                 const HmmTopology& topo,
                                                 const PhoneBigram* lm
                                                 = nullptr) {
  if (states.empty())
    throw Error("numerator_graph_from_alignment: empty alignment");
  std::vector<int> order;
  for (int s : states)
    if (order.empty() || order.back() != s) order.push_back(s);
  return graph_detail::chain_graph(order, topo, lm);
}

// ---------------------------------------------------------------------------
// Denominator graph: one HMM copy per phone, connected by bigram arcs.

/// allow_partial additionally permits entering any phone mid-state and
/// finishing mid-phone, so truncated chunk supervisions stay a subset of
/// this graph's paths.
inline StateGraph build_denominator_graph(const PhoneBigram& lm,
                                          const HmmTopology& topo,
                                          bool allow_partial = false) {
  StateGraph g;
  g.num_states = topo.num_states();
  g.start = g.add_node();
  const double lself = topo.self_loop_logprob();
  const double lfwd = topo.forward_logprob();
  const int P = topo.num_phones();

  std::vector<int> first_node(P), last_node(P);
  for (int p = 0; p < P; ++p) {
    const int n = topo.phone_states(p);
    int prev = -1;
    for (int i = 0; i < n; ++i) {
      int s = topo.state_offset(p) + i;
      int node = g.add_node();
      if (i == 0)
        first_node[p] = node;
      else
        g.add_arc(prev, node, s, lfwd);
      g.add_arc(node, node, s, lself);
      if (allow_partial) {
        if (i > 0) g.add_arc(g.start, node, s, lm.log_prob_initial(p));
        if (i + 1 < n) g.set_final(node, lfwd + lm.log_prob_final(p));
      }
      prev = node;
    }
    last_node[p] = prev;
  }

  for (int p = 0; p < P; ++p) {
    int s0 = topo.state_offset(p);
    g.add_arc(g.start, first_node[p], s0, lm.log_prob_initial(p));
    g.set_final(last_node[p], lfwd + lm.log_prob_final(p));
    for (int q = 0; q < P; ++q)
      g.add_arc(last_node[p], first_node[q], topo.state_offset(q),
                lfwd + lm.log_prob(p, q));
  }
  return g;
}

// ---------------------------------------------------------------------------
// Exact log-space forward-backward and Viterbi.

inline FBResult forward_backward(const StateGraph& g, const Matrix& loglikes) {
  const int T = int(loglikes.rows());
  const int N = g.num_nodes;
  if (!loglikes.allFinite())
    throw Error("forward_backward: non-finite log-likelihoods");

  Matrix alpha = Matrix::Constant(T + 1, N, kLogZero);
  alpha(0, g.start) = 0.0;
  for (int t = 0; t < T; ++t)
    for (const auto& a : g.arcs) {
      double v = alpha(t, a.src);
      if (v == kLogZero) continue;
      double cand = v + a.weight + loglikes(t, a.state);
      alpha(t + 1, a.dst) = log_add(alpha(t + 1, a.dst), cand);
    }

  double log_total = kLogZero;
  for (int n = 0; n < N; ++n)
    if (g.final_weights[n] != kLogZero)
      log_total = log_add(log_total, alpha(T, n) + g.final_weights[n]);
  if (log_total == kLogZero)
    throw Error("forward_backward: no surviving path");

  Matrix beta = Matrix::Constant(T + 1, N, kLogZero);
  for (int n = 0; n < N; ++n) beta(T, n) = g.final_weights[n];
  for (int t = T - 1; t >= 0; --t)
    for (const auto& a : g.arcs) {
      double v = beta(t + 1, a.dst);
      if (v == kLogZero) continue;
      double cand = a.weight + loglikes(t, a.state) + v;
      beta(t, a.src) = log_add(beta(t, a.src), cand);
    }

  FBResult res;
  res.log_total = log_total;
  res.posteriors = Matrix::Zero(T, g.num_states);
  for (int t = 0; t < T; ++t)
    for (const auto& a : g.arcs) {
      double va = alpha(t, a.src);
      double vb = beta(t + 1, a.dst);
      if (va == kLogZero || vb == kLogZero) continue;
      double occ =
          std::exp(va + a.weight + loglikes(t, a.state) + vb - log_total);
      res.posteriors(t, a.state) += occ;
    }
  return res;
}

/// Forward-only total (for cross-checking against the backward pass).
inline double backward_log_total(const StateGraph& g, const Matrix& loglikes) {
  const int T = int(loglikes.rows());
  const int N = g.num_nodes;
  Matrix beta = Matrix::Constant(T + 1, N, kLogZero);
  for (int n = 0; n < N; ++n) beta(T, n) = g.final_weights[n];
  for (int t = T - 1; t >= 0; --t)
    for (const auto& a : g.arcs) {
      double v = beta(t + 1, a.dst);
      if (v == kLogZero) continue;
      beta(t, a.src) = log_add(beta(t, a.src),
                               a.weight + loglikes(t, a.state) + v);
    }
  return beta(0, g.start);
}

struct ViterbiPath {
  std::vector<int> states;  // emitted state ids, length T
  double score = kLogZero;
};

/// Max-weight path; ties broken by smallest arc index.
inline ViterbiPath viterbi_best_path(const StateGraph& g,
                                     const Matrix& loglikes) {
  const int T = int(loglikes.rows());
  const int N = g.num_nodes;
  Matrix delta = Matrix::Constant(T + 1, N, kLogZero);
  Eigen::MatrixXi back(T + 1, N);
  back.setConstant(-1);
  delta(0, g.start) = 0.0;
  for (int t = 0; t < T; ++t)
    for (int ai = 0; ai < int(g.arcs.size()); ++ai) {
      const auto& a = g.arcs[ai];
      double v = delta(t, a.src);
      if (v == kLogZero) continue;
      double cand = v + a.weight + loglikes(t, a.state);
      if (cand > delta(t + 1, a.dst)) {
        delta(t + 1, a.dst) = cand;
        back(t + 1, a.dst) = ai;
      }
    }

  int best_node = -1;
  double best = kLogZero;
  for (int n = 0; n < N; ++n) {
    if (g.final_weights[n] == kLogZero || delta(T, n) == kLogZero) continue;
    double cand = delta(T, n) + g.final_weights[n];
    if (cand > best) {
      best = cand;
      best_node = n;
    }
  }
  if (best_node < 0) throw Error("viterbi_best_path: no path");

  ViterbiPath path;
  path.score = best;
  path.states.resize(T);
  int node = best_node;
  for (int t = T; t > 0; --t) {
    const auto& a = g.arcs[back(t, node)];
    path.states[t - 1] = a.state;
    node = a.src;
  }
  return path;
}

// ---------------------------------------------------------------------------
// Text arc-list serialization for inspection and golden tests.

inline void save_graph(const StateGraph& g, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("save_graph: cannot open " + path);
  os.precision(17);
  os << "fdcae-graph-v1 " << g.num_nodes << " " << g.start << " "
     << g.num_states << "\n";
  for (const auto& a : g.arcs)
    os << a.src << " " << a.dst << " " << a.state << " " << a.weight << "\n";
  os << "finals";
  for (int n = 0; n < g.num_nodes; ++n)
    if (g.final_weights[n] != kLogZero) os << " " << n << ":" << g.final_weights[n];
  os << "\n";
}

inline StateGraph load_graph(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("load_graph: cannot open " + path);
  std::string magic;
  is >> magic;
  if (magic != "fdcae-graph-v1")
    throw FormatError("load_graph: bad magic in " + path);
  StateGraph g;
  int num_nodes;
  is >> num_nodes >> g.start >> g.num_states;
  for (int i = 0; i < num_nodes; ++i) g.add_node();
  std::string tok;
  while (is >> tok) {
    if (tok == "finals") break;
    GraphArc a;
    a.src = std::stoi(tok);
    is >> a.dst >> a.state >> a.weight;
    g.arcs.push_back(a);
  }
  std::string line;
  std::getline(is, line);
  std::stringstream ss(line);
  while (ss >> tok) {
    auto c = tok.find(':');
    g.final_weights[std::stoi(tok.substr(0, c))] = std::stod(tok.substr(c + 1));
  }
  return g;
}

}  // namespace fdcae
