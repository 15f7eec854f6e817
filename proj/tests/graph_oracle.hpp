// tests/graph_oracle.hpp
//
// Brute-force path enumeration over small StateGraphs. Test-only; independent
// of the forward-backward implementation it checks.

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

#include <vector>

#include "fdcae/graph.hpp"

namespace fdcae::test {

struct EnumerationResult {
  double log_total = kLogZero;
  double best_score = kLogZero;
  std::vector<int> best_states;
  long path_count = 0;
  Matrix occupancy;  // T x S expected state occupancy (posterior sums)
};

inline void enumerate_paths(const StateGraph& g, const Matrix& loglikes,
                            int node, int t, double weight,
                            std::vector<int>& states, EnumerationResult* out) {
  const int T = int(loglikes.rows());
  if (t == T) {
    if (g.final_weights[node] == kLogZero) return;
    double total = weight + g.final_weights[node];
    out->log_total = log_add(out->log_total, total);
    out->path_count += 1;
    if (total > out->best_score) {
      out->best_score = total;
      out->best_states = states;
    }
    return;
  }
  for (const auto& a : g.arcs) {
    if (a.src != node) continue;
    states.push_back(a.state);
    enumerate_paths(g, loglikes, a.dst, t + 1,
                    weight + a.weight + loglikes(t, a.state), states, out);
    states.pop_back();
  }
}

inline EnumerationResult enumerate_all(const StateGraph& g,
                                       const Matrix& loglikes) {
  EnumerationResult out;
  const int T = int(loglikes.rows());
  out.occupancy = Matrix::Zero(T, g.num_states);
  std::vector<int> states;
  enumerate_paths(g, loglikes, g.start, 0, 0.0, states, &out);

  // second pass for posteriors, now that log_total is known
  struct Walker {
    const StateGraph& g;
    const Matrix& ll;
    EnumerationResult* out;
    void walk(int node, int t, double weight, std::vector<int>& states) {
      const int T = int(ll.rows());
      if (t == T) {
        if (g.final_weights[node] == kLogZero) return;
        double p = std::exp(weight + g.final_weights[node] - out->log_total);
        for (int i = 0; i < T; ++i) out->occupancy(i, states[i]) += p;
        return;
      }
      for (const auto& a : g.arcs) {
        if (a.src != node) continue;
        states.push_back(a.state);
        walk(a.dst, t + 1, weight + a.weight + ll(t, a.state), states);
        states.pop_back();
      }
    }
  };
  if (out.log_total != kLogZero) {
    Walker w{g, loglikes, &out};
    std::vector<int> st;
    w.walk(g.start, 0, 0.0, st);
  }
  return out;
}

/// Random small graph guaranteed to have at least one length-T path:
/// a chain with self-loops plus random extra arcs.
inline StateGraph random_graph(Rng& rng, int max_nodes = 5, int num_states = 5) {
  std::uniform_int_distribution<int> nodes_dist(2, max_nodes);
  std::uniform_int_distribution<int> state_dist(0, num_states - 1);
  std::uniform_real_distribution<double> weight_dist(-1.5, 0.0);
  std::uniform_int_distribution<int> extra_dist(0, 4);

  StateGraph g;
  g.num_states = num_states;
  int n = nodes_dist(rng);
  for (int i = 0; i < n; ++i) g.add_node();
  g.start = 0;
  for (int i = 0; i + 1 < n; ++i) {
    g.add_arc(i, i + 1, state_dist(rng), weight_dist(rng));
    g.add_arc(i + 1, i + 1, state_dist(rng), weight_dist(rng));
  }
  g.add_arc(0, 0, state_dist(rng), weight_dist(rng));
  int extras = extra_dist(rng);
  std::uniform_int_distribution<int> node_dist(0, n - 1);
  for (int e = 0; e < extras; ++e)
    g.add_arc(node_dist(rng), node_dist(rng), state_dist(rng),
              weight_dist(rng));
  g.set_final(n - 1, weight_dist(rng));
  if (n > 1 && extra_dist(rng) > 2) g.set_final(node_dist(rng), weight_dist(rng));
  return g;
}

inline Matrix random_loglikes(Rng& rng, int T, int S) {
  std::uniform_real_distribution<double> dist(-3.0, 0.5);
  Matrix m(T, S);
  for (int t = 0; t < T; ++t)
    for (int s = 0; s < S; ++s) m(t, s) = dist(rng);
  return m;
}

}  // namespace fdcae::test
