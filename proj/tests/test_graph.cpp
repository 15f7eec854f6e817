// tests/test_graph.cpp

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

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "fdcae/graph.hpp"
#include "graph_oracle.hpp"

using namespace fdcae;

TEST_CASE("single-state graph accumulates frame scores") {
  StateGraph g;
  g.num_states = 1;
  g.start = g.add_node();
  int n = g.add_node();
  g.add_arc(g.start, n, 0, 0.0);
  g.add_arc(n, n, 0, 0.0);
  g.set_final(n, 0.0);

  Matrix ll(2, 1);
  ll << -1.25, -0.5;
  FBResult res = forward_backward(g, ll);
  CHECK(res.log_total == Catch::Approx(-1.75).margin(1e-12));
  CHECK(res.posteriors(0, 0) == Catch::Approx(1.0).margin(1e-12));
  CHECK(res.posteriors(1, 0) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("forward-backward matches exhaustive enumeration") {
  Rng rng = make_rng(77);
  int checked = 0;
  for (int i = 0; i < 120; ++i) {
    StateGraph g = test::random_graph(rng);
    std::uniform_int_distribution<int> t_dist(1, 6);
    Matrix ll = test::random_loglikes(rng, t_dist(rng), g.num_states);
    test::EnumerationResult oracle = test::enumerate_all(g, ll);
    if (oracle.log_total == kLogZero) {
      CHECK_THROWS_AS(forward_backward(g, ll), Error);
      continue;
    }
    FBResult res = forward_backward(g, ll);
    CHECK(res.log_total == Catch::Approx(oracle.log_total).margin(1e-9));
    CHECK((res.posteriors - oracle.occupancy).cwiseAbs().maxCoeff() < 1e-9);
    ++checked;
  }
  CHECK(checked >= 80);
}

TEST_CASE("posterior rows sum to one") {
  Rng rng = make_rng(101);
  for (int i = 0; i < 30; ++i) {
    StateGraph g = test::random_graph(rng);
    Matrix ll = test::random_loglikes(rng, 5, g.num_states);
    try {
      FBResult res = forward_backward(g, ll);
      for (int t = 0; t < 5; ++t)
        CHECK(res.posteriors.row(t).sum() == Catch::Approx(1.0).margin(1e-6));
    } catch (const Error&) {
      // graphs with no length-5 path are fine to skip here
    }
  }
}

TEST_CASE("forward and backward totals agree") {
  Rng rng = make_rng(55);
  for (int i = 0; i < 50; ++i) {
    StateGraph g = test::random_graph(rng);
    Matrix ll = test::random_loglikes(rng, 4, g.num_states);
    try {
      FBResult res = forward_backward(g, ll);
      CHECK(backward_log_total(g, ll) ==
            Catch::Approx(res.log_total).margin(1e-9));
    } catch (const Error&) {
    }
  }
}

TEST_CASE("per-frame likelihood shift moves total, not posteriors") {
  Rng rng = make_rng(66);
  StateGraph g = test::random_graph(rng);
  Matrix ll = test::random_loglikes(rng, 6, g.num_states);
  FBResult base = forward_backward(g, ll);
  const double c = 0.73;
  FBResult shifted = forward_backward(g, ll.array() + c);
  CHECK(shifted.log_total ==
        Catch::Approx(base.log_total + 6 * c).margin(1e-9));
  CHECK((shifted.posteriors - base.posteriors).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("viterbi equals brute-force argmax and bounds log_total") {
  Rng rng = make_rng(88);
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    StateGraph g = test::random_graph(rng);
    std::uniform_int_distribution<int> t_dist(1, 6);
    Matrix ll = test::random_loglikes(rng, t_dist(rng), g.num_states);
    test::EnumerationResult oracle = test::enumerate_all(g, ll);
    if (oracle.log_total == kLogZero) continue;
    ViterbiPath path = viterbi_best_path(g, ll);
    CHECK(path.score == Catch::Approx(oracle.best_score).margin(1e-9));
    CHECK(path.score <= forward_backward(g, ll).log_total + 1e-9);
    CHECK(std::exp(path.score - forward_backward(g, ll).log_total) <= 1.0 + 1e-9);
    ++checked;
  }
  CHECK(checked >= 60);
}

TEST_CASE("viterbi tie-breaking is deterministic") {
  StateGraph g;
  g.num_states = 2;
  g.start = g.add_node();
  int a = g.add_node(), b = g.add_node();
  g.add_arc(g.start, a, 0, 0.0);
  g.add_arc(g.start, b, 1, 0.0);
  g.set_final(a, 0.0);
  g.set_final(b, 0.0);
  Matrix ll = Matrix::Zero(1, 2);  // exact tie
  ViterbiPath p1 = viterbi_best_path(g, ll);
  ViterbiPath p2 = viterbi_best_path(g, ll);
  CHECK(p1.states == p2.states);
  CHECK(p1.states[0] == 0);  // smallest arc index wins
}

TEST_CASE("numerator graph for one 3-state phone") {
  HmmTopology topo(2, 3, 5);  // phone 0 = sil(5), phone 1 = 3 states
  StateGraph g = build_numerator_graph({1}, topo);
  CHECK(g.num_nodes == 4);  // start + 3 emitting
  int self_loops = 0, forward = 0;
  for (const auto& a : g.arcs) {
    if (a.src == a.dst) ++self_loops;
    else ++forward;
  }
  CHECK(self_loops == 3);
  CHECK(forward == 3);
  // exactly one node final
  int finals = 0;
  for (double w : g.final_weights) finals += (w != kLogZero);
  CHECK(finals == 1);
}

TEST_CASE("numerator graph rejects empty transcript") {
  HmmTopology topo(2, 3, 5);
  CHECK_THROWS_AS(build_numerator_graph({}, topo), Error);
}

TEST_CASE("numerator path count matches enumeration") {
  // two 3-state phones, T=6: exactly one monotone path
  HmmTopology topo(3, 3, 3);
  StateGraph g = build_numerator_graph({1, 2}, topo);
  Matrix ll = Matrix::Zero(6, topo.num_states());
  test::EnumerationResult oracle = test::enumerate_all(g, ll);
  CHECK(oracle.path_count == 1);

  // with T=8, two free self-loop slots across 6 states: C(7,5)=21 paths
  Matrix ll8 = Matrix::Zero(8, topo.num_states());
  CHECK(test::enumerate_all(g, ll8).path_count == 21);
}

TEST_CASE("denominator graph covers single-phone strings") {
  HmmTopology topo(2, 1, 1);  // two 1-state phones
  PhoneBigram lm(2);
  StateGraph g = build_denominator_graph(lm, topo);
  // T=1: each phone alone must carry mass
  Matrix ll = Matrix::Zero(1, topo.num_states());
  FBResult res = forward_backward(g, ll);
  CHECK(res.log_total < 0.0);  // proper probabilities
  CHECK(res.posteriors(0, 0) > 0.0);
  CHECK(res.posteriors(0, 1) > 0.0);
}

TEST_CASE("denominator total equals sum over per-sequence graphs") {
  // 2-state phones, T=4: only phone sequences of length 1 or 2 fit
  HmmTopology topo(2, 2, 2);
  std::vector<std::vector<int>> transcripts = {{0, 1}, {1, 0}, {0}, {1, 1}};
  PhoneBigram lm = estimate_phone_bigram(transcripts, 2);
  StateGraph den = build_denominator_graph(lm, topo);

  Rng rng = make_rng(31);
  Matrix ll = test::random_loglikes(rng, 4, topo.num_states());
  double den_total = forward_backward(den, ll).log_total;

  // oracle: for each phone sequence, numerator-chain graph with LM weights
  double acc = kLogZero;
  std::vector<std::vector<int>> seqs = {{0}, {1}, {0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (const auto& seq : seqs) {
    StateGraph g = build_numerator_graph(seq, topo);
    double lm_weight = lm.log_prob_initial(seq[0]);
    for (std::size_t i = 1; i < seq.size(); ++i)
      lm_weight += lm.log_prob(seq[i - 1], seq[i]);
    lm_weight += lm.log_prob_final(seq.back());
    try {
      acc = log_add(acc, forward_backward(g, ll).log_total + lm_weight);
    } catch (const Error&) {
      // sequence too long for T frames: contributes nothing
    }
  }
  CHECK(den_total == Catch::Approx(acc).margin(1e-9));
}

TEST_CASE("lm-weighted chunk numerator never outscores partial denominator") {
  HmmTopology topo(3, 3, 5);
  PhoneBigram lm = estimate_phone_bigram({{1, 2}, {2, 1}, {1}}, 3);
  StateGraph den = build_denominator_graph(lm, topo, /*allow_partial=*/true);
  Rng rng = make_rng(202);
  std::uniform_int_distribution<int> len_dist(4, 12);
  for (int trial = 0; trial < 30; ++trial) {
    // random plausible alignment slice, possibly starting and ending
    // mid-phone
    int T = len_dist(rng);
    std::vector<int> states;
    std::uniform_int_distribution<int> start_state(0, topo.num_states() - 1);
    int s = start_state(rng);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int t = 0; t < T; ++t) {
      states.push_back(s);
      int phone = topo.phone_of_state(s);
      int last = topo.state_offset(phone) + topo.phone_states(phone) - 1;
      if (coin(rng)) continue;              // self-loop
      if (s < last) ++s;                    // next state in phone
      else s = topo.state_offset(coin(rng) ? 1 : 2);  // new phone
    }
    StateGraph num = numerator_graph_from_alignment(states, topo, &lm);
    Matrix ll = test::random_loglikes(rng, T, topo.num_states());
    double fnum = forward_backward(num, ll).log_total;
    double fden = forward_backward(den, ll).log_total;
    CHECK(fnum <= fden + 1e-9);
  }
}

TEST_CASE("chunk numerator accepts the alignment it came from") {
  HmmTopology topo(3, 3, 5);
  std::vector<int> states = {0, 0, 1, 1, 2, 5, 5, 6, 7};
  StateGraph g = numerator_graph_from_alignment(states, topo);
  Matrix ll = Matrix::Zero(int(states.size()), topo.num_states());
  // the originating path must be representable
  FBResult res = forward_backward(g, ll);
  CHECK(res.log_total > kLogZero);
  ViterbiPath best = viterbi_best_path(g, ll);
  CHECK(int(best.states.size()) == int(states.size()));
}

TEST_CASE("graph text serialization round-trips") {
  HmmTopology topo(3, 3, 5);
  StateGraph g = build_numerator_graph({1, 0, 2}, topo);
  auto path = (std::filesystem::temp_directory_path() / "fdcae_graph.txt").string();
  save_graph(g, path);
  StateGraph l = load_graph(path);
  CHECK(l.num_nodes == g.num_nodes);
  CHECK(l.start == g.start);
  CHECK(l.num_states == g.num_states);
  REQUIRE(l.arcs.size() == g.arcs.size());
  for (std::size_t i = 0; i < g.arcs.size(); ++i) {
    CHECK(l.arcs[i].src == g.arcs[i].src);
    CHECK(l.arcs[i].dst == g.arcs[i].dst);
    CHECK(l.arcs[i].state == g.arcs[i].state);
    CHECK(l.arcs[i].weight == g.arcs[i].weight);
  }
  Rng rng = make_rng(5);
  Matrix ll = test::random_loglikes(rng, 14, topo.num_states());
  CHECK(forward_backward(l, ll).log_total ==
        Catch::Approx(forward_backward(g, ll).log_total).margin(1e-12));
  std::filesystem::remove(path);
}
