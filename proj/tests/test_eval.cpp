// tests/test_eval.cpp

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

#include "fdcae/eval.hpp"
#include "fdcae/harness.hpp"

using namespace fdcae;

namespace {

// Independent recursive edit-distance oracle with memoization.
long oracle_distance(const std::vector<int>& a, const std::vector<int>& b,
                     std::size_t i, std::size_t j,
                     std::map<std::pair<std::size_t, std::size_t>, long>& memo) {
  if (i == a.size()) return long(b.size() - j);
  if (j == b.size()) return long(a.size() - i);
  auto key = std::make_pair(i, j);
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  long best = oracle_distance(a, b, i + 1, j + 1, memo) +
              (a[i] != b[j] ? 1 : 0);
  best = std::min(best, oracle_distance(a, b, i + 1, j, memo) + 1);
  best = std::min(best, oracle_distance(a, b, i, j + 1, memo) + 1);
  memo[key] = best;
  return best;
}

long oracle_distance(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<std::pair<std::size_t, std::size_t>, long> memo;
  return oracle_distance(a, b, 0, 0, memo);
}

}  // namespace

TEST_CASE("edit distance examples") {
  CHECK(edit_distance({}, {}) == 0);
  CHECK(edit_distance({1, 2, 3}, {1, 2, 3}) == 0);
  CHECK(edit_distance({1, 2, 3}, {}) == 3);
  CHECK(edit_distance({1, 2, 3}, {1, 3}) == 1);        // deletion
  CHECK(edit_distance({1, 3}, {1, 2, 3}) == 1);        // insertion
  CHECK(edit_distance({1, 2, 3}, {1, 4, 3}) == 1);     // substitution
  CHECK(edit_distance({1, 2, 3, 4}, {4, 3, 2, 1}) == 4);
}

TEST_CASE("edit distance matches recursive oracle") {
  Rng rng = make_rng(42);
  std::uniform_int_distribution<int> len(0, 8), sym(0, 4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> a(len(rng)), b(len(rng));
    for (int& x : a) x = sym(rng);
    for (int& x : b) x = sym(rng);
    CHECK(edit_distance(a, b) == oracle_distance(a, b));
  }
}

TEST_CASE("phone error rate pools edits over the corpus") {
  std::vector<std::vector<int>> refs = {{1, 2, 3, 4}, {5, 6}};
  std::vector<std::vector<int>> hyps = {{1, 2, 3, 4}, {5, 7, 8}};
  // 1 substitution + 1 insertion over 6 reference phones
  CHECK(phone_error_rate(refs, hyps) == Catch::Approx(100.0 * 2 / 6));
  CHECK(phone_error_rate({{1}}, {{1}}) == 0.0);
  CHECK_THROWS_AS(phone_error_rate({{1}}, {}), Error);
  CHECK_THROWS_AS(phone_error_rate({{}}, {{1}}), Error);
}

TEST_CASE("state runs collapse to phone strings") {
  HmmTopology topo(3, 2, 2);  // states: sil 0-1, phone1 2-3, phone2 4-5
  std::vector<int> states = {0, 0, 1, 2, 2, 3, 4, 5, 0, 1};
  CHECK(states_to_phones(states, topo) == std::vector<int>{1, 2});
  CHECK(states_to_phones(states, topo, false) ==
        std::vector<int>{0, 1, 2, 0});
  // re-entering the same phone starts a new segment
  std::vector<int> twice = {2, 3, 2, 3};
  CHECK(states_to_phones(twice, topo) == std::vector<int>{1, 1});
  CHECK(states_to_phones({}, topo).empty());
}

TEST_CASE("decoding recovers a strongly cued phone sequence") {
  HmmTopology topo(3, 2, 2);
  PhoneBigram lm = estimate_phone_bigram({{1, 2}, {2, 1}}, 3);
  StateGraph den = build_denominator_graph(lm, topo);
  std::vector<int> path_states = {0, 1, 2, 3, 4, 5, 0, 1};
  Matrix scores = Matrix::Constant(int(path_states.size()),
                                   topo.num_states(), -8.0);
  for (int t = 0; t < int(path_states.size()); ++t)
    scores(t, path_states[t]) = 0.0;
  CHECK(decode_utterance(scores, den, topo) == std::vector<int>{1, 2});
}

TEST_CASE("shifted test sets preserve id and duration") {
  SpeakerProfile sp;
  sp.base_f0 = 200.0;
  PhoneInventory inv;
  Waveform w = synth_utterance(sp, {0, 1, 2, 0}, inv, 7);
  auto shifted = make_shifted_testset("utt", w, {0, 300, 500});
  REQUIRE(shifted.size() == 3);
  CHECK(shifted[0].cents == 0);
  CHECK(shifted[0].wave.samples == w.samples);  // passthrough
  for (const auto& s : shifted) {
    CHECK(s.utt_id == "utt");
    CHECK(std::abs(int(s.wave.samples.size()) - int(w.samples.size())) <
          int(0.01 * w.samples.size()) + 1);
  }
}

TEST_CASE("condition names parse") {
  ConditionSpec s = parse_condition("fdcae:i+p");
  CHECK(s.autoencoder);
  CHECK(s.aux == AuxMode::kSpeakerPitch);
  s = parse_condition("baseline:none");
  CHECK_FALSE(s.autoencoder);
  CHECK(s.aux == AuxMode::kNone);
  CHECK_THROWS_AS(parse_condition("fdcae"), Error);
  CHECK_THROWS_AS(parse_condition("mlp:i"), Error);

  CHECK(aux_dim_for(parse_condition("baseline:none"), 16) == 0);
  CHECK(aux_dim_for(parse_condition("fdcae:i"), 16) == 16);
  CHECK(aux_dim_for(parse_condition("fdcae:p"), 16) == 3);
  CHECK(aux_dim_for(parse_condition("fdcae:i+p"), 16) == 19);
}

TEST_CASE("experiment pipeline smoke run") {
  auto work = std::filesystem::temp_directory_path() / "fdcae_smoke";
  std::filesystem::remove_all(work);

  HarnessConfig cfg;
  cfg.seed = 5;
  cfg.corpus.adult_male_speakers = 2;
  cfg.corpus.adult_female_speakers = 2;
  cfg.corpus.utts_per_adult = 2;
  cfg.corpus.child_train_speakers = 1;
  cfg.corpus.child_test_speakers = 1;
  cfg.corpus.child_train_utts = 2;
  cfg.corpus.child_test_utts = 2;
  cfg.corpus.accent_train_speakers = 1;
  cfg.corpus.accent_test_speakers = 1;
  cfg.corpus.accent_utts = 2;
  cfg.corpus.min_phones = 4;
  cfg.corpus.max_phones = 6;
  cfg.gmm.iterations = 6;
  cfg.gmm.split_iterations = {3};
  cfg.ubm_components = 8;
  cfg.embed_dim = 4;
  cfg.frame_pca_dim = 20;
  cfg.hidden_dim = 16;
  cfg.tdnn_layers = 2;
  cfg.bottleneck_dim = 12;
  cfg.decoder_hidden = 16;
  cfg.epochs = 1;
  cfg.shifts = {0, 300};
  cfg.seeds = {1};
  cfg.conditions = {"baseline:none", "fdcae:i+p"};
  cfg.adapt_condition = "fdcae:i+p";

  PreparedData data = prepare_data(cfg, work.string());
  CHECK(data.train.size() == 8 * 3);  // tripled
  CHECK(data.tests.at(0).size() == 2);
  CHECK_FALSE(data.pitch_stats.empty());
  for (const auto& u : data.train) {
    CHECK(u.states.size() == std::size_t(u.clean.rows()));
    CHECK(u.spliced.cols() == u.clean.cols() * 7);
    CHECK(u.ivec.size() == data.embedder.embedding_dim());
  }

  MatrixResult result = run_matrix(data, cfg);
  REQUIRE(result.rows.size() == 2 * 1 * 2);  // conditions x seeds x shifts
  for (const auto& r : result.rows) {
    CHECK(r.per >= 0.0);
    CHECK(std::isfinite(r.per));
  }
  REQUIRE(result.adapt_rows.size() == 2);
  CHECK(result.adapt_rows[0].domain == "in-domain");
  CHECK(result.adapt_rows[1].domain == "accent");

  auto report = (work / "report").string();
  emit_report(result, data, cfg, report);
  for (const char* f : {"results.csv", "summary.csv", "adapt.csv",
                        "loss_curves.csv", "pitch_stats.csv", "config.echo"})
    CHECK(std::filesystem::exists(report + "/" + std::string(f)));

  // results.csv has a header plus one line per row
  std::ifstream is(report + "/results.csv");
  int lines = 0;
  std::string line;
  while (std::getline(is, line)) ++lines;
  CHECK(lines == 1 + int(result.rows.size()));

  std::filesystem::remove_all(work);
}
