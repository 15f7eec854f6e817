// include/fdcae/eval.hpp
//
// Phone decoding and scoring: best-path search over the phone-bigram graph,
// collapsing state runs to phone strings, and edit-distance phone error
// rate. Also builds pitch-shifted copies of a test set.

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

#include "fdcae/augment.hpp"
#include "fdcae/corpus.hpp"
#include "fdcae/graph.hpp"
#include "fdcae/hmm.hpp"

namespace fdcae {

/// Collapses a decoded state sequence into phone labels. A new phone
/// segment starts when the phone changes or when the state index steps
/// backwards (a fresh entry into the same phone).
inline std::vector<int> states_to_phones(const std::vector<int>& states,
                                         const HmmTopology& topo,
                                         bool strip_sil = true) {
  std::vector<int> phones;
  int prev_phone = -1, prev_state = -1;
  for (int s : states) {
    int p = topo.phone_of_state(s);
    if (p != prev_phone || s < prev_state) phones.push_back(p);
    prev_phone = p;
    prev_state = s;
  }
  if (strip_sil) {
    std::vector<int> kept;
    for (int p : phones)
      if (p != PhoneInventory::kSil) kept.push_back(p);
    return kept;
  }
  return phones;
}

/// Best-path phone decoding of frame scores over the bigram graph.
inline std::vector<int> decode_utterance(const Matrix& frame_scores,
                                         const StateGraph& den,
                                         const HmmTopology& topo) {
  ViterbiPath path = viterbi_best_path(den, frame_scores);
  return states_to_phones(path.states, topo);
}

/// Levenshtein distance between phone strings.
inline long edit_distance(const std::vector<int>& ref,
                          const std::vector<int>& hyp) {
  const std::size_t R = ref.size(), H = hyp.size();
  std::vector<long> prev(H + 1), cur(H + 1);
  for (std::size_t j = 0; j <= H; ++j) prev[j] = long(j);
  for (std::size_t i = 1; i <= R; ++i) {
    cur[0] = long(i);
    for (std::size_t j = 1; j <= H; ++j) {
      long sub = prev[j - 1] + (ref[i - 1] != hyp[j - 1] ? 1 : 0);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[H];
}

/// Corpus-level phone error rate in percent: total edits over total
/// reference length.
inline double phone_error_rate(const std::vector<std::vector<int>>& refs,
                               const std::vector<std::vector<int>>& hyps) {
  if (refs.size() != hyps.size())
    throw Error("phone_error_rate: ref/hyp count mismatch");
  long edits = 0, ref_len = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    edits += edit_distance(refs[i], hyps[i]);
    ref_len += long(refs[i].size());
  }
  if (ref_len == 0) throw Error("phone_error_rate: empty reference");
  return 100.0 * double(edits) / double(ref_len);
}

/// Strips silence from a transcript, for scoring references.
inline std::vector<int> strip_silence(const std::vector<int>& transcript) {
  std::vector<int> out;
  for (int p : transcript)
    if (p != PhoneInventory::kSil) out.push_back(p);
  return out;
}

struct ShiftedUtterance {
  std::string utt_id;
  int cents = 0;
  Waveform wave;
};

/// Pitch-shifted copies of a test waveform at the requested offsets;
/// 0 cents passes the input through unchanged.
inline std::vector<ShiftedUtterance> make_shifted_testset(
    const std::string& utt_id, const Waveform& wave,
    const std::vector<int>& cents_list) {
  std::vector<ShiftedUtterance> out;
  for (int cents : cents_list) {
    ShiftedUtterance s;
    s.utt_id = utt_id;
    s.cents = cents;
    s.wave = cents == 0 ? wave : pitch_shift_cents(wave, cents);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace fdcae
