// fdcae/pitch.hpp

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
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "fdcae/common.hpp"
#include "fdcae/wav.hpp"

namespace fdcae {

struct PitchFrame {
  double f0 = 0.0;    // Hz; 0 when unvoiced
  double nccf = 0.0;  // in [-1, 1]
  bool voiced = false;
};

struct PitchTrack {
  std::vector<PitchFrame> frames;
  double frame_shift_ms = 10.0;

  int num_voiced() const {
    int n = 0;
    for (const auto& f : frames) n += f.voiced;
    return n;
  }
};

struct PitchConfig {
  double min_f0 = 50.0;
  double max_f0 = 500.0;
  double window_ms = 25.0;
  double frame_shift_ms = 10.0;
  double voicing_threshold = 0.5;
  double transition_weight = 5.0;   // cost weight on |log f0(t) - log f0(t-1)|
  double voicing_switch_cost = 0.2;
  double octave_bias = 0.02;  // per-octave preference for shorter lags
  int max_candidates = 6;
};

/// NCCF(tau) = sum x[n]x[n+tau] / sqrt(sum x[n]^2 * sum x[n+tau]^2 + eps),
/// clamped to [-1, 1]. Zero-energy frames give 0.
inline double nccf(const std::vector<double>& frame, int lag) {
  const int n = int(frame.size()) - lag;
  if (lag < 0 || n <= 0) throw Error("nccf: lag must be < frame length");
  double num = 0.0, e0 = 0.0, e1 = 0.0;
  for (int i = 0; i < n; ++i) {
    num += frame[i] * frame[i + lag];
    e0 += frame[i] * frame[i];
    e1 += frame[i + lag] * frame[i + lag];
  }
  double denom = std::sqrt(e0 * e1 + 1e-12);
  if (e0 == 0.0 || e1 == 0.0) return 0.0;
  return std::clamp(num / denom, -1.0, 1.0);
}

namespace pitch_detail {

struct Candidate {
  double lag;   // fractional samples
  double nccf;
};

// Local NCCF maxima with parabolic lag refinement.
inline std::vector<Candidate> frame_candidates(const std::vector<double>& buf,
                                               int win, int min_lag,
                                               int max_lag, int max_cands) {
  std::vector<double> c(max_lag + 1, 0.0);
  double e0 = 0.0;
  for (int i = 0; i < win; ++i) e0 += buf[i] * buf[i];
  if (e0 < 1e-14) return {};
  for (int lag = min_lag; lag <= max_lag; ++lag) {
    double num = 0.0, e1 = 0.0;
    for (int i = 0; i < win; ++i) {
      num += buf[i] * buf[i + lag];
      e1 += buf[i + lag] * buf[i + lag];
    }
    c[lag] = num / std::sqrt(e0 * e1 + 1e-12);
  }
  std::vector<Candidate> cands;
  for (int lag = min_lag + 1; lag < max_lag; ++lag) {
    if (c[lag] >= c[lag - 1] && c[lag] >= c[lag + 1] && c[lag] > 0.0) {
      // parabolic interpolation around the peak
      double denom = c[lag - 1] - 2.0 * c[lag] + c[lag + 1];
      double delta = std::abs(denom) > 1e-12
                         ? 0.5 * (c[lag - 1] - c[lag + 1]) / denom
                         : 0.0;
      delta = std::clamp(delta, -0.5, 0.5);
      double peak = c[lag] - 0.25 * (c[lag - 1] - c[lag + 1]) * delta;
      cands.push_back({lag + delta, std::clamp(peak, -1.0, 1.0)});
    }
  }
  std::sort(cands.begin(), cands.end(),
            [](const Candidate& a, const Candidate& b) { return a.nccf > b.nccf; });
  if (int(cands.size()) > max_cands) cands.resize(max_cands);
  return cands;
}

}  // namespace pitch_detail

/// NCCF candidate extraction per 10 ms frame followed by Viterbi smoothing
/// over {candidates + unvoiced} with an octave-jump penalty.
inline PitchTrack track_pitch(const Waveform& w, const PitchConfig& cfg = {}) {
  const int sr = w.sample_rate;
  const int win = int(std::lround(cfg.window_ms * 1e-3 * sr));
  const int shift = int(std::lround(cfg.frame_shift_ms * 1e-3 * sr));
  const int min_lag = std::max(2, int(sr / cfg.max_f0));
  const int max_lag = int(sr / cfg.min_f0);
  const int need = win + max_lag;

  PitchTrack track;
  track.frame_shift_ms = cfg.frame_shift_ms;
  if (int(w.samples.size()) < need) return track;
  const int T = int((w.samples.size() - need) / shift) + 1;

  // Per frame: candidate list; state index cands.size() is "unvoiced".
  std::vector<std::vector<pitch_detail::Candidate>> cands(T);
  std::vector<double> buf(need);
  for (int t = 0; t < T; ++t) {
    const int off = t * shift;
    std::copy(w.samples.begin() + off, w.samples.begin() + off + need,
              buf.begin());
    double mean = 0.0;
    for (int i = 0; i < need; ++i) mean += buf[i];
    mean /= need;
    for (int i = 0; i < need; ++i) buf[i] -= mean;
    cands[t] = pitch_detail::frame_candidates(buf, win, min_lag, max_lag,
                                              cfg.max_candidates);
  }

  // Viterbi: maximize sum of candidate NCCF minus transition costs.
  std::vector<std::vector<double>> score(T);
  std::vector<std::vector<int>> back(T);
  // Subharmonic lags correlate as well as the true period; bias toward the
  // shorter lag to avoid octave-down errors.
  auto state_score = [&](int t, int s) {
    if (s >= int(cands[t].size())) return cfg.voicing_threshold;
    return cands[t][s].nccf -
           cfg.octave_bias * std::log2(cands[t][s].lag / double(min_lag));
  };
  auto state_logf0 = [&](int t, int s) {
    return s < int(cands[t].size()) ? std::log(sr / cands[t][s].lag) : 0.0;
  };
  for (int t = 0; t < T; ++t) {
    const int S = int(cands[t].size()) + 1;
    score[t].assign(S, 0.0);
    back[t].assign(S, -1);
    for (int s = 0; s < S; ++s) {
      if (t == 0) {
        score[t][s] = state_score(t, s);
        continue;
      }
      double best = -1e300;
      int best_prev = 0;
      const int Sp = int(cands[t - 1].size()) + 1;
      for (int p = 0; p < Sp; ++p) {
        bool v_now = s < int(cands[t].size());
        bool v_prev = p < int(cands[t - 1].size());
        double cost = 0.0;
        if (v_now && v_prev)
          cost = cfg.transition_weight *
                 std::abs(state_logf0(t, s) - state_logf0(t - 1, p));
        else if (v_now != v_prev)
          cost = cfg.voicing_switch_cost;
        double val = score[t - 1][p] - cost;
        if (val > best) {
          best = val;
          best_prev = p;
        }
      }
      score[t][s] = best + state_score(t, s);
      back[t][s] = best_prev;
    }
  }

  std::vector<int> path(T);
  path[T - 1] = int(std::max_element(score[T - 1].begin(), score[T - 1].end()) -
                    score[T - 1].begin());
  for (int t = T - 1; t > 0; --t) path[t - 1] = back[t][path[t]];

  track.frames.resize(T);
  for (int t = 0; t < T; ++t) {
    PitchFrame& f = track.frames[t];
    int s = path[t];
    if (s < int(cands[t].size())) {
      double f0 = sr / cands[t][s].lag;
      f.nccf = cands[t][s].nccf;
      if (f.nccf >= cfg.voicing_threshold && f0 >= cfg.min_f0 &&
          f0 <= cfg.max_f0) {
        f.f0 = f0;
        f.voiced = true;
      }
    } else {
      f.nccf = cands[t].empty() ? 0.0 : cands[t][0].nccf;
    }
  }
  return track;
}

struct SpeakerPitchStats {
  std::string speaker_id;
  double mean_f0 = 0.0;
  std::map<int, int> histogram;  // bin index (25 Hz wide) -> voiced frames
};

constexpr double kPitchHistBinHz = 25.0;

/// Mean voiced f0 and a 25 Hz histogram per speaker. Speakers with no
/// voiced frames are excluded.
inline std::vector<SpeakerPitchStats> compute_speaker_pitch_stats(
    const std::vector<std::pair<std::string, PitchTrack>>& tracks) {
  std::map<std::string, SpeakerPitchStats> by_spk;
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& [spk, track] : tracks) {
    for (const auto& f : track.frames) {
      if (!f.voiced) continue;
      acc[spk].first += f.f0;
      acc[spk].second += 1;
      by_spk[spk].histogram[int(f.f0 / kPitchHistBinHz)] += 1;
    }
  }
  std::vector<SpeakerPitchStats> out;
  for (auto& [spk, st] : by_spk) {
    st.speaker_id = spk;
    st.mean_f0 = acc[spk].first / acc[spk].second;
    out.push_back(st);
  }
  return out;
}

}  // namespace fdcae
