// fdcae/augment.hpp

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
#include <vector>

#include "fdcae/common.hpp"
#include "fdcae/wav.hpp"

namespace fdcae {

namespace augment_detail {

inline double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  return std::sin(M_PI * x) / (M_PI * x);
}

// Windowed-sinc interpolation of x at fractional position p; cutoff fc<=1
// applied when downsampling.
inline double interp(const std::vector<double>& x, double p, double fc,
                     int half_taps) {
  const int n = int(x.size());
  int lo = int(std::floor(p)) - half_taps + 1;
  int hi = int(std::floor(p)) + half_taps;
  double acc = 0.0;
  const double span = half_taps / fc;
  for (int k = std::max(0, lo); k <= std::min(n - 1, hi); ++k) {
    double d = p - k;
    double win = 0.5 + 0.5 * std::cos(M_PI * d / span);  // Hann over taps
    acc += x[k] * fc * sinc(fc * d) * win;
  }
  return acc;
}

}  // namespace augment_detail

/// Resample so that playback speed is multiplied by `factor`: duration scales
/// by 1/factor and every frequency by factor.
inline Waveform speed_perturb(const Waveform& w, double factor) {
  if (factor == 1.0) return w;
  Waveform out;
  out.sample_rate = w.sample_rate;
  const double fc = std::min(1.0, 1.0 / factor);
  const std::size_t n_out = std::size_t(w.samples.size() / factor);
  out.samples.resize(n_out);
  for (std::size_t i = 0; i < n_out; ++i)
    out.samples[i] = augment_detail::interp(w.samples, i * factor, fc, 8);
  return out;
}

inline Waveform volume_perturb(const Waveform& w, double gain) {
  Waveform out = w;
  for (double& s : out.samples) s = std::clamp(s * gain, -1.0, 1.0);
  return out;
}

/// WSOLA time stretch: output duration = input duration * stretch, pitch
/// unchanged. 20 ms segments, 50% overlap-add, +-search_ms alignment search.
inline Waveform wsola_stretch(const Waveform& w, double stretch,
                              double segment_ms = 20.0,
                              double search_ms = 5.0) {
  const int sr = w.sample_rate;
  const int seg = std::max(32, int(std::lround(segment_ms * 1e-3 * sr)) & ~1);
  const int hop = seg / 2;
  const int search = int(std::lround(search_ms * 1e-3 * sr));
  const int n_in = int(w.samples.size());
  const int n_out = int(std::lround(n_in * stretch));

  Waveform out;
  out.sample_rate = sr;
  if (n_in < seg + 2 * search + hop) {
    // too short for aligned overlap-add; nearest-sample remap
    out.samples.resize(n_out);
    for (int i = 0; i < n_out; ++i) {
      int j = std::min(n_in - 1, int(i / stretch));
      out.samples[i] = w.samples[std::max(0, j)];
    }
    return out;
  }

  std::vector<double> acc(n_out + seg, 0.0), norm(n_out + seg, 0.0);
  std::vector<double> win(seg);
  for (int i = 0; i < seg; ++i)
    win[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / seg);

  auto add_segment = [&](int in_start, int out_start) {
    for (int i = 0; i < seg; ++i) {
      int oi = out_start + i;
      if (oi < 0 || oi >= int(acc.size())) continue;
      acc[oi] += w.samples[in_start + i] * win[i];
      norm[oi] += win[i];
    }
  };

  int prev_start = 0;
  add_segment(0, 0);
  for (int k = 1;; ++k) {
    const int out_pos = k * hop;
    if (out_pos >= n_out) break;
    // natural continuation of the previously chosen segment
    const int natural = prev_start + hop;
    const int target = int(std::lround(out_pos / stretch));
    int lo = std::clamp(target - search, 0, n_in - seg);
    int hi = std::clamp(target + search, 0, n_in - seg);
    int best = lo;
    double best_score = -1e300;
    if (natural + seg <= n_in) {
      for (int s = lo; s <= hi; ++s) {
        double dot = 0.0;
        for (int i = 0; i < seg; i += 2)  // stride 2: enough for alignment
          dot += w.samples[s + i] * w.samples[natural + i];
        if (dot > best_score) {
          best_score = dot;
          best = s;
        }
      }
    } else {
      best = std::clamp(target, 0, n_in - seg);
    }
    add_segment(best, out_pos);
    prev_start = best;
  }

  out.samples.resize(n_out);
  for (int i = 0; i < n_out; ++i)
    out.samples[i] = norm[i] > 1e-6 ? acc[i] / norm[i] : 0.0;
  return out;
}

/// Shift the fundamental by 2^(cents/1200) while preserving duration within
/// 1%: resample to move pitch, then WSOLA back to the original duration.
inline Waveform pitch_shift_cents(const Waveform& w, int cents) {
  if (cents < -1200 || cents > 1200)
    throw Error("pitch_shift_cents: cents out of [-1200, 1200]");
  if (cents == 0) return w;
  const double r = std::pow(2.0, cents / 1200.0);
  Waveform shifted = speed_perturb(w, r);  // pitch * r, duration / r
  Waveform out = wsola_stretch(shifted, double(w.samples.size()) /
                                            double(shifted.samples.size()));
  return out;
}

}  // namespace fdcae
