// fdcae/mfcc.hpp

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

#include <unsupported/Eigen/FFT>

#include <complex>
#include <vector>

#include "fdcae/common.hpp"
#include "fdcae/wav.hpp"

namespace fdcae {

enum class FeatureKind { mfcc };

struct FeatureMatrix {
  Matrix frames;  // T x D
  double frame_shift_ms = 10.0;
  double frame_length_ms = 25.0;
  FeatureKind kind = FeatureKind::mfcc;

  int num_frames() const { return int(frames.rows()); }
  int dim() const { return int(frames.cols()); }
};

// High-resolution raw MFCCs: num_ceps == num_mel_bins, no liftering.
struct MfccConfig {
  int num_mel_bins = 40;
  int num_ceps = 40;
  double preemph = 0.97;
  double frame_length_ms = 25.0;
  double frame_shift_ms = 10.0;
  double low_freq = 20.0;
  double high_freq = 0.0;  // 0 means Nyquist
  double log_floor = 1e-10;
};

inline int frame_count(std::size_t num_samples, int window, int shift) {
  if (num_samples < std::size_t(window)) return 0;
  return int((num_samples - window) / shift) + 1;
}

namespace mfcc_detail {

inline double hz_to_mel(double hz) { return 1127.0 * std::log1p(hz / 700.0); }
inline double mel_to_hz(double mel) {
  return 700.0 * (std::exp(mel / 1127.0) - 1.0);
}

inline int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Triangular mel filterbank over the one-sided power spectrum.
// Rows: mel bins; cols: FFT bins 0..nfft/2.
inline Matrix mel_bank(int num_bins, int nfft, int sample_rate, double low_freq,
                       double high_freq) {
  if (high_freq <= 0.0) high_freq = sample_rate / 2.0;
  int nbins = nfft / 2 + 1;
  double mel_lo = hz_to_mel(low_freq), mel_hi = hz_to_mel(high_freq);
  double mel_step = (mel_hi - mel_lo) / (num_bins + 1);
  Matrix bank = Matrix::Zero(num_bins, nbins);
  for (int b = 0; b < num_bins; ++b) {
    double left = mel_lo + b * mel_step;
    double center = left + mel_step;
    double right = center + mel_step;
    for (int k = 0; k < nbins; ++k) {
      double mel = hz_to_mel(double(k) * sample_rate / nfft);
      if (mel > left && mel < right) {
        bank(b, k) = mel <= center ? (mel - left) / mel_step
                                   : (right - mel) / mel_step;
      }
    }
  }
  return bank;
}

// Orthonormal type-II DCT matrix, num_ceps x num_bins.
inline Matrix dct_matrix(int num_ceps, int num_bins) {
  Matrix dct(num_ceps, num_bins);
  double norm0 = std::sqrt(1.0 / num_bins);
  double norm = std::sqrt(2.0 / num_bins);
  for (int k = 0; k < num_ceps; ++k)
    for (int n = 0; n < num_bins; ++n)
      dct(k, n) = (k == 0 ? norm0 : norm) *
                  std::cos(M_PI / num_bins * (n + 0.5) * k);
  return dct;
}

}  // namespace mfcc_detail

inline FeatureMatrix extract_mfcc(const Waveform& w, const MfccConfig& cfg) {
  const int window = int(std::lround(cfg.frame_length_ms * 1e-3 * w.sample_rate));
  const int shift = int(std::lround(cfg.frame_shift_ms * 1e-3 * w.sample_rate));
  const int T = frame_count(w.samples.size(), window, shift);
  if (T == 0)
    throw Error("extract_mfcc: waveform shorter than one window");

  const int nfft = mfcc_detail::next_pow2(window);
  const Matrix bank = mfcc_detail::mel_bank(cfg.num_mel_bins, nfft,
                                            w.sample_rate, cfg.low_freq,
                                            cfg.high_freq);
  const Matrix dct = mfcc_detail::dct_matrix(cfg.num_ceps, cfg.num_mel_bins);

  Vector ham(window);
  for (int n = 0; n < window; ++n)
    ham(n) = 0.54 - 0.46 * std::cos(2.0 * M_PI * n / (window - 1));

  Eigen::FFT<double> fft;
  FeatureMatrix out;
  out.frames.resize(T, cfg.num_ceps);
  out.frame_shift_ms = cfg.frame_shift_ms;
  out.frame_length_ms = cfg.frame_length_ms;

  std::vector<double> buf(nfft, 0.0);
  std::vector<std::complex<double>> spec;
  for (int t = 0; t < T; ++t) {
    const int off = t * shift;
    // pre-emphasis within the frame, then window
    for (int n = 0; n < window; ++n) {
      double prev = (off + n > 0) ? w.samples[off + n - 1] : w.samples[0];
      buf[n] = (w.samples[off + n] - cfg.preemph * prev) * ham(n);
    }
    std::fill(buf.begin() + window, buf.end(), 0.0);
    fft.fwd(spec, buf);

    Vector power(nfft / 2 + 1);
    for (int k = 0; k <= nfft / 2; ++k) power(k) = std::norm(spec[k]);
    Vector logmel = (bank * power).array().max(cfg.log_floor).log();
    out.frames.row(t) = (dct * logmel).transpose();
  }
  return out;
}

/// Splice each frame with its left/right context; edges replicate.
inline FeatureMatrix splice_context(const FeatureMatrix& f, int left = 3,
                                    int right = 3) {
  const int T = f.num_frames(), D = f.dim();
  FeatureMatrix out = f;
  out.frames.resize(T, D * (left + right + 1));
  for (int t = 0; t < T; ++t) {
    int col = 0;
    for (int o = -left; o <= right; ++o) {
      int src = std::clamp(t + o, 0, T - 1);
      out.frames.block(t, col, 1, D) = f.frames.row(src);
      col += D;
    }
  }
  return out;
}

// Flat binary cache for per-utterance feature/aux matrices:
// magic, rows, cols as int64 then row-major doubles.
inline void save_matrix(const Matrix& m, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("save_matrix: cannot open " + path);
  std::int64_t hdr[3] = {0x4d464443, m.rows(), m.cols()};
  os.write(reinterpret_cast<const char*>(hdr), sizeof(hdr));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    os.write(reinterpret_cast<const char*>(m.row(r).eval().data()),
             sizeof(double) * m.cols());
  if (!os) throw Error("save_matrix: write failed " + path);
}

inline Matrix load_matrix(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("load_matrix: cannot open " + path);
  std::int64_t hdr[3];
  is.read(reinterpret_cast<char*>(hdr), sizeof(hdr));
  if (!is || hdr[0] != 0x4d464443)
    throw FormatError("load_matrix: bad header in " + path);
  Matrix m(hdr[1], hdr[2]);
  std::vector<double> row(hdr[2]);
  for (std::int64_t r = 0; r < hdr[1]; ++r) {
    is.read(reinterpret_cast<char*>(row.data()), sizeof(double) * hdr[2]);
    for (std::int64_t c = 0; c < hdr[2]; ++c) m(r, c) = row[c];
  }
  if (!is) throw FormatError("load_matrix: truncated file " + path);
  return m;
}

}  // namespace fdcae
