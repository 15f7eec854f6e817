// include/fdcae/embed.hpp
//
// Speaker-level auxiliary codes: a low-rank embedding from UBM sufficient
// statistics, and a compact pitch summary computed every few frames.

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
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "fdcae/common.hpp"
#include "fdcae/pitch.hpp"

namespace fdcae {

struct PcaTransform {
  Vector mean;        // input dim
  Matrix projection;  // out_dim x in_dim

  int input_dim() const { return int(projection.cols()); }
  int output_dim() const { return int(projection.rows()); }

  Matrix apply(const Matrix& rows) const {
    return (rows.rowwise() - mean.transpose()) * projection.transpose();
  }
};

/// PCA by eigendecomposition of the sample covariance. Component signs are
/// fixed so the first nonzero coefficient of each row is positive, which
/// keeps the transform reproducible across runs.
inline PcaTransform fit_pca(const Matrix& rows, int out_dim) {
  const int n = int(rows.rows()), d = int(rows.cols());
  if (out_dim <= 0 || out_dim > d)
    throw Error("fit_pca: output dim out of range");
  if (n < 2) throw Error("fit_pca: need at least two rows");

  PcaTransform pca;
  pca.mean = rows.colwise().mean();
  Matrix centered = rows.rowwise() - pca.mean.transpose();
  Matrix cov = centered.transpose() * centered / double(n - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw Error("fit_pca: eigensolver failed");

  // eigenvalues ascending; take the trailing out_dim columns, largest first
  pca.projection = Matrix(out_dim, d);
  for (int k = 0; k < out_dim; ++k) {
    Vector v = eig.eigenvectors().col(d - 1 - k);
    for (int i = 0; i < d; ++i) {
      if (std::abs(v(i)) > 1e-12) {
        if (v(i) < 0) v = -v;
        break;
      }
    }
    pca.projection.row(k) = v.transpose();
  }
  return pca;
}

struct DiagUbm {
  Vector weights;  // K
  Matrix means;    // K x D
  Matrix vars;     // K x D

  int num_components() const { return int(weights.size()); }
  int dim() const { return int(means.cols()); }

  /// Per-component log p(x, k); caller normalizes as needed.
  Vector component_log_joint(const Eigen::RowVectorXd& x) const {
    const int K = num_components();
    Vector out(K);
    for (int k = 0; k < K; ++k) {
      double ll = std::log(weights(k));
      for (int d = 0; d < dim(); ++d) {
        double diff = x(d) - means(k, d);
        ll += -0.5 * (std::log(2.0 * M_PI * vars(k, d)) +
                      diff * diff / vars(k, d));
      }
      out(k) = ll;
    }
    return out;
  }

  double frame_loglike(const Eigen::RowVectorXd& x) const {
    return log_sum_exp(component_log_joint(x));
  }
};

inline constexpr double kUbmVarFloor = 1e-3;

/// Diagonal-covariance GMM fit with k-means++ seeding and a fixed number of
/// EM iterations. Components that collapse are reseeded from a random frame.
inline DiagUbm train_diag_ubm(const Matrix& frames, int num_components,
                              std::uint64_t seed, int iterations = 10,
                              std::vector<double>* loglike_log = nullptr) {
  const int n = int(frames.rows()), d = int(frames.cols());
  if (n < num_components)
    throw Error("train_diag_ubm: fewer frames than components");

  Rng rng = make_rng(seed, 0x7562u);
  DiagUbm ubm;
  ubm.weights = Vector::Constant(num_components, 1.0 / num_components);
  ubm.means = Matrix(num_components, d);
  Vector global_var =
      ((frames.rowwise() - frames.colwise().mean()).array().square())
          .colwise()
          .mean()
          .cwiseMax(kUbmVarFloor);
  ubm.vars = global_var.transpose().replicate(num_components, 1);

  // k-means++ seeding
  std::uniform_int_distribution<int> first(0, n - 1);
  ubm.means.row(0) = frames.row(first(rng));
  Vector d2 = Vector::Constant(n, std::numeric_limits<double>::max());
  for (int k = 1; k < num_components; ++k) {
    for (int i = 0; i < n; ++i) {
      double dist = (frames.row(i) - ubm.means.row(k - 1)).squaredNorm();
      d2(i) = std::min(d2(i), dist);
    }
    std::discrete_distribution<int> pick(d2.data(), d2.data() + n);
    ubm.means.row(k) = frames.row(pick(rng));
  }

  std::uniform_int_distribution<int> any(0, n - 1);
  for (int iter = 0; iter < iterations; ++iter) {
    Vector occ = Vector::Zero(num_components);
    Matrix sum_x = Matrix::Zero(num_components, d);
    Matrix sum_x2 = Matrix::Zero(num_components, d);
    double total_ll = 0.0;
    for (int i = 0; i < n; ++i) {
      Vector lj = ubm.component_log_joint(frames.row(i));
      double norm = log_sum_exp(lj);
      total_ll += norm;
      Vector gamma = (lj.array() - norm).exp();
      occ += gamma;
      sum_x += gamma * frames.row(i);
      sum_x2 += gamma * frames.row(i).cwiseProduct(frames.row(i));
    }
    if (loglike_log) loglike_log->push_back(total_ll / n);
    for (int k = 0; k < num_components; ++k) {
      if (occ(k) < 1e-6) {
        ubm.means.row(k) = frames.row(any(rng));
        ubm.vars.row(k) = global_var.transpose();
        ubm.weights(k) = 1.0 / n;
        continue;
      }
      ubm.means.row(k) = sum_x.row(k) / occ(k);
      ubm.vars.row(k) =
          (sum_x2.row(k) / occ(k) -
           ubm.means.row(k).cwiseProduct(ubm.means.row(k)))
              .cwiseMax(kUbmVarFloor);
      ubm.weights(k) = occ(k) / n;
    }
    ubm.weights /= ubm.weights.sum();
  }
  return ubm;
}

struct SpeakerEmbedder {
  DiagUbm ubm;
  PcaTransform supervector_pca;  // (K*D) -> embedding dim
  double relevance = 10.0;       // MAP smoothing count

  int embedding_dim() const { return supervector_pca.output_dim(); }

  /// Relevance-smoothed mean-offset supervector for a bag of frames.
  Vector supervector(const Matrix& frames) const {
    const int K = ubm.num_components(), D = ubm.dim();
    Vector occ = Vector::Zero(K);
    Matrix sum_x = Matrix::Zero(K, D);
    for (int i = 0; i < int(frames.rows()); ++i) {
      Vector lj = ubm.component_log_joint(frames.row(i));
      Vector gamma = (lj.array() - log_sum_exp(lj)).exp();
      occ += gamma;
      sum_x += gamma * frames.row(i);
    }
    Vector sv(K * D);
    for (int k = 0; k < K; ++k) {
      Eigen::RowVectorXd offset =
          sum_x.row(k) / (occ(k) + relevance) -
          ubm.means.row(k) * (occ(k) / (occ(k) + relevance));
      sv.segment(k * D, D) = offset.transpose();
    }
    return sv;
  }

  Vector embed(const Matrix& frames) const {
    if (frames.rows() == 0)
      throw Error("SpeakerEmbedder: no frames for speaker");
    return supervector_pca.apply(supervector(frames).transpose())
        .row(0)
        .transpose();
  }
};

/// Fits the embedder on per-speaker frame bags: UBM over all frames pooled,
/// then PCA over the speakers' supervectors.
inline SpeakerEmbedder train_speaker_embedder(
    const std::vector<Matrix>& speaker_frames, int num_components,
    int embedding_dim, std::uint64_t seed) {
  if (speaker_frames.size() < 2)
    throw Error("train_speaker_embedder: need at least two speakers");
  long total = 0;
  for (const auto& f : speaker_frames) total += f.rows();
  if (total == 0) throw Error("train_speaker_embedder: no frames");
  Matrix pooled(total, speaker_frames.front().cols());
  long row = 0;
  for (const auto& f : speaker_frames) {
    pooled.middleRows(row, f.rows()) = f;
    row += f.rows();
  }

  SpeakerEmbedder emb;
  emb.ubm = train_diag_ubm(pooled, num_components, seed);
  Matrix svs(speaker_frames.size(), emb.ubm.num_components() * emb.ubm.dim());
  for (std::size_t s = 0; s < speaker_frames.size(); ++s)
    svs.row(s) = emb.supervector(speaker_frames[s]).transpose();
  int out_dim = std::min<int>(embedding_dim, int(speaker_frames.size()) - 1);
  out_dim = std::min(out_dim, int(svs.cols()));
  emb.supervector_pca = fit_pca(svs, out_dim);
  return emb;
}

/// Per-chunk pitch summary: mean voiced log-f0, mean log-f0 delta and mean
/// correlation strength over consecutive windows of chunk_frames frames.
/// Rows align with feature frames at the chunk rate (one row per chunk).
inline Matrix compute_pvector(const PitchTrack& track, int chunk_frames = 10) {
  if (chunk_frames <= 0) throw Error("compute_pvector: bad chunk size");
  const int T = int(track.frames.size());
  const int chunks = (T + chunk_frames - 1) / chunk_frames;
  Matrix out = Matrix::Zero(std::max(chunks, 0), 3);
  for (int c = 0; c < chunks; ++c) {
    int begin = c * chunk_frames;
    int end = std::min(T, begin + chunk_frames);
    double sum_lf0 = 0.0, sum_dlf0 = 0.0, sum_nccf = 0.0;
    int voiced = 0, dcount = 0;
    double prev_lf0 = 0.0;
    bool have_prev = false;
    for (int t = begin; t < end; ++t) {
      const auto& fr = track.frames[t];
      sum_nccf += fr.nccf;
      if (fr.voiced && fr.f0 > 0.0) {
        double lf0 = std::log(fr.f0);
        sum_lf0 += lf0;
        ++voiced;
        if (have_prev) {
          sum_dlf0 += lf0 - prev_lf0;
          ++dcount;
        }
        prev_lf0 = lf0;
        have_prev = true;
      }
    }
    out(c, 0) = voiced > 0 ? sum_lf0 / voiced : 0.0;
    out(c, 1) = dcount > 0 ? sum_dlf0 / dcount : 0.0;
    out(c, 2) = (end - begin) > 0 ? sum_nccf / (end - begin) : 0.0;
  }
  return out;
}

/// Standardizes p-vector rows in place with the given per-column stats,
/// guarding zero-variance columns.
inline void standardize_rows(Matrix& rows, const Vector& mean,
                             const Vector& stddev) {
  for (int c = 0; c < int(rows.cols()); ++c) {
    double s = std::max(stddev(c), 1e-8);
    rows.col(c) = (rows.col(c).array() - mean(c)) / s;
  }
}

struct ColumnStats {
  Vector mean;
  Vector stddev;
};

inline ColumnStats column_stats(const std::vector<Matrix>& mats) {
  long n = 0;
  for (const auto& m : mats) n += m.rows();
  if (n == 0) throw Error("column_stats: no rows");
  const int d = int(mats.front().cols());
  Vector sum = Vector::Zero(d), sum2 = Vector::Zero(d);
  for (const auto& m : mats) {
    sum += m.colwise().sum().transpose();
    sum2 += m.array().square().colwise().sum().matrix().transpose();
  }
  ColumnStats st;
  st.mean = sum / double(n);
  st.stddev =
      ((sum2 / double(n)) - st.mean.cwiseProduct(st.mean)).cwiseMax(0.0)
          .cwiseSqrt();
  return st;
}

/// Builds the per-frame auxiliary input by repeating each p-vector row for
/// its chunk and appending the utterance's speaker embedding. Either part
/// may be absent (zero columns when disabled); both absent is an error.
inline Matrix concat_aux(int num_frames, const Matrix& pvectors,
                         const Vector& speaker_embedding,
                         int chunk_frames = 10) {
  const bool has_p = pvectors.cols() > 0;
  const bool has_i = speaker_embedding.size() > 0;
  if (!has_p && !has_i) throw Error("concat_aux: no auxiliary inputs enabled");
  const int d = (has_i ? int(speaker_embedding.size()) : 0) +
                (has_p ? int(pvectors.cols()) : 0);
  Matrix out(num_frames, d);
  for (int t = 0; t < num_frames; ++t) {
    int col = 0;
    if (has_i) {
      out.row(t).segment(0, speaker_embedding.size()) =
          speaker_embedding.transpose();
      col += int(speaker_embedding.size());
    }
    if (has_p) {
      int c = std::min(t / chunk_frames, int(pvectors.rows()) - 1);
      if (c < 0) throw Error("concat_aux: empty p-vector matrix");
      out.row(t).segment(col, pvectors.cols()) = pvectors.row(c);
    }
  }
  return out;
}

// --- serialization -----------------------------------------------------

namespace embed_detail {

inline void write_matrix(std::ostream& os, const Matrix& m) {
  os << m.rows() << ' ' << m.cols() << '\n';
  os.precision(17);
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) os << m(r, c) << (c + 1 < m.cols() ? ' ' : '\n');
    if (m.cols() == 0) os << '\n';
  }
}

inline Matrix read_matrix(std::istream& is) {
  long r, c;
  if (!(is >> r >> c)) throw FormatError("embedder file: bad matrix header");
  Matrix m(r, c);
  for (long i = 0; i < r; ++i)
    for (long j = 0; j < c; ++j)
      if (!(is >> m(i, j))) throw FormatError("embedder file: short matrix");
  return m;
}

}  // namespace embed_detail

inline void save_speaker_embedder(const SpeakerEmbedder& e,
                                  const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path);
  os << "fdcae-embedder-v1\n";
  os.precision(17);
  os << e.relevance << '\n';
  embed_detail::write_matrix(os, e.ubm.weights.transpose());
  embed_detail::write_matrix(os, e.ubm.means);
  embed_detail::write_matrix(os, e.ubm.vars);
  embed_detail::write_matrix(os, e.supervector_pca.mean.transpose());
  embed_detail::write_matrix(os, e.supervector_pca.projection);
}

inline SpeakerEmbedder load_speaker_embedder(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read " + path);
  std::string magic;
  is >> magic;
  if (magic != "fdcae-embedder-v1")
    throw FormatError("not an embedder file: " + path);
  SpeakerEmbedder e;
  if (!(is >> e.relevance)) throw FormatError("embedder file: bad relevance");
  e.ubm.weights = embed_detail::read_matrix(is).row(0).transpose();
  e.ubm.means = embed_detail::read_matrix(is);
  e.ubm.vars = embed_detail::read_matrix(is);
  e.supervector_pca.mean = embed_detail::read_matrix(is).row(0).transpose();
  e.supervector_pca.projection = embed_detail::read_matrix(is);
  return e;
}

}  // namespace fdcae
