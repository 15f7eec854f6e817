// include/fdcae/harness.hpp
//
// End-to-end experiment driver: synthesizes the corpus, extracts features
// and pitch codes, trains the alignment model, runs the condition matrix
// (baseline vs autoencoder, each auxiliary-code mode) over several seeds,
// scores pitch-shifted test sets, and writes the CSV reports.

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

#include <iomanip>
#include <sstream>

#include "fdcae/corpus.hpp"
#include "fdcae/embed.hpp"
#include "fdcae/eval.hpp"
#include "fdcae/train.hpp"

namespace fdcae {

struct HarnessConfig {
  CorpusConfig corpus;
  std::uint64_t seed = 1;

  // features
  MfccConfig mfcc;
  int splice_left = 3, splice_right = 3;

  // pitch codes
  PitchConfig pitch;
  int pvector_chunk = 10;

  // alignment model
  ViterbiTrainOptions gmm;

  // speaker embedding
  int frame_pca_dim = 40;
  int ubm_components = 64;
  int embed_dim = 16;

  // acoustic model
  int hidden_dim = 128;
  int tdnn_layers = 8;
  int bottleneck_dim = 128;
  int decoder_hidden = 128;
  int chunk_frames = 150;
  int epochs = 4;
  double lr = 1e-3;
  double alpha = 5.0;
  double beta = 5e-14;
  double beta_effective = -1.0;  // >= 0 overrides beta in training

  // evaluation
  std::vector<int> shifts = {0, 300, 400, 500};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::vector<std::string> conditions = {
      "baseline:none", "baseline:i", "baseline:p", "baseline:i+p",
      "fdcae:i",       "fdcae:p",    "fdcae:i+p"};
  std::string adapt_condition = "fdcae:i+p";

  double effective_beta() const {
    return beta_effective >= 0.0 ? beta_effective : beta;
  }
};

struct PreparedUtt {
  std::string utt_id;
  std::string speaker_id;
  std::vector<int> transcript;  // phone ids, with boundary sil
  Matrix clean;                 // T x ceps
  Matrix spliced;               // T x ceps * (left + 1 + right)
  Matrix pvec;                  // chunks x 3, standardized
  Vector ivec;                  // speaker code
  std::vector<int> states;      // alignment (training splits only)
};

struct PreparedData {
  PhoneInventory inv;
  HmmTopology topo{PhoneInventory{}};
  PhoneBigram lm{0};
  StateGraph den_train;   // partial-phone entries, for chunk training
  StateGraph den_decode;  // whole phones only
  GmmHmmModel gmm{HmmTopology{PhoneInventory{}}};
  PcaTransform frame_pca;
  SpeakerEmbedder embedder;
  ColumnStats pvec_stats;
  ColumnStats recon_stats;  // clean-feature scaling for decoder targets
  std::vector<PreparedUtt> train;
  std::vector<PreparedUtt> adapt_in;      // in-domain children
  std::vector<PreparedUtt> adapt_accent;  // accented children
  std::map<int, std::vector<PreparedUtt>> tests;  // shift cents -> utterances
  std::vector<PreparedUtt> accent_test;
  std::vector<SpeakerPitchStats> pitch_stats;
};

namespace harness_detail {

inline Matrix pvector_or_zero(const Waveform& w, const HarnessConfig& cfg) {
  PitchTrack track = track_pitch(w, cfg.pitch);
  Matrix pv = compute_pvector(track, cfg.pvector_chunk);
  if (pv.rows() == 0) pv = Matrix::Zero(1, 3);
  return pv;
}

inline PreparedUtt featurize(const UtteranceRecord& rec, const Waveform& w,
                             const PhoneInventory& inv,
                             const HarnessConfig& cfg) {
  PreparedUtt u;
  u.utt_id = rec.utt_id;
  u.speaker_id = rec.speaker_id;
  for (const auto& sym : rec.transcript) u.transcript.push_back(inv.index(sym));
  FeatureMatrix feats = extract_mfcc(w, cfg.mfcc);
  u.clean = feats.frames;
  u.spliced = splice_context(feats, cfg.splice_left, cfg.splice_right).frames;
  u.pvec = pvector_or_zero(w, cfg);
  return u;
}

inline void align_all(std::vector<PreparedUtt>& utts, const GmmHmmModel& gmm) {
  for (auto& u : utts)
    u.states = force_align(gmm, u.clean, u.transcript).states;
}

}  // namespace harness_detail

/// Runs every stage up to (but not including) network training. Deterministic
/// for a fixed config; artifacts land under work_dir.
inline PreparedData prepare_data(const HarnessConfig& cfg,
                                 const std::string& work_dir) {
  PreparedData data;
  data.topo = HmmTopology(data.inv);

  CorpusConfig corpus_cfg = cfg.corpus;
  corpus_cfg.seed = cfg.seed;
  corpus_cfg.out_dir = work_dir + "/corpus";
  CorpusSet corpus = build_corpus(corpus_cfg, data.inv);

  Manifest train_manifest = triple_with_perturbation(
      corpus.adult_train, corpus_cfg.out_dir + "/wav_sp", cfg.seed);

  std::vector<std::pair<std::string, PitchTrack>> speaker_tracks;
  auto load_split = [&](const Manifest& m) {
    std::vector<PreparedUtt> out;
    for (const auto& rec : m.records) {
      Waveform w = read_wav(rec.wav_path);
      out.push_back(harness_detail::featurize(rec, w, data.inv, cfg));
      speaker_tracks.emplace_back(rec.speaker_id, track_pitch(w, cfg.pitch));
    }
    return out;
  };
  data.train = load_split(train_manifest);
  data.adapt_in = load_split(corpus.child_train);
  data.adapt_accent = load_split(corpus.accent_train);
  data.pitch_stats = compute_speaker_pitch_stats(speaker_tracks);

  // alignment model on the clean training features
  AlignedCorpus ac;
  for (const auto& u : data.train) {
    ac.utt_ids.push_back(u.utt_id);
    ac.features.push_back(u.clean);
    ac.transcripts.push_back(u.transcript);
  }
  data.gmm = viterbi_train(flat_start(ac, data.topo), ac, cfg.gmm);
  harness_detail::align_all(data.train, data.gmm);
  harness_detail::align_all(data.adapt_in, data.gmm);
  harness_detail::align_all(data.adapt_accent, data.gmm);

  // phone LM and competitor graphs
  std::vector<std::vector<int>> transcripts;
  for (const auto& u : data.train) transcripts.push_back(u.transcript);
  data.lm = estimate_phone_bigram(transcripts, data.inv.size());
  data.den_train = build_denominator_graph(data.lm, data.topo, true);
  data.den_decode = build_denominator_graph(data.lm, data.topo, false);

  // speaker embedding space from the training speakers
  {
    long total = 0;
    for (const auto& u : data.train) total += u.spliced.rows();
    Matrix pooled(total, data.train.front().spliced.cols());
    long row = 0;
    for (const auto& u : data.train) {
      pooled.middleRows(row, u.spliced.rows()) = u.spliced;
      row += u.spliced.rows();
    }
    int pca_dim = std::min<long>(cfg.frame_pca_dim, pooled.cols());
    data.frame_pca = fit_pca(pooled, int(pca_dim));

    std::map<std::string, std::vector<const PreparedUtt*>> by_spk;
    for (const auto& u : data.train) by_spk[u.speaker_id].push_back(&u);
    std::vector<Matrix> bags;
    std::vector<std::string> spk_ids;
    for (const auto& [spk, utts] : by_spk) {
      long n = 0;
      for (const auto* u : utts) n += u->spliced.rows();
      Matrix bag(n, pca_dim);
      long r = 0;
      for (const auto* u : utts) {
        bag.middleRows(r, u->spliced.rows()) = data.frame_pca.apply(u->spliced);
        r += u->spliced.rows();
      }
      bags.push_back(std::move(bag));
      spk_ids.push_back(spk);
    }
    data.embedder =
        train_speaker_embedder(bags, cfg.ubm_components, cfg.embed_dim,
                               cfg.seed);
    std::map<std::string, Vector> spk_embed;
    for (std::size_t i = 0; i < bags.size(); ++i)
      spk_embed[spk_ids[i]] = data.embedder.embed(bags[i]);
    for (auto& u : data.train) u.ivec = spk_embed[u.speaker_id];
  }
  auto utt_embed = [&](PreparedUtt& u) {
    u.ivec = data.embedder.embed(data.frame_pca.apply(u.spliced));
  };
  for (auto& u : data.adapt_in) utt_embed(u);
  for (auto& u : data.adapt_accent) utt_embed(u);

  // decoder targets are standardized clean features, so the reconstruction
  // error is comparable across coefficients instead of being dominated by
  // the energy term
  {
    std::vector<Matrix> feats;
    for (const auto& u : data.train) feats.push_back(u.clean);
    data.recon_stats = column_stats(feats);
  }

  // pitch-code standardization from training statistics
  {
    std::vector<Matrix> pvs;
    for (const auto& u : data.train) pvs.push_back(u.pvec);
    data.pvec_stats = column_stats(pvs);
    auto standardize = [&](std::vector<PreparedUtt>& utts) {
      for (auto& u : utts)
        standardize_rows(u.pvec, data.pvec_stats.mean, data.pvec_stats.stddev);
    };
    standardize(data.train);
    standardize(data.adapt_in);
    standardize(data.adapt_accent);
  }

  // test sets: the child test split at every pitch shift, and the accented
  // test split unshifted
  auto load_test = [&](const Manifest& m, int cents) {
    std::vector<PreparedUtt> out;
    for (const auto& rec : m.records) {
      Waveform w = read_wav(rec.wav_path);
      if (cents != 0) w = pitch_shift_cents(w, cents);
      PreparedUtt u = harness_detail::featurize(rec, w, data.inv, cfg);
      utt_embed(u);
      standardize_rows(u.pvec, data.pvec_stats.mean, data.pvec_stats.stddev);
      out.push_back(std::move(u));
    }
    return out;
  };
  for (int cents : cfg.shifts)
    data.tests[cents] = load_test(corpus.child_test, cents);
  data.accent_test = load_test(corpus.accent_test, 0);
  return data;
}

// ---------------------------------------------------------------------------
// Condition runs

struct ConditionSpec {
  bool autoencoder = false;  // false: no reconstruction head
  AuxMode aux = AuxMode::kNone;
};

inline ConditionSpec parse_condition(const std::string& name) {
  auto colon = name.find(':');
  if (colon == std::string::npos)
    throw Error("condition must look like model:aux, got " + name);
  ConditionSpec spec;
  std::string model = name.substr(0, colon);
  if (model == "fdcae") spec.autoencoder = true;
  else if (model != "baseline") throw Error("unknown model kind: " + model);
  spec.aux = aux_mode_from_name(name.substr(colon + 1));
  return spec;
}

/// embed_dim is the realized speaker-code width, which the embedder may cap
/// below the configured value when speakers are scarce.
inline int aux_dim_for(const ConditionSpec& spec, int embed_dim) {
  int d = 0;
  if (spec.aux == AuxMode::kSpeaker || spec.aux == AuxMode::kSpeakerPitch)
    d += embed_dim;
  if (spec.aux == AuxMode::kPitch || spec.aux == AuxMode::kSpeakerPitch)
    d += 3;
  return d;
}

inline Matrix aux_rows_for(const PreparedUtt& u, const ConditionSpec& spec,
                           const HarnessConfig& cfg) {
  const int T = int(u.spliced.rows());
  bool want_i =
      spec.aux == AuxMode::kSpeaker || spec.aux == AuxMode::kSpeakerPitch;
  bool want_p =
      spec.aux == AuxMode::kPitch || spec.aux == AuxMode::kSpeakerPitch;
  if (!want_i && !want_p) return Matrix::Zero(T, 0);
  return concat_aux(T, want_p ? u.pvec : Matrix(T, 0),
                    want_i ? u.ivec : Vector(), cfg.pvector_chunk);
}

inline std::vector<TrainChunk> build_chunks(
    const std::vector<PreparedUtt>& utts, const ConditionSpec& spec,
    const PreparedData& data, const HarnessConfig& cfg) {
  std::vector<TrainUtterance> tus;
  for (const auto& u : utts) {
    TrainUtterance t;
    t.utt_id = u.utt_id;
    t.inputs = u.spliced;
    t.recon_targets = u.clean;
    standardize_rows(t.recon_targets, data.recon_stats.mean,
                     data.recon_stats.stddev);
    t.aux = aux_rows_for(u, spec, cfg);
    t.states = u.states;
    tus.push_back(std::move(t));
  }
  std::vector<TrainChunk> chunks = make_chunks(tus, data.topo, cfg.chunk_frames);
  for (auto& c : chunks)
    c.numerator = numerator_graph_from_alignment(c.states, data.topo, &data.lm);
  return chunks;
}

inline double score_testset(FdcaeModel& model,
                            const std::vector<PreparedUtt>& utts,
                            const ConditionSpec& spec,
                            const PreparedData& data,
                            const HarnessConfig& cfg) {
  std::vector<std::vector<int>> refs, hyps;
  for (const auto& u : utts) {
    Matrix aux = aux_rows_for(u, spec, cfg);
    Matrix input(u.spliced.rows(), u.spliced.cols() + aux.cols());
    if (aux.cols() > 0) input << u.spliced, aux;
    else input = u.spliced;
    Matrix scores = model.infer_logits(input);
    hyps.push_back(decode_utterance(scores, data.den_decode, data.topo));
    refs.push_back(strip_silence(u.transcript));
  }
  return phone_error_rate(refs, hyps);
}

inline FdcaeModel train_condition(const ConditionSpec& spec,
                                  const PreparedData& data,
                                  const HarnessConfig& cfg,
                                  std::uint64_t seed, TrainLog* log) {
  ModelConfig mc;
  mc.input_dim = int(data.train.front().spliced.cols());
  mc.aux_dim = aux_dim_for(spec, data.embedder.embedding_dim());
  mc.hidden_dim = cfg.hidden_dim;
  mc.num_tdnn_layers = cfg.tdnn_layers;
  mc.bottleneck_dim = cfg.bottleneck_dim;
  mc.num_states = data.topo.num_states();
  mc.decoder_hidden = cfg.decoder_hidden;
  mc.recon_dim = int(data.train.front().clean.cols());
  mc.has_decoder = spec.autoencoder;

  Rng rng = make_rng(seed, 0x6d6fu);
  FdcaeModel model(mc, rng);
  std::vector<TrainChunk> chunks = build_chunks(data.train, spec, data, cfg);
  TrainOptions opt;
  opt.epochs = cfg.epochs;
  opt.lr = cfg.lr;
  opt.seed = seed;
  opt.weights.alpha = cfg.alpha;
  opt.weights.beta = cfg.effective_beta();
  opt.use_decoder = spec.autoencoder;
  TrainLog l = train_model(model, chunks, data.den_train, opt);
  if (log) *log = l;
  return model;
}

// ---------------------------------------------------------------------------
// Matrix and reports

struct MatrixResult {
  struct Row {
    std::string condition;
    int shift_cents = 0;
    std::uint64_t seed = 0;
    double per = 0.0;
  };
  struct AdaptRow {
    std::string domain;  // "in-domain" or "accent"
    std::uint64_t seed = 0;
    double per_before = 0.0;
    double per_after = 0.0;
  };
  std::vector<Row> rows;
  std::vector<AdaptRow> adapt_rows;
  // condition/seed keyed training curves, in run order
  std::vector<std::tuple<std::string, std::uint64_t, TrainLog>> logs;
};

inline MatrixResult run_matrix(const PreparedData& data,
                               const HarnessConfig& cfg) {
  MatrixResult result;
  for (const std::string& cond : cfg.conditions) {
    ConditionSpec spec = parse_condition(cond);
    for (std::uint64_t seed : cfg.seeds) {
      TrainLog log;
      FdcaeModel model = train_condition(spec, data, cfg, seed, &log);
      result.logs.emplace_back(cond, seed, log);
      for (int cents : cfg.shifts)
        result.rows.push_back(
            {cond, cents, seed,
             score_testset(model, data.tests.at(cents), spec, data, cfg)});

      if (cond == cfg.adapt_condition) {
        TrainOptions opt;
        opt.lr = cfg.lr;
        opt.seed = seed;
        opt.weights.alpha = cfg.alpha;
        opt.weights.beta = cfg.effective_beta();
        opt.use_decoder = spec.autoencoder;

        double before_in = score_testset(model, data.tests.at(0), spec, data, cfg);
        FdcaeModel adapted_in = model;
        auto in_chunks = build_chunks(data.adapt_in, spec, data, cfg);
        adapt_model(adapted_in, in_chunks, data.den_train, opt);
        double after_in =
            score_testset(adapted_in, data.tests.at(0), spec, data, cfg);
        result.adapt_rows.push_back({"in-domain", seed, before_in, after_in});

        double before_acc =
            score_testset(model, data.accent_test, spec, data, cfg);
        FdcaeModel adapted_acc = model;
        auto acc_chunks = build_chunks(data.adapt_accent, spec, data, cfg);
        adapt_model(adapted_acc, acc_chunks, data.den_train, opt);
        double after_acc =
            score_testset(adapted_acc, data.accent_test, spec, data, cfg);
        result.adapt_rows.push_back({"accent", seed, before_acc, after_acc});
      }
    }
  }
  return result;
}

namespace harness_detail {

inline std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

}  // namespace harness_detail

/// Writes results.csv, summary.csv, adapt.csv, loss_curves.csv,
/// pitch_stats.csv and config.echo under out_dir. Output is byte-stable for
/// a fixed config and seed set.
inline void emit_report(const MatrixResult& result, const PreparedData& data,
                        const HarnessConfig& cfg, const std::string& out_dir) {
  namespace hd = harness_detail;
  std::filesystem::create_directories(out_dir);

  {
    std::ofstream os(out_dir + "/results.csv");
    os << "condition,shift_cents,seed,per\n";
    for (const auto& r : result.rows)
      os << r.condition << ',' << r.shift_cents << ',' << r.seed << ','
         << hd::fmt(r.per) << '\n';
  }
  {
    std::ofstream os(out_dir + "/summary.csv");
    os << "condition,shift_cents,mean_per,std_per,num_seeds\n";
    for (const std::string& cond : cfg.conditions)
      for (int cents : cfg.shifts) {
        std::vector<double> pers;
        for (const auto& r : result.rows)
          if (r.condition == cond && r.shift_cents == cents)
            pers.push_back(r.per);
        if (pers.empty()) continue;
        double mean = 0.0;
        for (double p : pers) mean += p;
        mean /= double(pers.size());
        double var = 0.0;
        for (double p : pers) var += (p - mean) * (p - mean);
        var = pers.size() > 1 ? var / double(pers.size() - 1) : 0.0;
        os << cond << ',' << cents << ',' << hd::fmt(mean) << ','
           << hd::fmt(std::sqrt(var)) << ',' << pers.size() << '\n';
      }
  }
  {
    std::ofstream os(out_dir + "/adapt.csv");
    os << "domain,seed,per_before,per_after\n";
    for (const auto& a : result.adapt_rows)
      os << a.domain << ',' << a.seed << ',' << hd::fmt(a.per_before) << ','
         << hd::fmt(a.per_after) << '\n';
  }
  {
    std::ofstream os(out_dir + "/loss_curves.csv");
    os << "condition,seed,epoch,ce,lfmmi,mse,total\n";
    for (const auto& [cond, seed, log] : result.logs)
      for (std::size_t e = 0; e < log.epochs.size(); ++e) {
        const auto& s = log.epochs[e];
        os << cond << ',' << seed << ',' << e << ',' << hd::fmt(s.ce, 6)
           << ',' << hd::fmt(s.lfmmi, 6) << ',' << hd::fmt(s.mse, 6) << ','
           << hd::fmt(s.total, 6) << '\n';
      }
  }
  {
    std::ofstream os(out_dir + "/pitch_stats.csv");
    os << "speaker_id,mean_f0,voiced_frames\n";
    for (const auto& st : data.pitch_stats) {
      long voiced = 0;
      for (const auto& [bin, n] : st.histogram) voiced += n;
      os << st.speaker_id << ',' << hd::fmt(st.mean_f0, 2) << ',' << voiced
         << '\n';
    }
  }
  {
    std::ofstream os(out_dir + "/config.echo");
    os << "seed=" << cfg.seed << '\n'
       << "epochs=" << cfg.epochs << '\n'
       << "lr=" << cfg.lr << '\n'
       << "alpha=" << cfg.alpha << '\n'
       << "beta=" << cfg.beta << '\n'
       << "beta_effective=" << cfg.effective_beta() << '\n'
       << "hidden_dim=" << cfg.hidden_dim << '\n'
       << "tdnn_layers=" << cfg.tdnn_layers << '\n'
       << "bottleneck_dim=" << cfg.bottleneck_dim << '\n'
       << "chunk_frames=" << cfg.chunk_frames << '\n'
       << "embed_dim=" << cfg.embed_dim << '\n'
       << "ubm_components=" << cfg.ubm_components << '\n'
       << "pvector_chunk=" << cfg.pvector_chunk << '\n';
    os << "shifts=";
    for (std::size_t i = 0; i < cfg.shifts.size(); ++i)
      os << (i ? " " : "") << cfg.shifts[i];
    os << '\n' << "seeds=";
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
      os << (i ? " " : "") << cfg.seeds[i];
    os << '\n' << "conditions=";
    for (std::size_t i = 0; i < cfg.conditions.size(); ++i)
      os << (i ? " " : "") << cfg.conditions[i];
    os << '\n';
  }
}

}  // namespace fdcae
