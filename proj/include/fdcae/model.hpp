// include/fdcae/model.hpp
//
// The filter-based discriminative autoencoder. The encoder maps spliced
// features plus optional speaker and pitch codes to a bottleneck
// representation and state logits; the decoder reconstructs clean features
// from the bottleneck and the codes. Decoding only ever touches the encoder,
// so the
// decoder can be dropped at inference time without changing outputs.

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

#include <string>
#include <vector>

#include "fdcae/nnet.hpp"

namespace fdcae {

/// Which auxiliary codes the encoder consumes alongside the features.
enum class AuxMode { kNone, kSpeaker, kPitch, kSpeakerPitch };

inline std::string aux_mode_name(AuxMode m) {
  switch (m) {
    case AuxMode::kNone: return "none";
    case AuxMode::kSpeaker: return "i";
    case AuxMode::kPitch: return "p";
    case AuxMode::kSpeakerPitch: return "i+p";
  }
  throw Error("bad aux mode");
}

inline AuxMode aux_mode_from_name(const std::string& s) {
  if (s == "none") return AuxMode::kNone;
  if (s == "i") return AuxMode::kSpeaker;
  if (s == "p") return AuxMode::kPitch;
  if (s == "i+p") return AuxMode::kSpeakerPitch;
  throw Error("unknown aux mode: " + s);
}

struct ModelConfig {
  int input_dim = 280;    // spliced features
  int aux_dim = 0;        // speaker and pitch codes, appended at the input
  int hidden_dim = 128;
  int num_tdnn_layers = 8;
  int bottleneck_dim = 128;
  int num_states = 38;
  int decoder_hidden = 128;
  int decoder_layers = 4;
  int recon_dim = 40;     // clean features the decoder reconstructs
  bool has_decoder = true;
};

class FdcaeModel {
 public:
  struct TdnnLayer {
    Param w, b;
    BatchNorm bn;
    std::vector<int> offsets;
  };
  struct DenseLayer {
    Param w, b;
  };

  ModelConfig cfg;
  Param in_w, in_b;
  BatchNorm in_bn;
  std::vector<TdnnLayer> tdnn;
  Param bottleneck_w, bottleneck_b;
  BatchNorm bottleneck_bn;
  Param out_w, out_b;
  std::vector<DenseLayer> decoder;

  FdcaeModel() = default;

  FdcaeModel(const ModelConfig& c, Rng& rng) : cfg(c) {
    glorot_init(in_w, cfg.hidden_dim, cfg.input_dim + cfg.aux_dim, rng);
    glorot_init(in_b, 1, cfg.hidden_dim, rng);
    in_bn.init(cfg.hidden_dim);
    for (int l = 0; l < cfg.num_tdnn_layers; ++l) {
      TdnnLayer layer;
      // narrow context first, wider strides deeper in the stack
      layer.offsets = l < 3 ? std::vector<int>{-1, 0, 1}
                            : std::vector<int>{-3, 0, 3};
      glorot_init(layer.w, cfg.hidden_dim,
                  cfg.hidden_dim * int(layer.offsets.size()), rng);
      glorot_init(layer.b, 1, cfg.hidden_dim, rng);
      layer.bn.init(cfg.hidden_dim);
      tdnn.push_back(std::move(layer));
    }
    glorot_init(bottleneck_w, cfg.bottleneck_dim, cfg.hidden_dim, rng);
    glorot_init(bottleneck_b, 1, cfg.bottleneck_dim, rng);
    bottleneck_bn.init(cfg.bottleneck_dim);
    // zero output layer: uniform initial posteriors keep the first
    // sequence-objective updates small and runs repeatable
    out_w.init(cfg.num_states, cfg.bottleneck_dim);
    out_b.init(1, cfg.num_states);
    if (cfg.has_decoder) {
      for (int l = 0; l < cfg.decoder_layers; ++l) {
        DenseLayer d;
        int in = l == 0 ? cfg.bottleneck_dim + cfg.aux_dim
                        : cfg.decoder_hidden;
        int out = l + 1 == cfg.decoder_layers ? cfg.recon_dim
                                              : cfg.decoder_hidden;
        glorot_init(d.w, out, in, rng);
        glorot_init(d.b, 1, out, rng);
        decoder.push_back(std::move(d));
      }
    }
  }

  /// Bottleneck activations for a T x (input_dim + aux_dim) input.
  int encode(Tape& tape, const Matrix& input, bool training) {
    if (int(input.cols()) != cfg.input_dim + cfg.aux_dim)
      throw Error("FdcaeModel::encode: input dim mismatch");
    int h = tape.relu(batchnorm(
        tape, tape.affine(tape.input(input), tape.param(in_w),
                          tape.param(in_b)),
        in_bn, training));
    for (auto& layer : tdnn)
      h = tape.relu(batchnorm(
          tape,
          tape.affine(tape.splice(h, layer.offsets), tape.param(layer.w),
                      tape.param(layer.b)),
          layer.bn, training));
    return tape.relu(batchnorm(
        tape,
        tape.affine(h, tape.param(bottleneck_w), tape.param(bottleneck_b)),
        bottleneck_bn, training));
  }

  int logits(Tape& tape, int bottleneck) {
    return tape.affine(bottleneck, tape.param(out_w), tape.param(out_b));
  }

  /// Reconstruction from the bottleneck plus the auxiliary codes. Feeding
  /// the codes here lets the bottleneck drop speaker and pitch information,
  /// which is the whole point of the autoencoder branch.
  int decode(Tape& tape, int bottleneck, int aux = -1) {
    if (!cfg.has_decoder) throw Error("FdcaeModel::decode: no decoder");
    if ((aux < 0) != (cfg.aux_dim == 0))
      throw Error("FdcaeModel::decode: aux presence mismatch");
    int h = aux < 0 ? bottleneck : tape.hcat(bottleneck, aux);
    for (std::size_t l = 0; l < decoder.size(); ++l) {
      h = tape.affine(h, tape.param(decoder[l].w), tape.param(decoder[l].b));
      if (l + 1 < decoder.size()) h = tape.relu(h);
    }
    return h;
  }

  /// Inference pass: state log-posterior-like scores, running batch stats.
  Matrix infer_logits(const Matrix& input) {
    Tape tape;
    return tape.value(logits(tape, encode(tape, input, false)));
  }

  std::vector<Param*> trainable(bool include_decoder = true) {
    std::vector<Param*> out = {&in_w, &in_b, &in_bn.gamma, &in_bn.beta};
    for (auto& l : tdnn) {
      out.push_back(&l.w);
      out.push_back(&l.b);
      out.push_back(&l.bn.gamma);
      out.push_back(&l.bn.beta);
    }
    out.push_back(&bottleneck_w);
    out.push_back(&bottleneck_b);
    out.push_back(&bottleneck_bn.gamma);
    out.push_back(&bottleneck_bn.beta);
    out.push_back(&out_w);
    out.push_back(&out_b);
    if (include_decoder)
      for (auto& d : decoder) {
        out.push_back(&d.w);
        out.push_back(&d.b);
      }
    return out;
  }

  // --- serialization ---

  void save(const std::string& path) const {
    std::map<std::string, const Matrix*> entries;
    Matrix cfg_row(1, 10);
    cfg_row << cfg.input_dim, cfg.aux_dim, cfg.hidden_dim,
        cfg.num_tdnn_layers, cfg.bottleneck_dim, cfg.num_states,
        cfg.decoder_hidden, cfg.decoder_layers, cfg.recon_dim,
        cfg.has_decoder ? 1 : 0;
    entries["cfg"] = &cfg_row;
    std::vector<Matrix> bn_stats;
    bn_stats.reserve(3 * (tdnn.size() + 2));
    auto add_bn = [&](const std::string& prefix, const BatchNorm& bn) {
      entries[prefix + ".gamma"] = &bn.gamma.value;
      entries[prefix + ".beta"] = &bn.beta.value;
      bn_stats.push_back(bn.running_mean.transpose());
      entries[prefix + ".rmean"] = &bn_stats.back();
      bn_stats.push_back(bn.running_var.transpose());
      entries[prefix + ".rvar"] = &bn_stats.back();
      bn_stats.push_back(Matrix::Constant(1, 1, double(bn.batches_seen)));
      entries[prefix + ".seen"] = &bn_stats.back();
    };
    entries["in.w"] = &in_w.value;
    entries["in.b"] = &in_b.value;
    add_bn("in.bn", in_bn);
    for (std::size_t l = 0; l < tdnn.size(); ++l) {
      std::string p = "tdnn" + std::to_string(l);
      entries[p + ".w"] = &tdnn[l].w.value;
      entries[p + ".b"] = &tdnn[l].b.value;
      add_bn(p + ".bn", tdnn[l].bn);
    }
    entries["bneck.w"] = &bottleneck_w.value;
    entries["bneck.b"] = &bottleneck_b.value;
    add_bn("bneck.bn", bottleneck_bn);
    entries["out.w"] = &out_w.value;
    entries["out.b"] = &out_b.value;
    for (std::size_t l = 0; l < decoder.size(); ++l) {
      std::string p = "dec" + std::to_string(l);
      entries[p + ".w"] = &decoder[l].w.value;
      entries[p + ".b"] = &decoder[l].b.value;
    }
    save_params(entries, path, "fdcae-model-v1");
  }

  /// Loads a model; with_decoder=false drops the reconstruction head even
  /// when the checkpoint carries one.
  static FdcaeModel load(const std::string& path, bool with_decoder = true) {
    auto entries = load_params(path, "fdcae-model-v1");
    auto get = [&](const std::string& name) -> Matrix& {
      auto it = entries.find(name);
      if (it == entries.end())
        throw FormatError("model checkpoint missing " + name);
      return it->second;
    };
    const Matrix& c = get("cfg");
    FdcaeModel m;
    m.cfg.input_dim = int(c(0, 0));
    m.cfg.aux_dim = int(c(0, 1));
    m.cfg.hidden_dim = int(c(0, 2));
    m.cfg.num_tdnn_layers = int(c(0, 3));
    m.cfg.bottleneck_dim = int(c(0, 4));
    m.cfg.num_states = int(c(0, 5));
    m.cfg.decoder_hidden = int(c(0, 6));
    m.cfg.decoder_layers = int(c(0, 7));
    m.cfg.recon_dim = int(c(0, 8));
    m.cfg.has_decoder = c(0, 9) != 0.0 && with_decoder;

    auto load_param = [&](Param& p, const std::string& name) {
      p.value = get(name);
      p.reset_aux();
    };
    auto load_bn = [&](BatchNorm& bn, const std::string& prefix) {
      bn.init(int(get(prefix + ".gamma").cols()));
      load_param(bn.gamma, prefix + ".gamma");
      load_param(bn.beta, prefix + ".beta");
      bn.running_mean = get(prefix + ".rmean").row(0).transpose();
      bn.running_var = get(prefix + ".rvar").row(0).transpose();
      bn.batches_seen = long(get(prefix + ".seen")(0, 0));
    };
    load_param(m.in_w, "in.w");
    load_param(m.in_b, "in.b");
    load_bn(m.in_bn, "in.bn");
    for (int l = 0; l < m.cfg.num_tdnn_layers; ++l) {
      TdnnLayer layer;
      layer.offsets =
          l < 3 ? std::vector<int>{-1, 0, 1} : std::vector<int>{-3, 0, 3};
      std::string p = "tdnn" + std::to_string(l);
      load_param(layer.w, p + ".w");
      load_param(layer.b, p + ".b");
      load_bn(layer.bn, p + ".bn");
      m.tdnn.push_back(std::move(layer));
    }
    load_param(m.bottleneck_w, "bneck.w");
    load_param(m.bottleneck_b, "bneck.b");
    load_bn(m.bottleneck_bn, "bneck.bn");
    load_param(m.out_w, "out.w");
    load_param(m.out_b, "out.b");
    if (m.cfg.has_decoder) {
      for (int l = 0; l < m.cfg.decoder_layers; ++l) {
        DenseLayer d;
        std::string p = "dec" + std::to_string(l);
        load_param(d.w, p + ".w");
        load_param(d.b, p + ".b");
        m.decoder.push_back(std::move(d));
      }
    }
    return m;
  }
};

}  // namespace fdcae
