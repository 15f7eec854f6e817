// include/fdcae/config.hpp
//
// Key=value run configuration files for the experiment harness. Unknown
// keys are an error so typos surface early; '#' starts a comment.

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

#include <sstream>

#include "fdcae/harness.hpp"

namespace fdcae {

namespace config_detail {

inline std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

}  // namespace config_detail

/// Applies one key=value setting to the config; throws on unknown keys or
/// unparsable values.
inline void apply_config_entry(HarnessConfig& cfg, const std::string& key,
                               const std::string& value) {
  auto as_int = [&] {
    std::size_t pos;
    int v = std::stoi(value, &pos);
    if (pos != value.size()) throw Error("bad integer for " + key);
    return v;
  };
  auto as_double = [&] {
    std::size_t pos;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw Error("bad number for " + key);
    return v;
  };

  if (key == "seed") cfg.seed = std::stoull(value);
  else if (key == "epochs") cfg.epochs = as_int();
  else if (key == "lr") cfg.lr = as_double();
  else if (key == "alpha") cfg.alpha = as_double();
  else if (key == "beta") cfg.beta = as_double();
  else if (key == "beta_effective") cfg.beta_effective = as_double();
  else if (key == "hidden_dim") cfg.hidden_dim = as_int();
  else if (key == "tdnn_layers") cfg.tdnn_layers = as_int();
  else if (key == "bottleneck_dim") cfg.bottleneck_dim = as_int();
  else if (key == "decoder_hidden") cfg.decoder_hidden = as_int();
  else if (key == "chunk_frames") cfg.chunk_frames = as_int();
  else if (key == "embed_dim") cfg.embed_dim = as_int();
  else if (key == "ubm_components") cfg.ubm_components = as_int();
  else if (key == "frame_pca_dim") cfg.frame_pca_dim = as_int();
  else if (key == "pvector_chunk") cfg.pvector_chunk = as_int();
  else if (key == "gmm_iterations") cfg.gmm.iterations = as_int();
  else if (key == "adapt_condition") cfg.adapt_condition = value;
  else if (key == "shifts") {
    cfg.shifts.clear();
    for (const auto& tok : config_detail::split_ws(value))
      cfg.shifts.push_back(std::stoi(tok));
  } else if (key == "seeds") {
    cfg.seeds.clear();
    for (const auto& tok : config_detail::split_ws(value))
      cfg.seeds.push_back(std::stoull(tok));
  } else if (key == "conditions") {
    cfg.conditions = config_detail::split_ws(value);
    for (const auto& c : cfg.conditions) parse_condition(c);  // validate
  } else if (key == "adult_male_speakers")
    cfg.corpus.adult_male_speakers = as_int();
  else if (key == "adult_female_speakers")
    cfg.corpus.adult_female_speakers = as_int();
  else if (key == "utts_per_adult") cfg.corpus.utts_per_adult = as_int();
  else if (key == "child_train_speakers")
    cfg.corpus.child_train_speakers = as_int();
  else if (key == "child_test_speakers")
    cfg.corpus.child_test_speakers = as_int();
  else if (key == "child_train_utts") cfg.corpus.child_train_utts = as_int();
  else if (key == "child_test_utts") cfg.corpus.child_test_utts = as_int();
  else if (key == "accent_train_speakers")
    cfg.corpus.accent_train_speakers = as_int();
  else if (key == "accent_test_speakers")
    cfg.corpus.accent_test_speakers = as_int();
  else if (key == "accent_utts") cfg.corpus.accent_utts = as_int();
  else if (key == "min_phones") cfg.corpus.min_phones = as_int();
  else if (key == "max_phones") cfg.corpus.max_phones = as_int();
  else if (key == "accent_f2_frac") cfg.corpus.accent_f2_frac = as_double();
  else
    throw Error("unknown config key: " + key);
}

inline HarnessConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read config " + path);
  HarnessConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(path + ":" + std::to_string(lineno) +
                        ": expected key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto kend = key.find_last_not_of(" \t");
    key = key.substr(0, kend + 1);
    auto vstart = value.find_first_not_of(" \t");
    value = vstart == std::string::npos ? "" : value.substr(vstart);
    try {
      apply_config_entry(cfg, key, value);
    } catch (const Error& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

}  // namespace fdcae
