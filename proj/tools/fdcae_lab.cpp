// tools/fdcae_lab.cpp
//
// Command line front end for the acoustic modeling laboratory. Subcommands
// cover the whole pipeline from corpus synthesis to the experiment matrix;
// most take a manifest and write artifacts under --out.

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

#include <iostream>

#include <CLI11.hpp>

#include "fdcae/config.hpp"

namespace {

using namespace fdcae;

HarnessConfig make_config(const std::string& config_path, std::uint64_t seed,
                          bool seed_set) {
  HarnessConfig cfg =
      config_path.empty() ? HarnessConfig{} : load_config(config_path);
  if (seed_set) cfg.seed = seed;
  return cfg;
}

Manifest load_manifest_arg(const std::string& path) {
  Manifest m = load_manifest(path);
  if (m.records.empty()) throw Error("manifest has no records: " + path);
  return m;
}

// Features for every utterance in a manifest, cached as binary matrices.
void write_features(const Manifest& m, const HarnessConfig& cfg,
                    const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (const auto& rec : m.records) {
    Waveform w = read_wav(rec.wav_path);
    FeatureMatrix feats = extract_mfcc(w, cfg.mfcc);
    FeatureMatrix spliced =
        splice_context(feats, cfg.splice_left, cfg.splice_right);
    save_matrix(feats.frames, out_dir + "/" + rec.utt_id + ".clean.bin");
    save_matrix(spliced.frames, out_dir + "/" + rec.utt_id + ".spliced.bin");
  }
}

AlignedCorpus corpus_from_manifest(const Manifest& m, const PhoneInventory& inv,
                                   const HarnessConfig& cfg) {
  AlignedCorpus ac;
  for (const auto& rec : m.records) {
    Waveform w = read_wav(rec.wav_path);
    ac.utt_ids.push_back(rec.utt_id);
    ac.features.push_back(extract_mfcc(w, cfg.mfcc).frames);
    std::vector<int> t;
    for (const auto& sym : rec.transcript) t.push_back(inv.index(sym));
    ac.transcripts.push_back(t);
  }
  return ac;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"filter-based discriminative autoencoder acoustic lab"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", manifest_path;
  std::uint64_t seed = 1;
  bool seed_set = false;
  int jobs = 1;
  app.add_option("--config", config_path, "run configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "random seed override")
      ->each([&](const std::string&) { seed_set = true; });
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--jobs", jobs, "worker threads (reserved)");

  auto* synth = app.add_subcommand("synth-corpus", "synthesize the corpus");

  auto* augment = app.add_subcommand(
      "augment", "triple a training manifest with speed and volume copies");
  augment->add_option("--manifest", manifest_path, "input manifest")
      ->required()
      ->check(CLI::ExistingFile);

  auto* features =
      app.add_subcommand("features", "extract and cache features");
  features->add_option("--manifest", manifest_path, "input manifest")
      ->required()
      ->check(CLI::ExistingFile);

  auto* pvectors =
      app.add_subcommand("pvectors", "pitch codes for a manifest");
  pvectors->add_option("--manifest", manifest_path, "input manifest")
      ->required()
      ->check(CLI::ExistingFile);

  auto* spkembed = app.add_subcommand(
      "spkembed", "train the speaker embedding extractor");
  spkembed->add_option("--manifest", manifest_path, "training manifest")
      ->required()
      ->check(CLI::ExistingFile);

  auto* train_gmm =
      app.add_subcommand("train-gmm", "train the alignment model");
  train_gmm->add_option("--manifest", manifest_path, "training manifest")
      ->required()
      ->check(CLI::ExistingFile);

  std::string gmm_path;
  auto* align = app.add_subcommand("align", "force-align a manifest");
  align->add_option("--manifest", manifest_path, "input manifest")
      ->required()
      ->check(CLI::ExistingFile);
  align->add_option("--gmm", gmm_path, "alignment model file")
      ->required()
      ->check(CLI::ExistingFile);

  auto* graphs = app.add_subcommand(
      "graphs", "build the decoding and training competitor graphs");
  graphs->add_option("--manifest", manifest_path, "manifest for the phone LM")
      ->required()
      ->check(CLI::ExistingFile);

  std::string condition = "fdcae:i+p";
  auto* train_am =
      app.add_subcommand("train-am", "train one acoustic model condition");
  train_am->add_option("--condition", condition,
                       "model:aux, e.g. baseline:none or fdcae:i+p");

  std::string model_path;
  auto* adapt = app.add_subcommand("adapt", "fine-tune a trained model");
  adapt->add_option("--model", model_path, "trained model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  adapt->add_option("--condition", condition, "model:aux of the checkpoint");

  auto* decode = app.add_subcommand("decode", "phone decoding for a manifest");
  decode->add_option("--model", model_path, "trained model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  decode->add_option("--manifest", manifest_path, "test manifest")
      ->required()
      ->check(CLI::ExistingFile);
  decode->add_option("--condition", condition, "model:aux of the checkpoint");

  std::string ref_path, hyp_path;
  auto* score = app.add_subcommand("score", "phone error rate of hypotheses");
  score->add_option("--ref", ref_path, "reference transcripts, utt<TAB>phones")
      ->required()
      ->check(CLI::ExistingFile);
  score->add_option("--hyp", hyp_path, "hypothesis transcripts")
      ->required()
      ->check(CLI::ExistingFile);

  auto* matrix =
      app.add_subcommand("matrix", "run the full condition/seed matrix");

  auto* report = app.add_subcommand(
      "report", "summarize a results.csv into per-condition means");
  std::string results_path;
  report->add_option("--results", results_path, "results.csv from matrix")
      ->required()
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    HarnessConfig cfg = make_config(config_path, seed, seed_set);
    PhoneInventory inv;

    if (synth->parsed()) {
      CorpusConfig cc = cfg.corpus;
      cc.seed = cfg.seed;
      cc.out_dir = out_dir;
      build_corpus(cc, inv);
      std::cout << "corpus written to " << out_dir << "\n";
    } else if (augment->parsed()) {
      Manifest m = load_manifest_arg(manifest_path);
      std::filesystem::create_directories(out_dir);
      Manifest tripled =
          triple_with_perturbation(m, out_dir + "/wav_sp", cfg.seed);
      save_manifest(tripled, out_dir + "/" + tripled.corpus_tag + ".tsv");
      std::cout << tripled.records.size() << " records -> " << out_dir << "\n";
    } else if (features->parsed()) {
      write_features(load_manifest_arg(manifest_path), cfg, out_dir);
      std::cout << "features cached in " << out_dir << "\n";
    } else if (pvectors->parsed()) {
      Manifest m = load_manifest_arg(manifest_path);
      std::filesystem::create_directories(out_dir);
      for (const auto& rec : m.records) {
        Waveform w = read_wav(rec.wav_path);
        Matrix pv = compute_pvector(track_pitch(w, cfg.pitch),
                                    cfg.pvector_chunk);
        if (pv.rows() == 0) pv = Matrix::Zero(1, 3);
        save_matrix(pv, out_dir + "/" + rec.utt_id + ".pvec.bin");
      }
      std::cout << "pitch codes in " << out_dir << "\n";
    } else if (spkembed->parsed()) {
      Manifest m = load_manifest_arg(manifest_path);
      std::map<std::string, std::vector<Matrix>> by_spk;
      for (const auto& rec : m.records) {
        Waveform w = read_wav(rec.wav_path);
        FeatureMatrix feats = extract_mfcc(w, cfg.mfcc);
        by_spk[rec.speaker_id].push_back(
            splice_context(feats, cfg.splice_left, cfg.splice_right).frames);
      }
      long total = 0;
      for (auto& [spk, mats] : by_spk)
        for (auto& mm : mats) total += mm.rows();
      Matrix pooled(total, by_spk.begin()->second.front().cols());
      long row = 0;
      for (auto& [spk, mats] : by_spk)
        for (auto& mm : mats) {
          pooled.middleRows(row, mm.rows()) = mm;
          row += mm.rows();
        }
      PcaTransform pca =
          fit_pca(pooled, std::min<long>(cfg.frame_pca_dim, pooled.cols()));
      std::vector<Matrix> bags;
      for (auto& [spk, mats] : by_spk) {
        long n = 0;
        for (auto& mm : mats) n += mm.rows();
        Matrix bag(n, pca.output_dim());
        long r = 0;
        for (auto& mm : mats) {
          bag.middleRows(r, mm.rows()) = pca.apply(mm);
          r += mm.rows();
        }
        bags.push_back(std::move(bag));
      }
      SpeakerEmbedder emb = train_speaker_embedder(
          bags, cfg.ubm_components, cfg.embed_dim, cfg.seed);
      std::filesystem::create_directories(out_dir);
      save_speaker_embedder(emb, out_dir + "/embedder.txt");
      std::cout << "embedder (dim " << emb.embedding_dim() << ") in "
                << out_dir << "\n";
    } else if (train_gmm->parsed()) {
      Manifest m = load_manifest_arg(manifest_path);
      HmmTopology topo(inv);
      AlignedCorpus ac = corpus_from_manifest(m, inv, cfg);
      GmmHmmModel gmm = viterbi_train(flat_start(ac, topo), ac, cfg.gmm);
      std::filesystem::create_directories(out_dir);
      save_gmm_model(gmm, out_dir + "/gmm.txt");
      std::cout << "alignment model in " << out_dir << "\n";
    } else if (align->parsed()) {
      Manifest m = load_manifest_arg(manifest_path);
      HmmTopology topo(inv);
      GmmHmmModel gmm = load_gmm_model(gmm_path, topo);
      AlignedCorpus ac = corpus_from_manifest(m, inv, cfg);
      std::vector<Alignment> alis;
      for (std::size_t i = 0; i < ac.utt_ids.size(); ++i) {
        Alignment a = force_align(gmm, ac.features[i], ac.transcripts[i]);
        a.utt_id = ac.utt_ids[i];
        alis.push_back(std::move(a));
      }
      std::filesystem::create_directories(out_dir);
      save_alignments(alis, out_dir + "/ali.txt");
      std::cout << alis.size() << " alignments in " << out_dir << "\n";
    } else if (graphs->parsed()) {
      Manifest m = load_manifest_arg(manifest_path);
      HmmTopology topo(inv);
      std::vector<std::vector<int>> transcripts;
      for (const auto& rec : m.records) {
        std::vector<int> t;
        for (const auto& sym : rec.transcript) t.push_back(inv.index(sym));
        transcripts.push_back(t);
      }
      PhoneBigram lm = estimate_phone_bigram(transcripts, inv.size());
      std::filesystem::create_directories(out_dir);
      save_graph(build_denominator_graph(lm, topo, true),
                 out_dir + "/den_train.txt");
      save_graph(build_denominator_graph(lm, topo, false),
                 out_dir + "/den_decode.txt");
      std::cout << "graphs in " << out_dir << "\n";
    } else if (train_am->parsed()) {
      ConditionSpec spec = parse_condition(condition);
      PreparedData data = prepare_data(cfg, out_dir + "/work");
      TrainLog log;
      FdcaeModel model = train_condition(spec, data, cfg, cfg.seed, &log);
      std::filesystem::create_directories(out_dir);
      model.save(out_dir + "/model.txt");
      double per = score_testset(model, data.tests.at(0), spec, data, cfg);
      std::cout << "model in " << out_dir << ", test per "
                << harness_detail::fmt(per) << "\n";
    } else if (adapt->parsed()) {
      ConditionSpec spec = parse_condition(condition);
      PreparedData data = prepare_data(cfg, out_dir + "/work");
      FdcaeModel model = FdcaeModel::load(model_path);
      TrainOptions topt;
      topt.lr = cfg.lr;
      topt.seed = cfg.seed;
      topt.weights.alpha = cfg.alpha;
      topt.weights.beta = cfg.effective_beta();
      topt.use_decoder = spec.autoencoder;
      auto chunks = build_chunks(data.adapt_in, spec, data, cfg);
      adapt_model(model, chunks, data.den_train, topt);
      std::filesystem::create_directories(out_dir);
      model.save(out_dir + "/model_adapted.txt");
      std::cout << "adapted model in " << out_dir << "\n";
    } else if (decode->parsed()) {
      ConditionSpec spec = parse_condition(condition);
      if (spec.aux != AuxMode::kNone)
        throw Error(
            "decode subcommand supports aux mode none; use matrix for "
            "aux-code conditions");
      Manifest m = load_manifest_arg(manifest_path);
      FdcaeModel model = FdcaeModel::load(model_path, /*with_decoder=*/false);
      HmmTopology topo(inv);
      std::vector<std::vector<int>> transcripts;
      for (const auto& rec : m.records) {
        std::vector<int> t;
        for (const auto& sym : rec.transcript) t.push_back(inv.index(sym));
        transcripts.push_back(t);
      }
      PhoneBigram lm = estimate_phone_bigram(transcripts, inv.size());
      StateGraph den = build_denominator_graph(lm, topo, false);
      std::filesystem::create_directories(out_dir);
      std::ofstream os(out_dir + "/hyp.txt");
      for (const auto& rec : m.records) {
        Waveform w = read_wav(rec.wav_path);
        FeatureMatrix feats = extract_mfcc(w, cfg.mfcc);
        Matrix input =
            splice_context(feats, cfg.splice_left, cfg.splice_right).frames;
        std::vector<int> phones =
            decode_utterance(model.infer_logits(input), den, topo);
        os << rec.utt_id;
        for (int p : phones) os << ' ' << inv.symbol(p);
        os << '\n';
      }
      std::cout << "hypotheses in " << out_dir << "/hyp.txt\n";
    } else if (score->parsed()) {
      auto read_trans = [&](const std::string& path) {
        std::ifstream is(path);
        if (!is) throw Error("cannot read " + path);
        std::map<std::string, std::vector<int>> out;
        std::string line;
        while (std::getline(is, line)) {
          std::istringstream ls(line);
          std::string utt, sym;
          if (!(ls >> utt)) continue;
          auto& t = out[utt];
          while (ls >> sym)
            if (sym != "sil") t.push_back(inv.index(sym));
        }
        return out;
      };
      auto refs = read_trans(ref_path);
      auto hyps = read_trans(hyp_path);
      std::vector<std::vector<int>> r, h;
      for (const auto& [utt, t] : refs) {
        auto it = hyps.find(utt);
        if (it == hyps.end()) throw Error("missing hypothesis for " + utt);
        r.push_back(t);
        h.push_back(it->second);
      }
      std::cout << "per " << harness_detail::fmt(phone_error_rate(r, h))
                << "\n";
    } else if (matrix->parsed()) {
      PreparedData data = prepare_data(cfg, out_dir + "/work");
      MatrixResult result = run_matrix(data, cfg);
      emit_report(result, data, cfg, out_dir + "/report");
      std::cout << "report in " << out_dir << "/report\n";
    } else if (report->parsed()) {
      std::ifstream is(results_path);
      std::string line;
      std::getline(is, line);  // header
      std::map<std::pair<std::string, int>, std::vector<double>> cells;
      while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string cond, shift, seed_s, per;
        std::getline(ls, cond, ',');
        std::getline(ls, shift, ',');
        std::getline(ls, seed_s, ',');
        std::getline(ls, per, ',');
        cells[{cond, std::stoi(shift)}].push_back(std::stod(per));
      }
      std::cout << "condition,shift_cents,mean_per,num_seeds\n";
      for (const auto& [key, pers] : cells) {
        double mean = 0.0;
        for (double p : pers) mean += p;
        std::cout << key.first << ',' << key.second << ','
                  << harness_detail::fmt(mean / double(pers.size())) << ','
                  << pers.size() << "\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
