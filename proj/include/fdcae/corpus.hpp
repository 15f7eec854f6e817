// fdcae/corpus.hpp

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

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fdcae/augment.hpp"
#include "fdcae/common.hpp"
#include "fdcae/wav.hpp"

namespace fdcae {

// ---------------------------------------------------------------------------
// Phone inventory

struct PhoneInfo {
  std::string symbol;
  bool voiced = false;
  // voiced phones: two formants; unvoiced: one noise resonance center
  double f1 = 0.0, f2 = 0.0;
  double noise_center = 0.0;
};

class PhoneInventory {
 public:
  PhoneInventory() {
    // canonical F1/F2 values for the vowels; nasals get low formants with a
    // damped second resonance; fricatives are noise-excited bands
    add("sil", false, 0, 0, 0);
    add("aa", true, 730, 1090, 0);
    add("iy", true, 270, 2290, 0);
    add("uw", true, 300, 870, 0);
    add("eh", true, 530, 1840, 0);
    add("ao", true, 570, 840, 0);
    add("s", false, 0, 0, 5500);
    add("sh", false, 0, 0, 3200);
    add("f", false, 0, 0, 4400);
    add("m", true, 250, 1000, 0);
    add("n", true, 300, 1400, 0);
    add("t", false, 0, 0, 4000);
  }

  int size() const { return int(phones_.size()); }
  const PhoneInfo& info(int idx) const { return phones_.at(idx); }
  const std::string& symbol(int idx) const { return phones_.at(idx).symbol; }

  int index(const std::string& sym) const {
    auto it = index_.find(sym);
    if (it == index_.end()) throw Error("unknown phone symbol: " + sym);
    return it->second;
  }
  bool contains(const std::string& sym) const { return index_.count(sym) > 0; }

  static constexpr int kSil = 0;

  std::vector<int> vowels() const { return {1, 2, 3, 4, 5}; }
  std::vector<int> consonants() const { return {6, 7, 8, 9, 10, 11}; }

 private:
  void add(const std::string& sym, bool voiced, double f1, double f2,
           double noise) {
    index_[sym] = int(phones_.size());
    phones_.push_back({sym, voiced, f1, f2, noise});
  }
  std::vector<PhoneInfo> phones_;
  std::map<std::string, int> index_;
};

// ---------------------------------------------------------------------------
// Speakers

enum class SpeakerGroup { adult_male, adult_female, child };

inline std::string to_string(SpeakerGroup g) {
  switch (g) {
    case SpeakerGroup::adult_male: return "adult_male";
    case SpeakerGroup::adult_female: return "adult_female";
    case SpeakerGroup::child: return "child";
  }
  throw Error("bad SpeakerGroup");
}

inline SpeakerGroup speaker_group_from_string(const std::string& s) {
  if (s == "adult_male") return SpeakerGroup::adult_male;
  if (s == "adult_female") return SpeakerGroup::adult_female;
  if (s == "child") return SpeakerGroup::child;
  throw Error("bad SpeakerGroup string: " + s);
}

struct SpeakerProfile {
  std::string id;
  SpeakerGroup group = SpeakerGroup::adult_male;
  double base_f0 = 120.0;
  double f0_jitter = 0.02;    // relative std of the slow f0 wander
  double vtl_scale = 1.0;     // formant multiplier
  double accent_shift = 0.0;  // additive F2 offset in Hz
};

struct PopulationCounts {
  int adult_male = 1;
  int adult_female = 1;
  int child = 1;
};

inline std::vector<SpeakerProfile> make_population(std::uint64_t seed,
                                                   const PopulationCounts& counts,
                                                   const std::string& id_prefix = "spk",
                                                   double accent_f2_hz = 0.0) {
  Rng rng = make_rng(seed);
  std::vector<SpeakerProfile> out;
  auto gen = [&](SpeakerGroup g, int n, double f0_lo, double f0_hi,
                 double vtl_lo, double vtl_hi) {
    std::uniform_real_distribution<double> f0(f0_lo, f0_hi);
    std::uniform_real_distribution<double> vtl(vtl_lo, vtl_hi);
    std::uniform_real_distribution<double> jit(0.01, 0.03);
    for (int i = 0; i < n; ++i) {
      SpeakerProfile sp;
      sp.id = id_prefix + "_" + to_string(g) + "_" + std::to_string(i);
      sp.group = g;
      sp.base_f0 = f0(rng);
      sp.f0_jitter = jit(rng);
      sp.vtl_scale = vtl(rng);
      sp.accent_shift = accent_f2_hz;
      out.push_back(sp);
    }
  };
  gen(SpeakerGroup::adult_male, counts.adult_male, 90, 140, 0.85, 1.0);
  gen(SpeakerGroup::adult_female, counts.adult_female, 160, 230, 0.85, 1.0);
  gen(SpeakerGroup::child, counts.child, 200, 350, 1.05, 1.3);
  return out;
}

// ---------------------------------------------------------------------------
// Source-filter synthesis

struct PhoneSpan {
  int phone = 0;
  int start_sample = 0;
  int end_sample = 0;  // exclusive
};

namespace synth_detail {

// Two-pole resonator applied in place.
inline void resonate(std::vector<double>& x, double center_hz, double r,
                     int sr) {
  const double theta = 2.0 * M_PI * center_hz / sr;
  const double a1 = 2.0 * r * std::cos(theta), a2 = -r * r;
  double y1 = 0.0, y2 = 0.0;
  for (double& v : x) {
    double y = v + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    v = y;
  }
}

}  // namespace synth_detail

/// Deterministic source-filter rendering of a phone transcript:
/// voiced phones are a jittered sawtooth through two formant resonators,
/// unvoiced phones shaped noise, sil near-silence. Returns ground-truth
/// phone spans when `spans` is non-null.
inline Waveform synth_utterance(const SpeakerProfile& sp,
                                const std::vector<int>& transcript,
                                const PhoneInventory& inv, std::uint64_t seed,
                                std::vector<PhoneSpan>* spans = nullptr,
                                int sr = 16000) {
  if (transcript.empty()) throw Error("synth_utterance: empty transcript");
  for (int p : transcript)
    if (p < 0 || p >= inv.size())
      throw Error("synth_utterance: phone index out of range");

  Rng rng = make_rng(seed, 0x5f3e);
  std::uniform_real_distribution<double> dur_ms(80.0, 160.0);
  std::normal_distribution<double> gauss;

  Waveform w;
  w.sample_rate = sr;
  if (spans) spans->clear();

  double phase = 0.0;
  double f0_wander = 0.0;
  for (int p : transcript) {
    const PhoneInfo& ph = inv.info(p);
    const int n = int(dur_ms(rng) * 1e-3 * sr);
    const int start = int(w.samples.size());
    std::vector<double> seg(n, 0.0);

    if (p == PhoneInventory::kSil) {
      for (double& v : seg) v = 1e-4 * gauss(rng);
    } else if (ph.voiced) {
      for (int i = 0; i < n; ++i) {
        if (i % 160 == 0)  // slow f0 wander, updated every 10 ms
          f0_wander = 0.8 * f0_wander + 0.6 * sp.f0_jitter * gauss(rng);
        double f0 = sp.base_f0 * (1.0 + f0_wander);
        phase += f0 / sr;
        phase -= std::floor(phase);
        seg[i] = 2.0 * phase - 1.0;  // sawtooth source
      }
      synth_detail::resonate(seg, ph.f1 * sp.vtl_scale, 0.985, sr);
      synth_detail::resonate(seg, ph.f2 * sp.vtl_scale + sp.accent_shift,
                             0.97, sr);
    } else {
      for (double& v : seg) v = gauss(rng);
      synth_detail::resonate(seg, ph.noise_center * sp.vtl_scale, 0.96, sr);
      if (ph.symbol == "t") {
        // stop: burst then closure
        int burst = n / 3;
        for (int i = burst; i < n; ++i) seg[i] = 1e-4 * gauss(rng);
      }
    }

    // 5 ms raised-cosine edges against clicks
    const int ramp = std::min(n / 2, sr / 200);
    for (int i = 0; i < ramp; ++i) {
      double g = 0.5 - 0.5 * std::cos(M_PI * i / ramp);
      seg[i] *= g;
      seg[n - 1 - i] *= g;
    }

    // normalize the segment so phones have comparable loudness
    double peak = 1e-9;
    for (double v : seg) peak = std::max(peak, std::abs(v));
    double target = p == PhoneInventory::kSil ? 1.0 : (ph.voiced ? 0.7 : 0.35);
    if (p != PhoneInventory::kSil)
      for (double& v : seg) v *= target / peak;

    w.samples.insert(w.samples.end(), seg.begin(), seg.end());
    if (spans) spans->push_back({p, start, int(w.samples.size())});
  }
  return w;
}

// ---------------------------------------------------------------------------
// Manifests

enum class Split { train, test, adapt };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::test: return "test";
    case Split::adapt: return "adapt";
  }
  throw Error("bad Split");
}

struct UtteranceRecord {
  std::string utt_id;
  std::string speaker_id;
  SpeakerGroup group = SpeakerGroup::adult_male;
  std::string wav_path;
  std::vector<std::string> transcript;
  double duration_s = 0.0;
};

struct Manifest {
  std::vector<UtteranceRecord> records;
  Split split = Split::train;
  std::string corpus_tag;

  double total_duration_s() const {
    double d = 0.0;
    for (const auto& r : records) d += r.duration_s;
    return d;
  }

  std::set<std::string> speakers() const {
    std::set<std::string> s;
    for (const auto& r : records) s.insert(r.speaker_id);
    return s;
  }
};

inline void save_manifest(const Manifest& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("save_manifest: cannot open " + path);
  os << "#corpus\t" << m.corpus_tag << "\t" << to_string(m.split) << "\n";
  for (const auto& r : m.records) {
    os << r.utt_id << "\t" << r.speaker_id << "\t" << to_string(r.group)
       << "\t" << r.wav_path << "\t";
    for (std::size_t i = 0; i < r.transcript.size(); ++i)
      os << (i ? " " : "") << r.transcript[i];
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", r.duration_s);
    os << "\t" << buf << "\n";
  }
  if (!os) throw Error("save_manifest: write failed " + path);
}

inline Manifest load_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("load_manifest: cannot open " + path);
  Manifest m;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    if (first && fields.size() == 3 && fields[0] == "#corpus") {
      m.corpus_tag = fields[1];
      if (fields[2] == "train") m.split = Split::train;
      else if (fields[2] == "test") m.split = Split::test;
      else m.split = Split::adapt;
      first = false;
      continue;
    }
    first = false;
    if (fields.size() != 6)
      throw FormatError("load_manifest: bad record in " + path);
    UtteranceRecord r;
    r.utt_id = fields[0];
    r.speaker_id = fields[1];
    r.group = speaker_group_from_string(fields[2]);
    r.wav_path = fields[3];
    std::stringstream ts(fields[4]);
    std::string ph;
    while (ts >> ph) r.transcript.push_back(ph);
    r.duration_s = std::stod(fields[5]);
    m.records.push_back(r);
  }
  return m;
}

// Ground-truth phone spans, one utterance per line:
// utt_id<TAB>phone:start:end phone:start:end ...
inline void save_timings(
    const std::map<std::string, std::vector<PhoneSpan>>& timings,
    const PhoneInventory& inv, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("save_timings: cannot open " + path);
  for (const auto& [utt, spans] : timings) {
    os << utt;
    for (const auto& s : spans)
      os << (&s == &spans.front() ? "\t" : " ") << inv.symbol(s.phone) << ":"
         << s.start_sample << ":" << s.end_sample;
    os << "\n";
  }
}

inline std::map<std::string, std::vector<PhoneSpan>> load_timings(
    const PhoneInventory& inv, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("load_timings: cannot open " + path);
  std::map<std::string, std::vector<PhoneSpan>> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    std::string utt = line.substr(0, tab);
    std::stringstream ss(line.substr(tab + 1));
    std::string tok;
    while (ss >> tok) {
      auto c1 = tok.find(':');
      auto c2 = tok.find(':', c1 + 1);
      PhoneSpan span;
      span.phone = inv.index(tok.substr(0, c1));
      span.start_sample = std::stoi(tok.substr(c1 + 1, c2 - c1 - 1));
      span.end_sample = std::stoi(tok.substr(c2 + 1));
      out[utt].push_back(span);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpus construction

struct CorpusConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "corpus";
  int adult_male_speakers = 10;
  int adult_female_speakers = 10;
  int utts_per_adult = 10;
  int child_train_speakers = 4;
  int child_test_speakers = 6;
  int child_train_utts = 5;
  int child_test_utts = 5;
  int accent_train_speakers = 4;
  int accent_test_speakers = 5;
  int accent_utts = 5;
  int min_phones = 6;
  int max_phones = 12;
  double accent_f2_frac = 0.12;  // relative F2 shift of the accented children
};

struct CorpusSet {
  Manifest adult_train;    // joins with child_train for multi-condition training
  Manifest child_train;
  Manifest child_test;
  Manifest accent_train;   // out-of-domain child population
  Manifest accent_test;
  std::string timings_path;
};

namespace corpus_detail {

// vowel/consonant alternation between the boundary sils
inline std::vector<int> random_transcript(const PhoneInventory& inv, Rng& rng,
                                          int min_phones, int max_phones) {
  std::uniform_int_distribution<int> len(min_phones, max_phones);
  std::uniform_int_distribution<int> coin(0, 1);
  auto vowels = inv.vowels();
  auto cons = inv.consonants();
  std::uniform_int_distribution<int> pick_v(0, int(vowels.size()) - 1);
  std::uniform_int_distribution<int> pick_c(0, int(cons.size()) - 1);
  std::vector<int> t;
  t.push_back(PhoneInventory::kSil);
  bool vowel = coin(rng) == 1;
  int n = len(rng);
  for (int i = 0; i < n; ++i) {
    t.push_back(vowel ? vowels[pick_v(rng)] : cons[pick_c(rng)]);
    vowel = !vowel;
  }
  t.push_back(PhoneInventory::kSil);
  return t;
}

inline void synth_into(const PhoneInventory& inv,
                       const std::vector<SpeakerProfile>& speakers,
                       int utts_per_speaker, const std::string& wav_dir,
                       std::uint64_t seed, const CorpusConfig& cfg,
                       Manifest* manifest,
                       std::map<std::string, std::vector<PhoneSpan>>* timings) {
  std::filesystem::create_directories(wav_dir);
  for (const auto& sp : speakers) {
    for (int u = 0; u < utts_per_speaker; ++u) {
      std::string utt_id = sp.id + "_u" + std::to_string(u);
      Rng rng = make_rng(seed, std::hash<std::string>{}(utt_id));
      std::vector<int> transcript =
          random_transcript(inv, rng, cfg.min_phones, cfg.max_phones);
      std::vector<PhoneSpan> spans;
      Waveform w = synth_utterance(sp, transcript, inv, rng(), &spans);
      std::string wav_path = wav_dir + "/" + utt_id + ".wav";
      write_wav(w, wav_path);
      UtteranceRecord rec;
      rec.utt_id = utt_id;
      rec.speaker_id = sp.id;
      rec.group = sp.group;
      rec.wav_path = wav_path;
      for (int p : transcript) rec.transcript.push_back(inv.symbol(p));
      rec.duration_s = w.duration_s();
      manifest->records.push_back(rec);
      (*timings)[utt_id] = spans;
    }
  }
}

}  // namespace corpus_detail

inline CorpusSet build_corpus(const CorpusConfig& cfg,
                              const PhoneInventory& inv = {}) {
  std::filesystem::create_directories(cfg.out_dir);
  CorpusSet set;
  std::map<std::string, std::vector<PhoneSpan>> timings;

  PopulationCounts adult_counts;
  adult_counts.adult_male = cfg.adult_male_speakers;
  adult_counts.adult_female = cfg.adult_female_speakers;
  adult_counts.child = 0;
  auto adults = make_population(cfg.seed, adult_counts, "adult");

  PopulationCounts kid_counts{0, 0,
                              cfg.child_train_speakers + cfg.child_test_speakers};
  auto kids = make_population(cfg.seed + 1, kid_counts, "kid");
  std::vector<SpeakerProfile> kids_train(kids.begin(),
                                         kids.begin() + cfg.child_train_speakers);
  std::vector<SpeakerProfile> kids_test(kids.begin() + cfg.child_train_speakers,
                                        kids.end());

  // second child population with shifted F2: the out-of-domain corpus
  PopulationCounts accent_counts{0, 0,
                                 cfg.accent_train_speakers + cfg.accent_test_speakers};
  auto accented = make_population(cfg.seed + 2, accent_counts, "acc");
  for (auto& sp : accented) sp.accent_shift = cfg.accent_f2_frac * 1500.0;
  std::vector<SpeakerProfile> acc_train(accented.begin(),
                                        accented.begin() + cfg.accent_train_speakers);
  std::vector<SpeakerProfile> acc_test(accented.begin() + cfg.accent_train_speakers,
                                       accented.end());

  auto wavs = cfg.out_dir + "/wav";
  set.adult_train.split = Split::train;
  set.adult_train.corpus_tag = "adult_train";
  corpus_detail::synth_into(inv, adults, cfg.utts_per_adult, wavs, cfg.seed,
                            cfg, &set.adult_train, &timings);

  set.child_train.split = Split::train;
  set.child_train.corpus_tag = "child_train";
  corpus_detail::synth_into(inv, kids_train, cfg.child_train_utts, wavs,
                            cfg.seed, cfg, &set.child_train, &timings);

  set.child_test.split = Split::test;
  set.child_test.corpus_tag = "child_test";
  corpus_detail::synth_into(inv, kids_test, cfg.child_test_utts, wavs,
                            cfg.seed, cfg, &set.child_test, &timings);

  set.accent_train.split = Split::adapt;
  set.accent_train.corpus_tag = "accent_train";
  corpus_detail::synth_into(inv, acc_train, cfg.accent_utts, wavs, cfg.seed,
                            cfg, &set.accent_train, &timings);

  set.accent_test.split = Split::test;
  set.accent_test.corpus_tag = "accent_test";
  corpus_detail::synth_into(inv, acc_test, cfg.accent_utts, wavs, cfg.seed,
                            cfg, &set.accent_test, &timings);

  save_manifest(set.adult_train, cfg.out_dir + "/adult_train.tsv");
  save_manifest(set.child_train, cfg.out_dir + "/child_train.tsv");
  save_manifest(set.child_test, cfg.out_dir + "/child_test.tsv");
  save_manifest(set.accent_train, cfg.out_dir + "/accent_train.tsv");
  save_manifest(set.accent_test, cfg.out_dir + "/accent_test.tsv");
  set.timings_path = cfg.out_dir + "/timings.txt";
  save_timings(timings, inv, set.timings_path);
  return set;
}

/// Original + speed 0.9 + speed 1.1 copies; the perturbed copies also get a
/// random volume gain in [0.8, 1.25]. Exactly triples the record count.
inline Manifest triple_with_perturbation(const Manifest& m,
                                         const std::string& out_wav_dir,
                                         std::uint64_t seed) {
  if (m.split != Split::train && m.split != Split::adapt)
    throw Error("triple_with_perturbation: expects a training split");
  for (const auto& r : m.records)
    if (r.utt_id.rfind("sp0.9-", 0) == 0 || r.utt_id.rfind("sp1.1-", 0) == 0)
      throw Error("triple_with_perturbation: manifest already augmented");

  std::filesystem::create_directories(out_wav_dir);
  Manifest out;
  out.split = m.split;
  out.corpus_tag = m.corpus_tag + "_x3";
  for (const auto& r : m.records) {
    out.records.push_back(r);
    for (double factor : {0.9, 1.1}) {
      Rng rng = make_rng(seed, std::hash<std::string>{}(r.utt_id) ^
                                   std::uint64_t(factor * 1000));
      std::uniform_real_distribution<double> vol(0.8, 1.25);
      Waveform w = read_wav(r.wav_path);
      Waveform p = volume_perturb(speed_perturb(w, factor), vol(rng));
      UtteranceRecord rec = r;
      char prefix[16];
      std::snprintf(prefix, sizeof(prefix), "sp%.1f-", factor);
      rec.utt_id = prefix + r.utt_id;
      rec.wav_path = out_wav_dir + "/" + rec.utt_id + ".wav";
      rec.duration_s = p.duration_s();
      write_wav(p, rec.wav_path);
      out.records.push_back(rec);
    }
  }
  return out;
}

}  // namespace fdcae
