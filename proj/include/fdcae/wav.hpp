// fdcae/wav.hpp

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
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "fdcae/common.hpp"

namespace fdcae {

// PCM16 mono audio, samples scaled to [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

namespace wav_detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (std::uint32_t(p[3]) << 24);
}
inline std::uint16_t read_u16(const unsigned char* p) {
  return std::uint16_t(p[0] | (p[1] << 8));
}
inline void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}
inline void write_u16(std::ostream& os, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace wav_detail

inline Waveform read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("read_wav: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw FormatError("read_wav: not a RIFF/WAVE file: " + path);

  Waveform w;
  bool got_fmt = false, got_data = false;
  std::size_t pos = 12;
  std::uint16_t channels = 0, bits = 0, format = 0;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    std::uint32_t chunk_size = wav_detail::read_u32(hdr + 4);
    std::size_t body = pos + 8;
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (body + 16 > bytes.size())
        throw FormatError("read_wav: truncated fmt chunk: " + path);
      format = wav_detail::read_u16(bytes.data() + body);
      channels = wav_detail::read_u16(bytes.data() + body + 2);
      w.sample_rate = int(wav_detail::read_u32(bytes.data() + body + 4));
      bits = wav_detail::read_u16(bytes.data() + body + 14);
      got_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (!got_fmt) throw FormatError("read_wav: data before fmt: " + path);
      if (format != 1 || bits != 16)
        throw Error("read_wav: only PCM16 supported: " + path);
      if (channels != 1)
        throw Error("read_wav: only mono supported: " + path);
      if (body + chunk_size > bytes.size())
        throw FormatError("read_wav: truncated data chunk: " + path);
      std::size_t n = chunk_size / 2;
      w.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::int16_t s = std::int16_t(
            wav_detail::read_u16(bytes.data() + body + 2 * i));
        w.samples[i] = s / 32768.0;
      }
      got_data = true;
    }
    pos = body + chunk_size + (chunk_size & 1);
  }
  if (!got_data) throw FormatError("read_wav: no data chunk: " + path);
  return w;
}

inline void write_wav(const Waveform& w, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("write_wav: cannot open " + path);
  std::uint32_t data_bytes = std::uint32_t(w.samples.size() * 2);
  os.write("RIFF", 4);
  wav_detail::write_u32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  wav_detail::write_u32(os, 16);
  wav_detail::write_u16(os, 1);  // PCM
  wav_detail::write_u16(os, 1);  // mono
  wav_detail::write_u32(os, std::uint32_t(w.sample_rate));
  wav_detail::write_u32(os, std::uint32_t(w.sample_rate) * 2);
  wav_detail::write_u16(os, 2);
  wav_detail::write_u16(os, 16);
  os.write("data", 4);
  wav_detail::write_u32(os, data_bytes);
  for (double s : w.samples) {
    double c = std::clamp(s, -1.0, 1.0);
    int q = int(std::lround(c * 32768.0));
    q = std::clamp(q, -32768, 32767);
    wav_detail::write_u16(os, std::uint16_t(std::int16_t(q)));
  }
  if (!os) throw Error("write_wav: write failed: " + path);
}

}  // namespace fdcae
