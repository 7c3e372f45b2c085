// src/wav.cc

// Copyright 2026  WAKE contributors

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

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "wake/dsp.hh"

namespace wake {

namespace {

struct Reader {
  std::ifstream f;
  explicit Reader(const std::string& path) : f(path, std::ios::binary) {}

  void bytes(void* dst, size_t n) {
    f.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (!f) throw std::runtime_error("wav: truncated file");
  }
  uint32_t u32() {
    uint8_t b[4];
    bytes(b, 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
  }
  uint16_t u16() {
    uint8_t b[2];
    bytes(b, 2);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
  }
  std::string tag() {
    char c[4];
    bytes(c, 4);
    return std::string(c, 4);
  }
};

void put_u32(std::ofstream& f, uint32_t v) {
  uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                  static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
  f.write(reinterpret_cast<char*>(b), 4);
}

void put_u16(std::ofstream& f, uint16_t v) {
  uint8_t b[2] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8)};
  f.write(reinterpret_cast<char*>(b), 2);
}

}  // namespace

AudioClip read_wav(const std::string& path) {
  Reader r(path);
  if (!r.f) throw std::runtime_error("wav: cannot open " + path);
  if (r.tag() != "RIFF") throw std::runtime_error("wav: missing RIFF header in " + path);
  r.u32();  // riff size
  if (r.tag() != "WAVE") throw std::runtime_error("wav: not a WAVE file: " + path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  std::vector<uint8_t> data;

  while (r.f.peek() != EOF) {
    std::string id = r.tag();
    uint32_t size = r.u32();
    if (id == "fmt ") {
      format = r.u16();
      channels = r.u16();
      rate = r.u32();
      r.u32();  // byte rate
      r.u16();  // block align
      bits = r.u16();
      if (size > 16) r.f.seekg(size - 16, std::ios::cur);
      have_fmt = true;
    } else if (id == "data") {
      data.resize(size);
      if (size) r.bytes(data.data(), size);
    } else {
      r.f.seekg(size + (size & 1), std::ios::cur);
    }
  }
  if (!have_fmt) throw std::runtime_error("wav: no fmt chunk in " + path);
  if (channels != 1)
    throw std::runtime_error("wav: expected mono input, got " + std::to_string(channels) +
                             " channels in " + path);
  if (rate != kSampleRate)
    throw std::runtime_error("wav: expected 16000 Hz, got " + std::to_string(rate) +
                             " Hz in " + path + " (resample it first)");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  if (format == 1 && bits == 16) {
    size_t n = data.size() / 2;
    clip.samples.resize(n);
    for (size_t i = 0; i < n; i++) {
      int16_t s = static_cast<int16_t>(data[2 * i] | (data[2 * i + 1] << 8));
      clip.samples[i] = static_cast<float>(s) / 32768.0f;
    }
  } else if (format == 3 && bits == 32) {
    size_t n = data.size() / 4;
    clip.samples.resize(n);
    std::memcpy(clip.samples.data(), data.data(), n * 4);
  } else {
    throw std::runtime_error("wav: unsupported encoding (format " + std::to_string(format) +
                             ", " + std::to_string(bits) + " bit) in " + path);
  }
  for (float s : clip.samples)
    if (!std::isfinite(s)) throw std::runtime_error("wav: non-finite sample in " + path);
  return clip;
}

int64_t write_wav(const AudioClip& clip, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("wav: cannot write " + path);

  int64_t clipped = 0;
  uint32_t n = static_cast<uint32_t>(clip.samples.size());
  uint32_t data_size = n * 2;

  f.write("RIFF", 4);
  put_u32(f, 36 + data_size);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  put_u32(f, 16);
  put_u16(f, 1);  // PCM
  put_u16(f, 1);  // mono
  put_u32(f, static_cast<uint32_t>(clip.sample_rate));
  put_u32(f, static_cast<uint32_t>(clip.sample_rate) * 2);
  put_u16(f, 2);
  put_u16(f, 16);
  f.write("data", 4);
  put_u32(f, data_size);

  for (float s : clip.samples) {
    float x = s;
    if (x > 1.0f) {
      x = 1.0f;
      clipped++;
    } else if (x < -1.0f) {
      x = -1.0f;
      clipped++;
    }
    // round half away from zero, then clamp the +1.0 corner case
    long q = std::lround(static_cast<double>(x) * 32768.0);
    if (q > 32767) q = 32767;
    if (q < -32768) q = -32768;
    put_u16(f, static_cast<uint16_t>(static_cast<int16_t>(q)));
  }
  if (!f) throw std::runtime_error("wav: write failed for " + path);
  return clipped;
}

}  // namespace wake
