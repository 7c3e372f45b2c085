// src/dsp.cc

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

#include "wake/dsp.hh"

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace wake {

void StftConfig::validate() const {
  if (window_len <= 0 || hop <= 0)
    throw std::invalid_argument("stft config: window and hop must be positive");
  if (hop > window_len) throw std::invalid_argument("stft config: hop exceeds window length");
}

namespace {

// periodic Hann
inline double hann(int n, int win) { return 0.5 - 0.5 * std::cos(2.0 * M_PI * n / win); }

}  // namespace

template <typename T>
StftPlan<T>::StftPlan(const StftConfig& cfg, int signal_len) {
  cfg.validate();
  window_len = cfg.window_len;
  hop = cfg.hop;
  len = signal_len;
  bins = cfg.bins();
  frames = cfg.frames(signal_len);
  pad = window_len / 2;

  std::vector<double> w(window_len);
  for (int n = 0; n < window_len; n++) w[n] = hann(n, window_len);

  c_re = Tensor<T>({bins, window_len});
  c_im = Tensor<T>({bins, window_len});
  a_re = Tensor<T>({window_len, bins});
  a_im = Tensor<T>({window_len, bins});
  for (int k = 0; k < bins; k++) {
    double ck = (k == 0 || 2 * k == window_len) ? 1.0 : 2.0;
    for (int n = 0; n < window_len; n++) {
      double ang = 2.0 * M_PI * k * n / window_len;
      c_re.v[static_cast<int64_t>(k) * window_len + n] = static_cast<T>(std::cos(ang) * w[n]);
      c_im.v[static_cast<int64_t>(k) * window_len + n] = static_cast<T>(-std::sin(ang) * w[n]);
      a_re.v[static_cast<int64_t>(n) * bins + k] =
          static_cast<T>(ck / window_len * std::cos(ang) * w[n]);
      a_im.v[static_cast<int64_t>(n) * bins + k] =
          static_cast<T>(-ck / window_len * std::sin(ang) * w[n]);
    }
  }

  // window-sum normalization over the retained (un-padded) samples
  inv_wsum.resize(len);
  for (int n = 0; n < len; n++) {
    int64_t p = n + pad;
    double s = 0;
    for (int t = 0; t <= (len / hop); t++) {
      int64_t off = p - static_cast<int64_t>(t) * hop;
      if (off >= 0 && off < window_len) s += w[off] * w[off];
    }
    if (s < 1e-8)
      throw std::runtime_error("istft: window sum below 1e-8 at sample " + std::to_string(n) +
                               "; reconstruction undefined for this window/hop");
    inv_wsum[n] = static_cast<T>(1.0 / s);
  }
}

template struct StftPlan<float>;
template struct StftPlan<double>;

template <typename T>
const StftPlan<T>& stft_plan(const StftConfig& cfg, int signal_len) {
  static std::map<std::tuple<int, int, int>, StftPlan<T>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(cfg.window_len, cfg.hop, signal_len);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, StftPlan<T>(cfg, signal_len)).first;
  return it->second;
}

template const StftPlan<float>& stft_plan<float>(const StftConfig&, int);
template const StftPlan<double>& stft_plan<double>(const StftConfig&, int);

Spectrogram stft(const AudioClip& clip, const StftConfig& cfg) {
  if (clip.size() < 1) throw std::invalid_argument("stft: empty clip");
  const StftPlan<float>& plan = stft_plan<float>(cfg, static_cast<int>(clip.size()));
  Tape<float> tape;
  tape.recording = false;
  Var<float> x = tape.leaf(TensorF({static_cast<int>(clip.size())}, clip.samples));
  Var<float> s = stft_op(x, plan);
  return Spectrogram(tape.val(s));
}

AudioClip istft(const Spectrogram& spec, const StftConfig& cfg, int out_len) {
  const StftPlan<float>& plan = stft_plan<float>(cfg, out_len);
  Tape<float> tape;
  tape.recording = false;
  Var<float> s = tape.leaf(spec.data);
  Var<float> x = istft_op(s, plan, out_len);
  const TensorF& xv = tape.val(x);
  return AudioClip(xv.v);
}

}  // namespace wake
