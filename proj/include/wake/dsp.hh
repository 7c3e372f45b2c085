// include/wake/dsp.hh

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

#ifndef WAKE_DSP_HH
#define WAKE_DSP_HH

#include <string>
#include <vector>

#include "wake/tape.hh"
#include "wake/tensor.hh"

namespace wake {

constexpr int kSampleRate = 16000;
constexpr int kClipLen = 16000;  // 1 s at 16 kHz

// Fixed-rate mono waveform, nominal range [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = kSampleRate;

  AudioClip() = default;
  explicit AudioClip(std::vector<float> s, int rate = kSampleRate)
      : samples(std::move(s)), sample_rate(rate) {}
  int64_t size() const { return static_cast<int64_t>(samples.size()); }
};

// Complex STFT grid stored as a real (2, F, T) tensor: channel 0 = real part,
// channel 1 = imaginary part.
struct Spectrogram {
  TensorF data;

  Spectrogram() = default;
  explicit Spectrogram(TensorF d) : data(std::move(d)) {}
  int bins() const { return data.dim(1); }
  int frames() const { return data.dim(2); }
};

struct StftConfig {
  int window_len = 1000;
  int hop = 400;
  bool centered = true;  // reflect padding of window_len/2 on each side

  int bins() const { return window_len / 2 + 1; }
  int frames(int len) const { return 1 + len / hop; }
  void validate() const;
};

// Precomputed matrices for one (window, hop, signal length) combination.
// The Hann analysis window is folded into the DFT matrices, so
//   stft  = stack(c_re * unfold(x), c_im * unfold(x))
//   istft = fold_norm(a_re * S_re + a_im * S_im)
// with fold_norm dividing by the summed squared window.
template <typename T>
struct StftPlan {
  int window_len = 0, hop = 0, len = 0, bins = 0, frames = 0, pad = 0;
  Tensor<T> c_re, c_im;       // (F, win): windowed forward DFT
  Tensor<T> a_re, a_im;       // (win, F): windowed inverse DFT
  std::vector<T> inv_wsum;    // (len): 1 / sum of squared shifted windows

  StftPlan() = default;
  StftPlan(const StftConfig& cfg, int signal_len);
};

// Plans are cached per (window, hop, len); safe for concurrent lookup.
template <typename T>
const StftPlan<T>& stft_plan(const StftConfig& cfg, int signal_len);

// Graph-building transforms: x (len) -> (2, F, T) and back.
template <typename T>
Var<T> stft_op(Var<T> x, const StftPlan<T>& plan) {
  Tape<T>& t = *x.tape;
  Var<T> frames = unfold(x, plan.window_len, plan.hop);
  Var<T> re = matmul(t.constant(plan.c_re), frames);
  Var<T> im = matmul(t.constant(plan.c_im), frames);
  int f = plan.bins, fr = plan.frames;
  return concat_ch<T>({reshape(re, {1, f, fr}), reshape(im, {1, f, fr})});
}

template <typename T>
Var<T> istft_op(Var<T> spec, const StftPlan<T>& plan, int out_len) {
  Tape<T>& t = *spec.tape;
  const Tensor<T>& sv = t.val(spec);
  if (sv.rank() != 3 || sv.dim(0) != 2 || sv.dim(1) != plan.bins || sv.dim(2) != plan.frames)
    throw std::invalid_argument("istft: spectrogram shape " + shape_str(sv.shape) +
                                " inconsistent with plan");
  if (out_len != plan.len) throw std::invalid_argument("istft: length mismatch with plan");
  int f = plan.bins, fr = plan.frames;
  Var<T> re = reshape(slice_ch(spec, 0, 1), {f, fr});
  Var<T> im = reshape(slice_ch(spec, 1, 2), {f, fr});
  Var<T> frames = add(matmul(t.constant(plan.a_re), re), matmul(t.constant(plan.a_im), im));
  return fold_norm(frames, plan.hop, plan.pad, out_len, plan.inv_wsum);
}

// Plain (non-graph) transforms over the domain types.
Spectrogram stft(const AudioClip& clip, const StftConfig& cfg);
AudioClip istft(const Spectrogram& spec, const StftConfig& cfg, int out_len);

// WAV I/O: mono RIFF, 16 kHz, PCM16 or float32. write_wav emits PCM16 with
// round-half-away-from-zero quantization and returns the number of samples
// that had to be clipped into [-1, 1].
AudioClip read_wav(const std::string& path);
int64_t write_wav(const AudioClip& clip, const std::string& path);

}  // namespace wake

#endif  // WAKE_DSP_HH
