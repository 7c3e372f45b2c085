// include/wake/pipeline.hh

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

#ifndef WAKE_PIPELINE_HH
#define WAKE_PIPELINE_HH

#include "wake/codec.hh"
#include "wake/dsp.hh"
#include "wake/inn.hh"
#include "wake/losses.hh"
#include "wake/predict.hh"

namespace wake {

// Model width knobs. The block/layer counts are fixed by the architecture
// (8 invertible blocks matching the 8-bit key, 5-layer dense subnets,
// 8 residual blocks); the channel widths are the desk-scale defaults.
struct ModelShape {
  int payload_bits = kWatermarkBits;
  int key_bits = kKeyBits;
  int clip_len = kClipLen;
  int inn_growth = 8;
  int predict_hidden = 16;
  int disc_width = 8;
  float clamp_scale = 2.0f;
};

// Every learnable parameter of the system.
template <typename T>
struct ModelParams {
  ModelShape shape;
  CodecParams<T> codec;
  InnParams<T> inn;
  PredictParams<T> predict;
  DiscParams<T> disc;

  ModelParams() = default;
  ModelParams(const ModelShape& s, Rng& rng)
      : shape(s),
        codec(s.payload_bits, s.clip_len, rng),
        inn(s.key_bits, 2, s.inn_growth, rng, static_cast<T>(s.clamp_scale)),
        predict(2, s.predict_hidden, 8, rng),
        disc(2, rng, s.disc_width) {}
};

using ModelParamsF = ModelParams<float>;

template <typename T>
struct ModelVars {
  CodecVars<T> codec;
  InnVars<T> inn;
  PredictVars<T> predict;
};

// lifts the generator-side parameters (codec + inn + predict) onto a tape;
// the discriminator is lifted separately by whoever trains it
template <typename T>
ModelVars<T> lift_generator(Tape<T>& tape, const ModelParams<T>& m, bool trainable) {
  return ModelVars<T>{lift(tape, m.codec, trainable), lift(tape, m.inn, trainable),
                      lift(tape, m.predict, trainable)};
}

// Ordered (watermark, key) pairs applied sequentially; keys must be distinct.
struct WatermarkStack {
  std::vector<std::pair<WatermarkBits, KeyBits>> entries;

  void validate() const;
};

// Graph-building embed: x (clip_len) -> watermarked signal (clip_len).
// The wm_out redundancy branch is computed and discarded.
template <typename T>
Var<T> embed_op(Var<T> x, const BitVec& wm, const KeyBits& key, const ModelVars<T>& mv,
                const StftPlan<T>& plan) {
  Tape<T>& tape = *x.tape;
  Var<T> x_f = stft_op(x, plan);
  Var<T> wm_sig = bits_to_signal_op(tape, wm, mv.codec);
  Var<T> wm_f = stft_op(wm_sig, plan);
  auto [x_out, wm_out] = inn_forward(x_f, wm_f, key, mv.inn);
  (void)wm_out;
  return istft_op(x_out, plan, plan.len);
}

// Graph-building decode: returns the logits; the x_wm_out redundancy branch
// is computed and discarded. `spec` must be stft_op(x_e) on the same plan.
template <typename T>
Var<T> decode_logits_op(Var<T> spec, const KeyBits& key, const ModelVars<T>& mv,
                        const StftPlan<T>& plan, Var<T> wm_pre) {
  auto [x_wm_out, wm_pre_out] = inn_backward(spec, wm_pre, key, mv.inn);
  (void)x_wm_out;
  Var<T> sig = istft_op(wm_pre_out, plan, plan.len);
  return signal_to_logits_op(sig, mv.codec);
}

// Plain-value pipeline entry points. Clips longer than one segment are
// processed in independent 1 s segments (the trailing partial segment is
// embedded only if at least half a segment long); decode majority-votes per
// bit across segments.
AudioClip embed(const AudioClip& x, const WatermarkBits& wm, const KeyBits& key,
                const ModelParamsF& m);

struct DecodeResult {
  WatermarkBits bits;
  std::vector<float> logits;       // per-bit, summed decision scores
  std::vector<float> confidence;   // per-bit mean sigmoid across segments
};

DecodeResult decode(const AudioClip& x_wm, const KeyBits& key, const ModelParamsF& m,
                    RedundancySource source = RedundancySource::kPredict,
                    uint64_t gaussian_seed = 0);

AudioClip embed_stack(const AudioClip& x, const WatermarkStack& stack, const ModelParamsF& m);

}  // namespace wake

#endif  // WAKE_PIPELINE_HH
