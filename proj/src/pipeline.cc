// src/pipeline.cc

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

#include "wake/pipeline.hh"

#include <set>

namespace wake {

void WatermarkStack::validate() const {
  if (entries.empty()) throw std::invalid_argument("watermark stack: empty");
  std::set<KeyBits> keys;
  for (const auto& [wm, key] : entries) {
    (void)wm;
    if (!keys.insert(key).second)
      throw std::invalid_argument("watermark stack: duplicate key " + bits_to_hex(key));
  }
}

namespace {

// embed one exact-length segment
std::vector<float> embed_segment(const std::vector<float>& x, const WatermarkBits& wm,
                                 const KeyBits& key, const ModelParamsF& m) {
  Tape<float> tape;
  tape.recording = false;
  ModelVars<float> mv = lift_generator(tape, m, false);
  const StftPlan<float>& plan = stft_plan<float>(StftConfig{}, m.shape.clip_len);
  Var<float> xv = tape.leaf(TensorF({m.shape.clip_len}, x));
  Var<float> y = embed_op(xv, wm, key, mv, plan);
  return tape.val(y).v;
}

std::vector<float> decode_segment_logits(const std::vector<float>& x, const KeyBits& key,
                                         const ModelParamsF& m, RedundancySource source,
                                         uint64_t gaussian_seed) {
  Tape<float> tape;
  tape.recording = false;
  ModelVars<float> mv = lift_generator(tape, m, false);
  const StftPlan<float>& plan = stft_plan<float>(StftConfig{}, m.shape.clip_len);
  Var<float> xv = tape.leaf(TensorF({m.shape.clip_len}, x));
  Var<float> spec = stft_op(xv, plan);
  Var<float> wm_pre;
  if (source == RedundancySource::kPredict) {
    wm_pre = predict_forward(spec, mv.predict);
  } else {
    Rng rng(gaussian_seed);
    wm_pre = tape.constant(gaussian_redundancy<float>({2, plan.bins, plan.frames}, rng));
  }
  Var<float> logits = decode_logits_op(spec, key, mv, plan, wm_pre);
  return tape.val(logits).v;
}

struct Segments {
  std::vector<std::pair<int64_t, int64_t>> spans;  // (offset, true length <= clip_len)
};

Segments split_segments(int64_t len, int clip_len) {
  if (len < clip_len)
    throw std::invalid_argument("clip shorter than one segment (" + std::to_string(len) +
                                " < " + std::to_string(clip_len) + " samples)");
  Segments s;
  int64_t full = len / clip_len;
  for (int64_t i = 0; i < full; i++) s.spans.emplace_back(i * clip_len, clip_len);
  int64_t rest = len - full * clip_len;
  if (rest >= clip_len / 2) s.spans.emplace_back(full * clip_len, rest);
  return s;
}

}  // namespace

AudioClip embed(const AudioClip& x, const WatermarkBits& wm, const KeyBits& key,
                const ModelParamsF& m) {
  if (key.size() != m.inn.n_blocks())
    throw std::invalid_argument("embed: key length " + std::to_string(key.size()) +
                                " does not match model (" + std::to_string(m.inn.n_blocks()) +
                                " blocks)");
  AudioClip out = x;
  for (const auto& [off, n] : split_segments(x.size(), m.shape.clip_len).spans) {
    std::vector<float> seg(m.shape.clip_len, 0.0f);
    std::copy(x.samples.begin() + off, x.samples.begin() + off + n, seg.begin());
    std::vector<float> marked = embed_segment(seg, wm, key, m);
    std::copy(marked.begin(), marked.begin() + n, out.samples.begin() + off);
  }
  return out;
}

DecodeResult decode(const AudioClip& x_wm, const KeyBits& key, const ModelParamsF& m,
                    RedundancySource source, uint64_t gaussian_seed) {
  if (key.size() != m.inn.n_blocks())
    throw std::invalid_argument("decode: key length " + std::to_string(key.size()) +
                                " does not match model (" + std::to_string(m.inn.n_blocks()) +
                                " blocks)");
  Segments segs = split_segments(x_wm.size(), m.shape.clip_len);
  int L = m.codec.payload_bits();
  DecodeResult res;
  res.logits.assign(L, 0.0f);
  res.confidence.assign(L, 0.0f);
  std::vector<int> votes(L, 0);
  int used = 0;
  for (const auto& [off, n] : segs.spans) {
    std::vector<float> seg(m.shape.clip_len, 0.0f);
    std::copy(x_wm.samples.begin() + off, x_wm.samples.begin() + off + n, seg.begin());
    std::vector<float> logits =
        decode_segment_logits(seg, key, m, source, gaussian_seed + used);
    for (int i = 0; i < L; i++) {
      res.logits[i] += logits[i];
      res.confidence[i] += 1.0f / (1.0f + std::exp(-logits[i]));
      votes[i] += logits[i] > 0.0f ? 1 : -1;
    }
    used++;
  }
  res.bits = BitVec::zeros(L);
  for (int i = 0; i < L; i++) {
    res.bits.bits[i] = votes[i] > 0 ? 1 : 0;  // ties decode to 0
    res.confidence[i] /= static_cast<float>(used);
  }
  return res;
}

AudioClip embed_stack(const AudioClip& x, const WatermarkStack& stack, const ModelParamsF& m) {
  stack.validate();
  AudioClip out = x;
  for (const auto& [wm, key] : stack.entries) out = embed(out, wm, key, m);
  return out;
}

}  // namespace wake
