// include/wake/codec.hh

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

#ifndef WAKE_CODEC_HH
#define WAKE_CODEC_HH

#include <set>
#include <string>
#include <vector>

#include "wake/dsp.hh"
#include "wake/rng.hh"
#include "wake/tape.hh"

namespace wake {

constexpr int kWatermarkBits = 32;
constexpr int kKeyBits = 8;

// Bit vector; values are 0/1. The signed encoding 2b-1 is used internally.
struct BitVec {
  std::vector<uint8_t> bits;

  BitVec() = default;
  explicit BitVec(std::vector<uint8_t> b) : bits(std::move(b)) {}
  static BitVec zeros(int n) { return BitVec(std::vector<uint8_t>(n, 0)); }
  static BitVec random(int n, Rng& rng) {
    BitVec v;
    v.bits.resize(n);
    for (auto& b : v.bits) b = static_cast<uint8_t>(rng.uniform_int(2));
    return v;
  }
  int size() const { return static_cast<int>(bits.size()); }
  BitVec complement() const {
    BitVec v = *this;
    for (auto& b : v.bits) b ^= 1;
    return v;
  }
  bool operator==(const BitVec& o) const { return bits == o.bits; }
  bool operator<(const BitVec& o) const { return bits < o.bits; }
};

using WatermarkBits = BitVec;
using KeyBits = BitVec;

// Hex wire format: |bits|/4 digits, big-endian bit order (bit 0 is the MSB of
// the first digit; for keys, bit 0 gates invertible block 1).
std::string bits_to_hex(const BitVec& b);
BitVec hex_to_bits(const std::string& hex, int nbits);

// percent of differing bits: 100 * hamming / L
double ber(const BitVec& a, const BitVec& b);

// uniform over the complement of `exclude`; throws if the key space is
// exhausted
KeyBits sample_key(int nbits, Rng& rng, const std::set<KeyBits>& exclude = {});

// Learnable maps between bit payloads and the time-domain carrier signal:
// a bias-free linear synthesis L -> clip_len and a bias-free linear readout
// clip_len -> L logits.
template <typename T>
struct CodecParams {
  Tensor<T> embed;  // (clip_len, L)
  Tensor<T> map;    // (L, clip_len)

  CodecParams() = default;
  CodecParams(int payload_bits, int clip_len, Rng& rng) {
    embed = Tensor<T>::randn({clip_len, payload_bits}, rng,
                             static_cast<T>(0.1 / std::sqrt(static_cast<double>(payload_bits))));
    map = Tensor<T>::randn({payload_bits, clip_len}, rng,
                           static_cast<T>(1.0 / std::sqrt(static_cast<double>(clip_len))));
  }
  int payload_bits() const { return embed.dim(1); }
  int clip_len() const { return embed.dim(0); }
};

template <typename T>
struct CodecVars {
  Var<T> embed, map;
};

template <typename T>
CodecVars<T> lift(Tape<T>& tape, const CodecParams<T>& p, bool trainable) {
  return CodecVars<T>{tape.leaf(p.embed, trainable), tape.leaf(p.map, trainable)};
}

// signed encoding of the payload as a (L, 1) column
template <typename T>
Tensor<T> signed_column(const BitVec& wm) {
  Tensor<T> s({wm.size(), 1});
  for (int i = 0; i < wm.size(); i++) s.v[i] = wm.bits[i] ? T(1) : T(-1);
  return s;
}

// wm -> time-domain signal of clip_len samples (linear, no bias)
template <typename T>
Var<T> bits_to_signal_op(Tape<T>& tape, const BitVec& wm, const CodecVars<T>& cv) {
  const Tensor<T>& e = tape.val(cv.embed);
  if (wm.size() != e.dim(1))
    throw std::invalid_argument("bits_to_signal: payload length " + std::to_string(wm.size()) +
                                " does not match codec (" + std::to_string(e.dim(1)) + ")");
  Var<T> s = tape.constant(signed_column<T>(wm));
  return reshape(matmul(cv.embed, s), {e.dim(0)});
}

// time-domain signal -> logits (length L)
template <typename T>
Var<T> signal_to_logits_op(Var<T> sig, const CodecVars<T>& cv) {
  Tape<T>& tape = *sig.tape;
  const Tensor<T>& m = tape.val(cv.map);
  if (tape.val(sig).numel() != m.dim(1))
    throw std::invalid_argument("signal_to_bits: signal length " +
                                std::to_string(tape.val(sig).numel()) +
                                " does not match codec (" + std::to_string(m.dim(1)) + ")");
  int len = m.dim(1);
  return reshape(matmul(cv.map, reshape(sig, {len, 1})), {m.dim(0)});
}

// logits -> bits; sigmoid(z) > 0.5 maps to 1, ties (z == 0) decode to 0
inline BitVec threshold_logits(const std::vector<float>& logits) {
  BitVec out;
  out.bits.resize(logits.size());
  for (size_t i = 0; i < logits.size(); i++) out.bits[i] = logits[i] > 0.0f ? 1 : 0;
  return out;
}

// Plain (non-graph) wrappers over the ops above.
AudioClip bits_to_signal(const BitVec& wm, const CodecParams<float>& p);
std::pair<std::vector<float>, BitVec> signal_to_bits(const std::vector<float>& sig,
                                                     const CodecParams<float>& p);

}  // namespace wake

#endif  // WAKE_CODEC_HH
