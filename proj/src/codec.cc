// src/codec.cc

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

#include "wake/codec.hh"

#include <stdexcept>

namespace wake {

namespace {

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string bits_to_hex(const BitVec& b) {
  if (b.size() % 4 != 0)
    throw std::invalid_argument("hex format requires a multiple of 4 bits, got " +
                                std::to_string(b.size()));
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (int i = 0; i < b.size(); i += 4) {
    int v = (b.bits[i] << 3) | (b.bits[i + 1] << 2) | (b.bits[i + 2] << 1) | b.bits[i + 3];
    out += digits[v];
  }
  return out;
}

BitVec hex_to_bits(const std::string& hex, int nbits) {
  if (nbits % 4 != 0 || static_cast<int>(hex.size()) != nbits / 4)
    throw std::invalid_argument("expected " + std::to_string(nbits / 4) + " hex digits, got \"" +
                                hex + "\"");
  BitVec out = BitVec::zeros(nbits);
  for (int i = 0; i < nbits / 4; i++) {
    int v = hex_digit(hex[i]);
    if (v < 0) throw std::invalid_argument("invalid hex digit '" + std::string(1, hex[i]) + "'");
    out.bits[4 * i + 0] = static_cast<uint8_t>((v >> 3) & 1);
    out.bits[4 * i + 1] = static_cast<uint8_t>((v >> 2) & 1);
    out.bits[4 * i + 2] = static_cast<uint8_t>((v >> 1) & 1);
    out.bits[4 * i + 3] = static_cast<uint8_t>(v & 1);
  }
  return out;
}

double ber(const BitVec& a, const BitVec& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("ber: length mismatch " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  int h = 0;
  for (int i = 0; i < a.size(); i++) h += a.bits[i] != b.bits[i];
  return 100.0 * h / a.size();
}

KeyBits sample_key(int nbits, Rng& rng, const std::set<KeyBits>& exclude) {
  if (nbits >= 1 && nbits < 63) {
    uint64_t space = uint64_t(1) << nbits;
    if (exclude.size() >= space)
      throw std::runtime_error("sample_key: exclusion set exhausts the key space");
  }
  for (;;) {
    KeyBits k = BitVec::random(nbits, rng);
    if (!exclude.count(k)) return k;
  }
}

AudioClip bits_to_signal(const BitVec& wm, const CodecParams<float>& p) {
  Tape<float> tape;
  tape.recording = false;
  CodecVars<float> cv = lift(tape, p, false);
  Var<float> sig = bits_to_signal_op(tape, wm, cv);
  return AudioClip(tape.val(sig).v);
}

std::pair<std::vector<float>, BitVec> signal_to_bits(const std::vector<float>& sig,
                                                     const CodecParams<float>& p) {
  Tape<float> tape;
  tape.recording = false;
  CodecVars<float> cv = lift(tape, p, false);
  Var<float> s = tape.leaf(TensorF({static_cast<int>(sig.size())}, sig));
  Var<float> logits = signal_to_logits_op(s, cv);
  std::vector<float> lv = tape.val(logits).v;
  return {lv, threshold_logits(lv)};
}

}  // namespace wake
