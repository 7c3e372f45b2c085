// include/wake/attacks.hh

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

#ifndef WAKE_ATTACKS_HH
#define WAKE_ATTACKS_HH

#include <string>
#include <vector>

#include "wake/dsp.hh"
#include "wake/rng.hh"
#include "wake/tape.hh"

namespace wake {

enum class AttackOp { NA, UD, RN, PN, LF, HF, BF, BA, DA, SA };

std::string attack_op_name(AttackOp op);
AttackOp attack_op_from_name(const std::string& name);

// One editing operation with its parameters. Defaults: resample via 8 kHz
// (UD), 35 dB-SNR noise (RN/PN), 5 kHz low-pass, 500 Hz high-pass,
// 500..5000 Hz band-pass (4th-order Butterworth cascades), +/-6 dB gain
// (BA/DA), and a contiguous 10% mute (SA).
struct AttackConfig {
  AttackOp op = AttackOp::NA;
  double cutoff_hz = 5000.0;   // LF / HF
  double band_lo_hz = 500.0;   // BF
  double band_hi_hz = 5000.0;  // BF
  double snr_db = 35.0;        // RN / PN
  double gain_db = 6.0;        // BA (+) / DA (-); stored positive, sign per op
  double fraction = 0.1;       // SA zeroed span
  uint64_t seed = 0;           // RN / PN / SA randomness

  void validate() const;
};

AttackConfig default_attack(AttackOp op, uint64_t seed = 0);

// length-preserving, deterministic given cfg (including seed); NA is identity
AudioClip apply_attack(const AudioClip& clip, const AttackConfig& cfg);

// uniform draw from a non-empty menu
AttackConfig random_attack(Rng& rng, const std::vector<AttackConfig>& menu);

// Core kernels, templated so attacks can run inside double-precision checks.
template <typename T>
std::vector<T> apply_attack_vec(const std::vector<T>& x, const AttackConfig& cfg);

// Adjoint of the linearized attack (noise additions treated as constants),
// used by the backward pass of attack_op_var.
template <typename T>
std::vector<T> apply_attack_adjoint_vec(const std::vector<T>& g, const AttackConfig& cfg);

// Graph node: forward applies the attack, backward applies the adjoint.
template <typename T>
Var<T> attack_op_var(Var<T> x, const AttackConfig& cfg) {
  Tape<T>& t = *x.tape;
  const Tensor<T>& xv = t.val(x);
  std::vector<T> y = apply_attack_vec(xv.v, cfg);
  bool ng = t.recording && t.needs_grad(x);
  Var<T> o = t.raw_node(Tensor<T>(xv.shape, std::move(y)), ng);
  if (ng)
    t.set_back(o, [x, o, cfg]() {
      Tape<T>& tp = *x.tape;
      std::vector<T> gx = apply_attack_adjoint_vec(tp.grad(o).v, cfg);
      Tensor<T>& buf = tp.grad_buf(x.id);
      for (int64_t i = 0; i < buf.numel(); i++) buf.v[i] += gx[i];
    });
  return o;
}

// Biquad cascade designer/runner, exposed for tests.
struct Biquad {
  double b0, b1, b2, a1, a2;
};
std::vector<Biquad> butterworth_lowpass(double cutoff_hz, double fs, int order);
std::vector<Biquad> butterworth_highpass(double cutoff_hz, double fs, int order);

template <typename T>
void run_biquads(const std::vector<Biquad>& sections, std::vector<T>& x);

}  // namespace wake

#endif  // WAKE_ATTACKS_HH
