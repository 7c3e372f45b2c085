// include/wake/losses.hh

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

#ifndef WAKE_LOSSES_HH
#define WAKE_LOSSES_HH

#include "wake/codec.hh"
#include "wake/dsp.hh"
#include "wake/inn.hh"

namespace wake {

// Training-objective weights. Defaults follow the reference configuration:
// w_p1, w_p2, w_p3, w_t1, w_t2, w_l1, w_l2 = 1, 1, 5, 10, 10, 1000, 0.01.
struct LossWeights {
  float w_p1 = 1.0f;    // time-domain L2
  float w_p2 = 1.0f;    // adversarial term
  float w_p3 = 5.0f;    // multi-scale Mel term
  float w_t1 = 10.0f;   // perceptual mix weight
  float w_t2 = 10.0f;   // accuracy mix weight
  float w_l1 = 1000.0f; // wrong-key hinge weight
  float w_l2 = 0.01f;   // wrong-key hinge threshold
  // Off by default: replaces the printed adversarial term log(1 - D(x_wm))
  // with the non-saturating variant -log D(x_wm).
  bool adv_nonsaturating = false;
};

// Per-sample loss weights: `hi` on the first and last floor(frac*len)
// samples, `lo` elsewhere.
std::vector<float> broadweight_vector(int len, double frac = 0.03, float hi = 10.0f,
                                      float lo = 1.0f);

// Multi-scale Mel configuration: scales e = {lo..hi}, per-scale STFT window
// 2^i with hop 2^i/4, 64 Mel bins over 0..8 kHz (Slaney scale, area
// normalized), magnitudes divided by the window energy, log(1+mel)
// compression.
struct MelScaleConfig {
  int scale_lo = 5;
  int scale_hi = 11;
  int n_mels = 64;
  double fmin = 0.0;
  double fmax = 8000.0;
};

template <typename T>
struct MelBank {
  const StftPlan<T>* plan = nullptr;
  Tensor<T> filters;  // (n_mels, bins), window-energy normalization folded in
};

// cached per (config, signal length)
template <typename T>
const std::vector<MelBank<T>>& mel_banks(const MelScaleConfig& cfg, int len);

template <typename T>
Var<T> mel_spectrum_op(Var<T> x, const MelBank<T>& bank) {
  Tape<T>& t = *x.tape;
  Var<T> frames = unfold(x, bank.plan->window_len, bank.plan->hop);
  Var<T> re = matmul(t.constant(bank.plan->c_re), frames);
  Var<T> im = matmul(t.constant(bank.plan->c_im), frames);
  Var<T> mag =
      sqrt_v(add_const(add(mul(re, re), mul(im, im)), static_cast<T>(1e-8)));
  return log_v(add_const(matmul(t.constant(bank.filters), mag), T(1)));
}

// sum over scales of (mean |S_i(xW)-S_i(yW)| + mean (S_i(xW)-S_i(yW))^2)
template <typename T>
Var<T> multiscale_mel_loss_op(Var<T> x, Var<T> y, const std::vector<T>& weight_vec,
                              const MelScaleConfig& cfg) {
  Tape<T>& t = *x.tape;
  const Tensor<T>& xv = t.val(x);
  detail::check_same_shape("multiscale_mel_loss", xv, t.val(y));
  int len = static_cast<int>(xv.numel());
  if (static_cast<int>(weight_vec.size()) != len)
    throw std::invalid_argument("multiscale_mel_loss: weight length mismatch");
  Var<T> w = t.constant(Tensor<T>({len}, weight_vec));
  Var<T> xw = mul(x, w);
  Var<T> yw = mul(y, w);
  Var<T> total = t.constant(Tensor<T>::scalar(T(0)));
  for (const MelBank<T>& bank : mel_banks<T>(cfg, len)) {
    Var<T> d = sub(mel_spectrum_op(xw, bank), mel_spectrum_op(yw, bank));
    total = add(total, add(mean_v(abs_v(d)), mean_v(mul(d, d))));
  }
  return total;
}

double multiscale_mel_loss(const AudioClip& x, const AudioClip& y,
                           const std::vector<float>& weight_vec, const MelScaleConfig& cfg);

// ---------------------------------------------------------------------------
// discriminator: strided conv stack over the (2, F, T) spectrogram, global
// mean pool, logit soft-clamped to (-15, 15) so log(1 - D) stays finite.

template <typename T>
struct DiscParams {
  std::vector<ConvLayer<T>> layers;

  DiscParams() = default;
  DiscParams(int in_ch, Rng& rng, int width = 8) {
    int c = in_ch;
    for (int i = 0; i < 3; i++) {
      layers.emplace_back(width, c, 3, rng, false);
      c = width;
      width *= 2;
    }
    layers.emplace_back(1, c, 3, rng, false);
  }
};

template <typename T>
struct DiscVars {
  std::vector<ConvLayerVars<T>> layers;
};

template <typename T>
DiscVars<T> lift(Tape<T>& tape, const DiscParams<T>& d, bool trainable) {
  DiscVars<T> v;
  for (const auto& l : d.layers) v.layers.push_back(lift(tape, l, trainable));
  return v;
}

// returns D(spec) strictly inside (0, 1)
template <typename T>
Var<T> disc_forward(Var<T> spec, const DiscVars<T>& d) {
  Var<T> h = spec;
  for (size_t i = 0; i < d.layers.size(); i++) {
    h = subsample2(conv2d(h, d.layers[i].w, d.layers[i].b));
    if (i + 1 < d.layers.size()) h = leaky_relu(h, T(kLeakySlope));
  }
  Var<T> logit = mean_v(h);
  // soft clamp to (-15, 15): 15 * tanh(z/15) built from sigmoid
  Var<T> clamped =
      scale(add_const(scale(sigmoid_v(scale(logit, T(2.0 / 15.0))), T(2)), T(-1)), T(15));
  return sigmoid_v(clamped);
}

// -log D(real) - log(1 - D(fake))
template <typename T>
Var<T> disc_loss_op(Var<T> spec_real, Var<T> spec_fake, const DiscVars<T>& d) {
  Var<T> dr = disc_forward(spec_real, d);
  Var<T> df = disc_forward(spec_fake, d);
  Var<T> one_minus = add_const(scale(df, T(-1)), T(1));
  return scale(add(log_v(dr), log_v(one_minus)), T(-1));
}

// One plain gradient-descent step on the discriminator objective; returns the
// pre-step loss. The trainer drives the same graph with its own optimizer.
double discriminator_update(const AudioClip& x_real, const AudioClip& x_fake,
                            DiscParams<float>& d, float lr);

// ---------------------------------------------------------------------------
// scalar losses

// mean over bits of the logistic cross-entropy, computed from logits
template <typename T>
Var<T> bce_with_logits_op(Var<T> logits, const BitVec& target) {
  Tape<T>& t = *logits.tape;
  if (t.val(logits).numel() != target.size())
    throw std::invalid_argument("bce: logits length " +
                                std::to_string(t.val(logits).numel()) + " vs target " +
                                std::to_string(target.size()));
  Tensor<T> tb({target.size()});
  for (int i = 0; i < target.size(); i++) tb.v[i] = static_cast<T>(target.bits[i]);
  Var<T> zb = mul(logits, t.constant(tb));
  Var<T> softplus = log_v(add_const(exp_v(scale(abs_v(logits), T(-1))), T(1)));
  return mean_v(add(sub(relu(logits), zb), softplus));
}

// BCE(wm, wm_re) + w_l1 * max(0, w_l2 - BCE(wm, wm_wrong))
template <typename T>
Var<T> accuracy_loss_op(const BitVec& wm, Var<T> logits_re, Var<T> logits_wrong,
                        const LossWeights& w) {
  Var<T> loss = bce_with_logits_op(logits_re, wm);
  if (logits_wrong.valid()) {
    Var<T> bce_wrong = bce_with_logits_op(logits_wrong, wm);
    Var<T> hinge = relu(add_const(scale(bce_wrong, T(-1)), static_cast<T>(w.w_l2)));
    loss = add(loss, scale(hinge, static_cast<T>(w.w_l1)));
  }
  return loss;
}

double accuracy_loss(const BitVec& wm, const std::vector<float>& logits_re,
                     const std::vector<float>& logits_wrong, const LossWeights& w);

// w_p1 ||x - x_wm||_2 + w_p2 log(1 - D(x_wm)) + w_p3 * multiscale mel term.
// `spec_wm` must be the spectrogram of x_wm on the main STFT plan (the
// discriminator input); pass an invalid Var to drop the adversarial term.
template <typename T>
Var<T> perceptual_loss_op(Var<T> x, Var<T> x_wm, Var<T> spec_wm, const DiscVars<T>* disc,
                          const std::vector<T>& weight_vec, const LossWeights& w,
                          const MelScaleConfig& mel_cfg) {
  Tape<T>& t = *x.tape;
  detail::check_same_shape("perceptual_loss", t.val(x), t.val(x_wm));
  Var<T> diff = sub(x, x_wm);
  Var<T> loss = scale(mean_v(mul(diff, diff)), static_cast<T>(w.w_p1));
  if (disc != nullptr) {
    Var<T> d_out = disc_forward(spec_wm, *disc);
    Var<T> adv = w.adv_nonsaturating
                     ? scale(log_v(d_out), T(-1))
                     : log_v(add_const(scale(d_out, T(-1)), T(1)));
    loss = add(loss, scale(adv, static_cast<T>(w.w_p2)));
  }
  Var<T> mel = multiscale_mel_loss_op(x, x_wm, weight_vec, mel_cfg);
  return add(loss, scale(mel, static_cast<T>(w.w_p3)));
}

double perceptual_loss(const AudioClip& x, const AudioClip& x_wm, const DiscParams<float>& d,
                       const std::vector<float>& weight_vec, const LossWeights& w,
                       const MelScaleConfig& mel_cfg);

}  // namespace wake

#endif  // WAKE_LOSSES_HH
