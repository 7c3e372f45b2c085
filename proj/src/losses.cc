// src/losses.cc

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

#include "wake/losses.hh"

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace wake {

std::vector<float> broadweight_vector(int len, double frac, float hi, float lo) {
  if (frac < 0.0 || frac > 0.5)
    throw std::invalid_argument("broadweight: fraction must be in [0, 0.5], got " +
                                std::to_string(frac));
  std::vector<float> w(len, lo);
  int edge = static_cast<int>(std::floor(frac * len));
  for (int i = 0; i < edge && i < len; i++) {
    w[i] = hi;
    w[len - 1 - i] = hi;
  }
  return w;
}

namespace {

// Slaney-style mel scale: linear below 1 kHz, logarithmic above.
double hz_to_mel(double hz) {
  if (hz < 1000.0) return 3.0 * hz / 200.0;
  return 15.0 + 27.0 * std::log(hz / 1000.0) / std::log(6.4);
}

double mel_to_hz(double mel) {
  if (mel < 15.0) return 200.0 * mel / 3.0;
  return 1000.0 * std::exp(std::log(6.4) * (mel - 15.0) / 27.0);
}

template <typename T>
std::vector<MelBank<T>> build_banks(const MelScaleConfig& cfg, int len) {
  std::vector<MelBank<T>> banks;
  for (int e = cfg.scale_lo; e <= cfg.scale_hi; e++) {
    int win = 1 << e;
    StftConfig sc;
    sc.window_len = win;
    sc.hop = win / 4;
    MelBank<T> bank;
    bank.plan = &stft_plan<T>(sc, len);

    int bins = bank.plan->bins;
    double win_energy = 0;
    for (int n = 0; n < win; n++) {
      double w = 0.5 - 0.5 * std::cos(2.0 * M_PI * n / win);
      win_energy += w;
    }

    // triangular filters with Slaney area normalization; the normalized-STFT
    // division by window energy is folded into the filter matrix
    int nm = cfg.n_mels;
    std::vector<double> hz(nm + 2);
    double m_lo = hz_to_mel(cfg.fmin), m_hi = hz_to_mel(cfg.fmax);
    for (int m = 0; m < nm + 2; m++) hz[m] = mel_to_hz(m_lo + (m_hi - m_lo) * m / (nm + 1));

    bank.filters = Tensor<T>({nm, bins});
    for (int m = 0; m < nm; m++) {
      double f_l = hz[m], f_c = hz[m + 1], f_r = hz[m + 2];
      double norm = 2.0 / (f_r - f_l);
      for (int k = 0; k < bins; k++) {
        double f = static_cast<double>(k) * kSampleRate / win;
        double v = 0;
        if (f > f_l && f < f_r)
          v = (f <= f_c) ? (f - f_l) / (f_c - f_l) : (f_r - f) / (f_r - f_c);
        bank.filters.v[static_cast<int64_t>(m) * bins + k] =
            static_cast<T>(v * norm / win_energy);
      }
    }
    banks.push_back(std::move(bank));
  }
  return banks;
}

}  // namespace

template <typename T>
const std::vector<MelBank<T>>& mel_banks(const MelScaleConfig& cfg, int len) {
  static std::map<std::tuple<int, int, int, int>, std::vector<MelBank<T>>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(cfg.scale_lo, cfg.scale_hi, cfg.n_mels, len);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, build_banks<T>(cfg, len)).first;
  return it->second;
}

template const std::vector<MelBank<float>>& mel_banks<float>(const MelScaleConfig&, int);
template const std::vector<MelBank<double>>& mel_banks<double>(const MelScaleConfig&, int);

double multiscale_mel_loss(const AudioClip& x, const AudioClip& y,
                           const std::vector<float>& weight_vec, const MelScaleConfig& cfg) {
  if (x.size() != y.size())
    throw std::invalid_argument("multiscale_mel_loss: clip length mismatch");
  Tape<float> tape;
  tape.recording = false;
  Var<float> xv = tape.leaf(TensorF({static_cast<int>(x.size())}, x.samples));
  Var<float> yv = tape.leaf(TensorF({static_cast<int>(y.size())}, y.samples));
  Var<float> loss = multiscale_mel_loss_op(xv, yv, weight_vec, cfg);
  return tape.val(loss).v[0];
}

double accuracy_loss(const BitVec& wm, const std::vector<float>& logits_re,
                     const std::vector<float>& logits_wrong, const LossWeights& w) {
  Tape<float> tape;
  tape.recording = false;
  Var<float> re = tape.leaf(TensorF({static_cast<int>(logits_re.size())}, logits_re));
  Var<float> wrong = tape.leaf(TensorF({static_cast<int>(logits_wrong.size())}, logits_wrong));
  Var<float> loss = accuracy_loss_op(wm, re, wrong, w);
  return tape.val(loss).v[0];
}

double perceptual_loss(const AudioClip& x, const AudioClip& x_wm, const DiscParams<float>& d,
                       const std::vector<float>& weight_vec, const LossWeights& w,
                       const MelScaleConfig& mel_cfg) {
  if (x.size() != x_wm.size())
    throw std::invalid_argument("perceptual_loss: clip length mismatch");
  Tape<float> tape;
  tape.recording = false;
  Var<float> xv = tape.leaf(TensorF({static_cast<int>(x.size())}, x.samples));
  Var<float> yv = tape.leaf(TensorF({static_cast<int>(x_wm.size())}, x_wm.samples));
  DiscVars<float> dv = lift(tape, d, false);
  const StftPlan<float>& plan = stft_plan<float>(StftConfig{}, static_cast<int>(x.size()));
  Var<float> spec = stft_op(yv, plan);
  Var<float> loss = perceptual_loss_op(xv, yv, spec, &dv, weight_vec, w, mel_cfg);
  return tape.val(loss).v[0];
}

double discriminator_update(const AudioClip& x_real, const AudioClip& x_fake,
                            DiscParams<float>& d, float lr) {
  if (x_real.size() != x_fake.size())
    throw std::invalid_argument("discriminator_update: clip length mismatch");
  Tape<float> tape;
  DiscVars<float> dv = lift(tape, d, true);
  const StftPlan<float>& plan =
      stft_plan<float>(StftConfig{}, static_cast<int>(x_real.size()));
  Var<float> sr = stft_op(tape.leaf(TensorF({static_cast<int>(x_real.size())}, x_real.samples)), plan);
  Var<float> sf = stft_op(tape.leaf(TensorF({static_cast<int>(x_fake.size())}, x_fake.samples)), plan);
  Var<float> loss = disc_loss_op(sr, sf, dv);
  double out = tape.val(loss).v[0];
  tape.backward(loss);
  for (size_t i = 0; i < d.layers.size(); i++) {
    const TensorF& gw = tape.grad(dv.layers[i].w);
    const TensorF& gb = tape.grad(dv.layers[i].b);
    if (!gw.empty())
      for (int64_t j = 0; j < gw.numel(); j++) d.layers[i].w.v[j] -= lr * gw.v[j];
    if (!gb.empty())
      for (int64_t j = 0; j < gb.numel(); j++) d.layers[i].b.v[j] -= lr * gb.v[j];
  }
  return out;
}

}  // namespace wake
