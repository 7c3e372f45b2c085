// include/wake/predict.hh

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

#ifndef WAKE_PREDICT_HH
#define WAKE_PREDICT_HH

#include "wake/inn.hh"

namespace wake {

// Residual CNN that estimates the INN's discarded redundancy branch from the
// watermarked spectrogram. 8 residual blocks (conv -> leaky-ReLU -> conv plus
// identity skip); the 1x1 head is zero-initialized so an untrained module
// outputs the neutral redundancy 0.
template <typename T>
struct PredictParams {
  ConvLayer<T> stem;  // 3x3, spectrogram channels -> hidden
  std::vector<std::pair<ConvLayer<T>, ConvLayer<T>>> blocks;
  ConvLayer<T> head;  // 1x1, hidden -> spectrogram channels

  PredictParams() = default;
  PredictParams(int ch, int hidden, int n_blocks, Rng& rng) {
    stem = ConvLayer<T>(hidden, ch, 3, rng, false);
    for (int i = 0; i < n_blocks; i++)
      blocks.emplace_back(ConvLayer<T>(hidden, hidden, 3, rng, false),
                          ConvLayer<T>(hidden, hidden, 3, rng, false));
    head = ConvLayer<T>(ch, hidden, 1, rng, true);
  }
};

template <typename T>
struct PredictVars {
  ConvLayerVars<T> stem;
  std::vector<std::pair<ConvLayerVars<T>, ConvLayerVars<T>>> blocks;
  ConvLayerVars<T> head;
};

template <typename T>
PredictVars<T> lift(Tape<T>& tape, const PredictParams<T>& p, bool trainable) {
  PredictVars<T> v;
  v.stem = lift(tape, p.stem, trainable);
  for (const auto& b : p.blocks)
    v.blocks.emplace_back(lift(tape, b.first, trainable), lift(tape, b.second, trainable));
  v.head = lift(tape, p.head, trainable);
  return v;
}

template <typename T>
Var<T> predict_forward(Var<T> x_wm_f, const PredictVars<T>& p) {
  Var<T> h = leaky_relu(conv2d(x_wm_f, p.stem.w, p.stem.b), T(kLeakySlope));
  for (const auto& b : p.blocks) {
    Var<T> y = leaky_relu(conv2d(h, b.first.w, b.first.b), T(kLeakySlope));
    h = add(h, conv2d(y, b.second.w, b.second.b));
  }
  return conv2d(h, p.head.w, p.head.b);
}

// i.i.d. standard-normal redundancy for the no-Predict-Module ablation path
template <typename T>
Tensor<T> gaussian_redundancy(const std::vector<int>& shape, Rng& rng) {
  return Tensor<T>::randn(shape, rng);
}

enum class RedundancySource { kPredict, kGaussian };

}  // namespace wake

#endif  // WAKE_PREDICT_HH
