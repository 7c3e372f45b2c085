// include/wake/inn.hh

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

#ifndef WAKE_INN_HH
#define WAKE_INN_HH

#include <vector>

#include "wake/codec.hh"
#include "wake/tape.hh"

namespace wake {

constexpr float kLeakySlope = 0.2f;

template <typename T>
struct ConvLayer {
  Tensor<T> w;  // (C_out, C_in, KH, KW)
  Tensor<T> b;  // (C_out)

  ConvLayer() = default;
  ConvLayer(Tensor<T> w_, Tensor<T> b_) : w(std::move(w_)), b(std::move(b_)) {}
  ConvLayer(int cout, int cin, int k, Rng& rng, bool zero_init) {
    if (zero_init) {
      w = Tensor<T>::zeros({cout, cin, k, k});
    } else {
      double stddev = std::sqrt(2.0 / (static_cast<double>(cin) * k * k));
      w = Tensor<T>::randn({cout, cin, k, k}, rng, static_cast<T>(stddev));
    }
    b = Tensor<T>::zeros({cout});
  }
};

template <typename T>
struct ConvLayerVars {
  Var<T> w, b;
};

template <typename T>
ConvLayerVars<T> lift(Tape<T>& tape, const ConvLayer<T>& l, bool trainable) {
  return ConvLayerVars<T>{tape.leaf(l.w, trainable), tape.leaf(l.b, trainable)};
}

// 5-layer densely connected 2D CNN: every layer sees the channel
// concatenation of the subnet input and all previous layer outputs; 3x3
// kernels with leaky-ReLU, then a 1x1 projection back to the spectrogram
// channel count. The projection is zero-initialized so a fresh subnet is the
// zero map and a fresh coupling block is the identity.
template <typename T>
struct Subnet {
  std::vector<ConvLayer<T>> layers;

  Subnet() = default;
  Subnet(int in_ch, int growth, int out_ch, Rng& rng) {
    int c = in_ch;
    for (int i = 0; i < 4; i++) {
      layers.emplace_back(growth, c, 3, rng, false);
      c += growth;
    }
    layers.emplace_back(out_ch, c, 1, rng, true);
  }
};

template <typename T>
struct SubnetVars {
  std::vector<ConvLayerVars<T>> layers;
};

template <typename T>
SubnetVars<T> lift(Tape<T>& tape, const Subnet<T>& s, bool trainable) {
  SubnetVars<T> v;
  for (const auto& l : s.layers) v.layers.push_back(lift(tape, l, trainable));
  return v;
}

template <typename T>
Var<T> subnet_forward(Var<T> x, const SubnetVars<T>& s) {
  std::vector<Var<T>> feats{x};
  size_t n = s.layers.size();
  for (size_t i = 0; i + 1 < n; i++)
    feats.push_back(leaky_relu(conv2d(feats, s.layers[i].w, s.layers[i].b), T(kLeakySlope)));
  return conv2d(feats, s.layers[n - 1].w, s.layers[n - 1].b);
}

// One key-gated invertible coupling block: phi writes the watermark branch
// into the carrier (gated by the key bit), rho/eta apply the affine update to
// the watermark branch.
template <typename T>
struct InnBlock {
  Subnet<T> phi, rho, eta;

  InnBlock() = default;
  InnBlock(int ch, int growth, Rng& rng)
      : phi(ch, growth, ch, rng), rho(ch, growth, ch, rng), eta(ch, growth, ch, rng) {}
};

template <typename T>
struct InnBlockVars {
  SubnetVars<T> phi, rho, eta;
};

template <typename T>
InnBlockVars<T> lift(Tape<T>& tape, const InnBlock<T>& b, bool trainable) {
  return InnBlockVars<T>{lift(tape, b.phi, trainable), lift(tape, b.rho, trainable),
                         lift(tape, b.eta, trainable)};
}

template <typename T>
struct InnParams {
  std::vector<InnBlock<T>> blocks;
  T clamp_scale = T(2);

  InnParams() = default;
  InnParams(int n_blocks, int ch, int growth, Rng& rng, T clamp = T(2)) : clamp_scale(clamp) {
    for (int i = 0; i < n_blocks; i++) blocks.emplace_back(ch, growth, rng);
  }
  int n_blocks() const { return static_cast<int>(blocks.size()); }
};

template <typename T>
struct InnVars {
  std::vector<InnBlockVars<T>> blocks;
  T clamp_scale;
};

template <typename T>
InnVars<T> lift(Tape<T>& tape, const InnParams<T>& p, bool trainable) {
  InnVars<T> v;
  v.clamp_scale = p.clamp_scale;
  for (const auto& b : p.blocks) v.blocks.push_back(lift(tape, b, trainable));
  return v;
}

// bounded odd log-scale: c * (2/pi) * atan(t), range (-c, c)
template <typename T>
Var<T> clamp_alpha(Var<T> t, T c) {
  if (!(c > T(0))) throw std::invalid_argument("clamp_alpha: scale must be positive");
  return scale(atan_v(t), static_cast<T>(c * T(2) / M_PI));
}

// x' = x + phi(wm) . k_i ; wm' = wm (*) exp(alpha(rho(x'))) + eta(x')
template <typename T>
std::pair<Var<T>, Var<T>> block_forward(Var<T> x, Var<T> wm, int key_bit,
                                        const InnBlockVars<T>& b, T clamp_scale) {
  detail::check_same_shape("block_forward", x.tape->val(x), wm.tape->val(wm));
  Var<T> x2 = key_bit ? add(x, subnet_forward(wm, b.phi)) : x;
  Var<T> s = exp_v(clamp_alpha(subnet_forward(x2, b.rho), clamp_scale));
  Var<T> wm2 = add(mul(wm, s), subnet_forward(x2, b.eta));
  return {x2, wm2};
}

// analytic inverse: wm = (wm' - eta(x')) (*) exp(-alpha(rho(x'))) ;
// x = x' - phi(wm) . k_i
template <typename T>
std::pair<Var<T>, Var<T>> block_backward(Var<T> x2, Var<T> wm2, int key_bit,
                                         const InnBlockVars<T>& b, T clamp_scale) {
  detail::check_same_shape("block_backward", x2.tape->val(x2), wm2.tape->val(wm2));
  Var<T> s_inv = exp_v(scale(clamp_alpha(subnet_forward(x2, b.rho), clamp_scale), T(-1)));
  Var<T> wm = mul(sub(wm2, subnet_forward(x2, b.eta)), s_inv);
  Var<T> x = key_bit ? sub(x2, subnet_forward(wm, b.phi)) : x2;
  return {x, wm};
}

template <typename T>
std::pair<Var<T>, Var<T>> inn_forward(Var<T> x_f, Var<T> wm_f, const KeyBits& key,
                                      const InnVars<T>& inn) {
  if (key.size() != static_cast<int>(inn.blocks.size()))
    throw std::invalid_argument("inn_forward: key length " + std::to_string(key.size()) +
                                " does not match block count " +
                                std::to_string(inn.blocks.size()));
  Var<T> x = x_f, wm = wm_f;
  for (size_t i = 0; i < inn.blocks.size(); i++)
    std::tie(x, wm) = block_forward(x, wm, key.bits[i], inn.blocks[i], inn.clamp_scale);
  return {x, wm};
}

template <typename T>
std::pair<Var<T>, Var<T>> inn_backward(Var<T> x_wm_f, Var<T> wm_pre, const KeyBits& key,
                                       const InnVars<T>& inn) {
  if (key.size() != static_cast<int>(inn.blocks.size()))
    throw std::invalid_argument("inn_backward: key length " + std::to_string(key.size()) +
                                " does not match block count " +
                                std::to_string(inn.blocks.size()));
  Var<T> x = x_wm_f, wm = wm_pre;
  for (int i = static_cast<int>(inn.blocks.size()) - 1; i >= 0; i--)
    std::tie(x, wm) = block_backward(x, wm, key.bits[i], inn.blocks[i], inn.clamp_scale);
  return {x, wm};
}

}  // namespace wake

#endif  // WAKE_INN_HH
