// src/selftest.cc

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

#include "wake/selftest.hh"

#include <cstring>

namespace wake::selftest {

namespace {

// re-draws every zero-initialized projection so blocks are not identities
template <typename T>
void randomize_subnet(Subnet<T>& s, Rng& rng, T stddev) {
  ConvLayer<T>& proj = s.layers.back();
  proj.w = Tensor<T>::randn(proj.w.shape, rng, stddev);
  proj.b = Tensor<T>::randn(proj.b.shape, rng, stddev / T(4));
}

template <typename T>
InnParams<T> random_inn(int n_blocks, int growth, Rng& rng, T proj_stddev = T(0.05)) {
  InnParams<T> p(n_blocks, 2, growth, rng);
  for (auto& b : p.blocks) {
    randomize_subnet(b.phi, rng, proj_stddev);
    randomize_subnet(b.rho, rng, proj_stddev);
    randomize_subnet(b.eta, rng, proj_stddev);
  }
  return p;
}

KeyBits key_from_index(int n_blocks, uint32_t v) {
  KeyBits k = BitVec::zeros(n_blocks);
  for (int i = 0; i < n_blocks; i++) k.bits[i] = static_cast<uint8_t>((v >> i) & 1);
  return k;
}

}  // namespace

double inn_roundtrip_max_err(int draws, int key_count, int n_blocks, int growth, int f, int t,
                             uint64_t seed) {
  Rng rng(seed);
  double worst = 0;
  uint32_t total_keys = n_blocks < 31 ? (uint32_t(1) << n_blocks) : 0;
  for (int d = 0; d < draws; d++) {
    InnParams<float> p = random_inn<float>(n_blocks, growth, rng);
    TensorF x0 = TensorF::randn({2, f, t}, rng);
    TensorF w0 = TensorF::randn({2, f, t}, rng);
    int keys = key_count > 0 ? key_count : static_cast<int>(total_keys);
    for (int ki = 0; ki < keys; ki++) {
      uint32_t kv = key_count > 0 ? rng.uniform_int(total_keys) : static_cast<uint32_t>(ki);
      KeyBits key = key_from_index(n_blocks, kv);
      Tape<float> tape;
      tape.recording = false;
      InnVars<float> iv = lift(tape, p, false);
      auto [xo, wo] = inn_forward(tape.leaf(x0), tape.leaf(w0), key, iv);
      auto [xr, wr] = inn_backward(xo, wo, key, iv);
      const TensorF& xrv = tape.val(xr);
      const TensorF& wrv = tape.val(wr);
      for (int64_t i = 0; i < x0.numel(); i++) {
        worst = std::max(worst, static_cast<double>(std::abs(xrv.v[i] - x0.v[i])));
        worst = std::max(worst, static_cast<double>(std::abs(wrv.v[i] - w0.v[i])));
      }
    }
  }
  return worst;
}

bool key_gating_exact(int n_blocks, int growth, int f, int t, uint64_t seed) {
  Rng rng(seed);
  InnParams<float> p = random_inn<float>(n_blocks, growth, rng);
  TensorF x0 = TensorF::randn({2, f, t}, rng);
  TensorF w0 = TensorF::randn({2, f, t}, rng);
  uint32_t total_keys = uint32_t(1) << n_blocks;
  for (uint32_t kv = 0; kv < total_keys; kv++) {
    KeyBits key = key_from_index(n_blocks, kv);
    Tape<float> tape;
    tape.recording = false;
    InnVars<float> iv = lift(tape, p, false);
    Var<float> x = tape.leaf(x0), wm = tape.leaf(w0);
    for (int i = 0; i < n_blocks; i++) {
      TensorF x_before = tape.val(x);
      std::tie(x, wm) = block_forward(x, wm, key.bits[i], iv.blocks[i], iv.clamp_scale);
      if (!key.bits[i]) {
        const TensorF& x_after = tape.val(x);
        if (std::memcmp(x_before.data(), x_after.data(), sizeof(float) * x_before.numel()) != 0)
          return false;
      }
    }
  }
  return true;
}

double stft_roundtrip_max_err(int n_clips, uint64_t seed) {
  Rng rng(seed);
  StftConfig cfg;
  double worst = 0;
  for (int c = 0; c < n_clips; c++) {
    AudioClip x;
    x.samples.resize(kClipLen);
    for (auto& s : x.samples) s = static_cast<float>(rng.uniform(-1.0, 1.0));
    AudioClip y = istft(stft(x, cfg), cfg, kClipLen);
    for (int64_t i = 0; i < x.size(); i++)
      worst = std::max(worst, static_cast<double>(std::abs(x.samples[i] - y.samples[i])));
  }
  return worst;
}

double primitive_gradcheck_worst(int points, uint64_t seed) {
  double worst = 0;
  auto check = [&](auto f, double lo, double hi, std::vector<int> shape) {
    Rng rng(seed);
    for (int p = 0; p < points; p++) {
      TensorD pt(shape);
      for (auto& v : pt.v) v = rng.uniform(lo, hi);
      worst = std::max(worst, grad_check(f, pt, 1e-4, 64, seed + p));
    }
  };

  check([](Tape<double>&, Var<double> x) { return sum_v(exp_v(x)); }, -1, 1, {3, 4});
  check([](Tape<double>&, Var<double> x) { return sum_v(atan_v(x)); }, -2, 2, {3, 4});
  check([](Tape<double>&, Var<double> x) { return sum_v(log_v(x)); }, 0.5, 2.5, {3, 4});
  check([](Tape<double>&, Var<double> x) { return sum_v(sigmoid_v(x)); }, -2, 2, {3, 4});
  check([](Tape<double>&, Var<double> x) { return sum_v(sqrt_v(x)); }, 0.5, 2.5, {3, 4});
  check([](Tape<double>&, Var<double> x) { return mean_v(mul(x, x)); }, -1, 1, {5, 2});
  check(
      [](Tape<double>& t, Var<double> x) {
        Var<double> c = t.constant(TensorD::full({3, 4}, 0.7));
        return sum_v(mul(add(x, c), x));
      },
      -1, 1, {3, 4});
  check(
      [](Tape<double>& t, Var<double> x) {
        Var<double> c = t.constant(TensorD::full({4, 3}, 0.3));
        return sum_v(matmul(x, c));
      },
      -1, 1, {2, 4});
  check(
      [](Tape<double>& t, Var<double> x) {
        Rng krng(7);
        Var<double> k = t.constant(TensorD::randn({2, 1, 3, 3}, krng));
        Var<double> b = t.constant(TensorD::randn({2}, krng));
        Var<double> y = conv2d(x, k, b);
        return sum_v(mul(y, y));
      },
      -1, 1, {1, 5, 4});
  check(
      [](Tape<double>&, Var<double> x) {
        Var<double> a = slice_ch(x, 0, 1);
        Var<double> b = slice_ch(x, 1, 2);
        return sum_v(mul(concat_ch<double>({b, a}), x));
      },
      -1, 1, {2, 3, 2});
  check([](Tape<double>&, Var<double> x) { return sum_v(mul(unfold(x, 4, 2), unfold(x, 4, 2))); },
        -1, 1, {12});
  return worst;
}

double inn_gradcheck_worst(int f, int t, int growth, uint64_t seed) {
  Rng rng(seed);
  InnParams<float> pf = random_inn<float>(2, growth, rng);
  TensorF x0f = TensorF::randn({2, f, t}, rng);
  TensorF w0f = TensorF::randn({2, f, t}, rng);
  TensorD x0 = tensor_cast<double>(x0f), w0 = tensor_cast<double>(w0f);
  KeyBits key = BitVec({1, 0});

  // double copy of the parameters
  InnParams<double> p;
  p.clamp_scale = pf.clamp_scale;
  for (auto& bf : pf.blocks) {
    InnBlock<double> b;
    auto cast_subnet = [](const Subnet<float>& s) {
      Subnet<double> out;
      for (const auto& l : s.layers)
        out.layers.push_back({tensor_cast<double>(l.w), tensor_cast<double>(l.b)});
      return out;
    };
    b.phi = cast_subnet(bf.phi);
    b.rho = cast_subnet(bf.rho);
    b.eta = cast_subnet(bf.eta);
    p.blocks.push_back(std::move(b));
  }

  auto loss_of = [&](const InnParams<double>& params, Tape<double>* grad_tape,
                     InnVars<double>* vars_out) -> double {
    Tape<double> local;
    Tape<double>& tape = grad_tape ? *grad_tape : local;
    if (!grad_tape) tape.recording = false;
    InnVars<double> iv = lift(tape, params, grad_tape != nullptr);
    auto [xo, wo] = inn_forward(tape.leaf(x0), tape.leaf(w0), key, iv);
    Var<double> loss = add(mean_v(mul(xo, xo)), mean_v(mul(wo, wo)));
    if (grad_tape) {
      tape.backward(loss);
      *vars_out = iv;
    }
    return tape.val(loss).v[0];
  };

  Tape<double> tape;
  InnVars<double> iv;
  loss_of(p, &tape, &iv);

  double worst = 0;
  const double step = 1e-5;
  Rng pick(seed ^ 0x9e3779b9);
  for (int bi = 0; bi < 2; bi++) {
    auto check_subnet = [&](Subnet<double>& sn, SubnetVars<double>& sv) {
      for (size_t li = 0; li < sn.layers.size(); li++) {
        for (int rep = 0; rep < 4; rep++) {
          int64_t ci = pick.uniform_int(static_cast<uint32_t>(sn.layers[li].w.numel()));
          const TensorD& g = tape.grad(sv.layers[li].w);
          double analytic = g.empty() ? 0.0 : g.v[ci];
          double keep = sn.layers[li].w.v[ci];
          sn.layers[li].w.v[ci] = keep + step;
          double fp = loss_of(p, nullptr, nullptr);
          sn.layers[li].w.v[ci] = keep - step;
          double fm = loss_of(p, nullptr, nullptr);
          sn.layers[li].w.v[ci] = keep;
          double fd = (fp - fm) / (2 * step);
          double err = std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-8});
          worst = std::max(worst, err);
        }
      }
    };
    check_subnet(p.blocks[bi].phi, iv.blocks[bi].phi);
    check_subnet(p.blocks[bi].rho, iv.blocks[bi].rho);
    check_subnet(p.blocks[bi].eta, iv.blocks[bi].eta);
  }
  return worst;
}

}  // namespace wake::selftest
