// include/wake/tape.hh

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

#ifndef WAKE_TAPE_HH
#define WAKE_TAPE_HH

#include <cmath>
#include <cstring>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "wake/tensor.hh"

namespace wake {

template <typename T>
class Tape;

// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Tensor<T>& val() const;
};

// Reverse-mode tape. Operations append nodes in topological order; backward()
// walks the nodes in reverse. With recording off, ops compute values only.
template <typename T>
class Tape {
 public:
  struct Node {
    Tensor<T> val;
    Tensor<T> grad;  // allocated lazily during backward
    std::function<void()> back;
    bool needs_grad = false;
  };

  bool recording = true;

  Var<T> leaf(Tensor<T> v, bool needs_grad = false) {
    return raw_node(std::move(v), needs_grad && recording);
  }
  Var<T> constant(Tensor<T> v) { return raw_node(std::move(v), false); }

  Var<T> raw_node(Tensor<T> v, bool needs_grad) {
    nodes_.push_back(Node{std::move(v), Tensor<T>(), nullptr, needs_grad});
    return Var<T>{this, static_cast<int>(nodes_.size()) - 1};
  }

  const Tensor<T>& val(Var<T> x) const { return nodes_[x.id].val; }
  Tensor<T>& val_mut(Var<T> x) { return nodes_[x.id].val; }
  bool needs_grad(Var<T> x) const { return nodes_[x.id].needs_grad; }

  // Gradient of a node after backward(); empty tensor when untouched.
  const Tensor<T>& grad(Var<T> x) const { return nodes_[x.id].grad; }

  Tensor<T>& grad_buf(int id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Tensor<T>::zeros(n.val.shape);
    return n.grad;
  }

  void accum(int id, const Tensor<T>& g) {
    Tensor<T>& buf = grad_buf(id);
    for (int64_t i = 0; i < g.numel(); i++) buf.v[i] += g.v[i];
  }

  void set_back(Var<T> out, std::function<void()> fn) { nodes_[out.id].back = std::move(fn); }

  void backward(Var<T> out) {
    if (nodes_[out.id].val.numel() != 1)
      throw std::invalid_argument("backward: output must be scalar, got shape " +
                                  shape_str(nodes_[out.id].val.shape));
    grad_buf(out.id).v[0] = T(1);
    for (int id = out.id; id >= 0; id--) {
      Node& n = nodes_[id];
      if (n.back && n.needs_grad && !n.grad.empty()) n.back();
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
};

template <typename T>
const Tensor<T>& Var<T>::val() const {
  return tape->val(*this);
}

namespace detail {

template <typename T>
bool want_grad(std::initializer_list<Var<T>> parents) {
  for (const Var<T>& p : parents)
    if (p.tape->needs_grad(p)) return true;
  return false;
}

template <typename T>
void check_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape) +
                                " vs " + shape_str(b.shape));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise ops

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  Tape<T>& t = *a.tape;
  const Tensor<T>&av = t.val(a), &bv = t.val(b);
  detail::check_same_shape("add", av, bv);
  Tensor<T> out = av;
  for (int64_t i = 0; i < out.numel(); i++) out.v[i] += bv.v[i];
  bool ng = t.recording && detail::want_grad<T>({a, b});
  Var<T> o = t.raw_node(std::move(out), ng);
  if (ng)
    t.set_back(o, [a, b, o]() {
      Tape<T>& tp = *a.tape;
      const Tensor<T>& g = tp.grad(o);
      if (tp.needs_grad(a)) tp.accum(a.id, g);
      if (tp.needs_grad(b)) tp.accum(b.id, g);
    });
  return o;
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  Tape<T>& t = *a.tape;
  const Tensor<T>&av = t.val(a), &bv = t.val(b);
  detail::check_same_shape("sub", av, bv);
  Tensor<T> out = av;
  for (int64_t i = 0; i < out.numel(); i++) out.v[i] -= bv.v[i];
  bool ng = t.recording && detail::want_grad<T>({a, b});
  Var<T> o = t.raw_node(std::move(out), ng);
  if (ng)
    t.set_back(o, [a, b, o]() {
      Tape<T>& tp = *a.tape;
      const Tensor<T>& g = tp.grad(o);
      if (tp.needs_grad(a)) tp.accum(a.id, g);
      if (tp.needs_grad(b)) {
        Tensor<T>& gb = tp.grad_buf(b.id);
        for (int64_t i = 0; i < g.numel(); i++) gb.v[i] -= g.v[i];
      }
    });
  return o;
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  Tape<T>& t = *a.tape;
  const Tensor<T>&av = t.val(a), &bv = t.val(b);
  detail::check_same_shape("mul", av, bv);
  Tensor<T> out = av;
  for (int64_t i = 0; i < out.numel(); i++) out.v[i] *= bv.v[i];
  bool ng = t.recording && detail::want_grad<T>({a, b});
  Var<T> o = t.raw_node(std::move(out), ng);
  if (ng)
    t.set_back(o, [a, b, o]() {
      Tape<T>& tp = *a.tape;
      const Tensor<T>& g = tp.grad(o);
      const Tensor<T>&avv = tp.val(a), &bvv = tp.val(b);
      if (tp.needs_grad(a)) {
        Tensor<T>& ga = tp.grad_buf(a.id);
        for (int64_t i = 0; i < g.numel(); i++) ga.v[i] += g.v[i] * bvv.v[i];
      }
      if (tp.needs_grad(b)) {
        Tensor<T>& gb = tp.grad_buf(b.id);
        for (int64_t i = 0; i < g.numel(); i++) gb.v[i] += g.v[i] * avv.v[i];
      }
    });
  return o;
}

template <typename T>
Var<T> scale(Var<T> a, T c) {
  Tape<T>& t = *a.tape;
  Tensor<T> out = t.val(a);
  for (auto& x : out.v) x *= c;
  bool ng = t.recording && t.needs_grad(a);
  Var<T> o = t.raw_node(std::move(out), ng);
  if (ng)
    t.set_back(o, [a, o, c]() {
      Tape<T>& tp = *a.tape;
      const Tensor<T>& g = tp.grad(o);
      Tensor<T>& ga = tp.grad_buf(a.id);
      for (int64_t i = 0; i < g.numel(); i++) ga.v[i] += g.v[i] * c;
    });
  return o;
}

template <typename T>
Var<T> add_const(Var<T> a, T c) {
  Tape<T>& t = *a.tape;
  Tensor<T> out = t.val(a);
  for (auto& x : out.v) x += c;
  bool ng = t.recording && t.needs_grad(a);
  Var<T> o = t.raw_node(std::move(out), ng);
  if (ng)
    t.set_back(o, [a, o]() {
      Tape<T>& tp = *a.tape;
      if (tp.needs_grad(a)) tp.accum(a.id, tp.grad(o));
    });
  return o;
}

namespace detail {

// generic unary op: out[i] = fwd(in[i]); din[i] += dfn(in[i], out[i]) * g[i]
template <typename T, typename Fwd, typename Dfn>
Var<T> unary(const char* /*name*/, Var<T> a, Fwd fwd, Dfn dfn) {
  Tape<T>& t = *a.tape;
  const Tensor<T>& av = t.val(a);
  Tensor<T> out(av.shape);
  for (int64_t i = 0; i < av.numel(); i++) out.v[i] = fwd(av.v[i]);
  bool ng = t.recording && t.needs_grad(a);
  Var<T> o = t.raw_node(std::move(out), ng);
  if (ng)
    t.set_back(o, [a, o, dfn]() {
      Tape<T>& tp = *a.tape;
      const Tensor<T>& g = tp.grad(o);
      const Tensor<T>& in = tp.val(a);
      const Tensor<T>& ov = tp.val(o);
      Tensor<T>& ga = tp.grad_buf(a.id);
      for (int64_t i = 0; i < g.numel(); i++) ga.v[i] += dfn(in.v[i], ov.v[i]) * g.v[i];
    });
  return o;
}

}  // namespace detail

template <typename T>
Var<T> exp_v(Var<T> a) {
  return detail::unary(
      "exp", a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Var<T> log_v(Var<T> a) {
  return detail::unary(
      "log", a, [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; });
}

template <typename T>
Var<T> atan_v(Var<T> a) {
  return detail::unary(
      "atan", a, [](T x) { return std::atan(x); },
      [](T x, T) { return T(1) / (T(1) + x * x); });
}

template <typename T>
Var<T> sigmoid_v(Var<T> a) {
  return detail::unary(
      "sigmoid", a, [](T x) { return T(1) / (T(1) + std::exp(-x)); },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Var<T> sqrt_v(Var<T> a) {
  return detail::unary(
      "sqrt", a, [](T x) { return std::sqrt(x); },
      [](T, T y) { return T(1) / (T(2) * y); });
}

template <typename T>
Var<T> abs_v(Var<T> a) {
  return detail::unary(
      "abs", a, [](T x) { return std::abs(x); },
      [](T x, T) { return x > T(0) ? T(1) : (x < T(0) ? T(-1) : T(0)); });
}

template <typename T>
Var<T> relu(Var<T> a) {
  return detail::unary(
      "relu", a, [](T x) { return x > T(0) ? x : T(0); },
      [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
Var<T> leaky_relu(Var<T> a, T slope) {
  return detail::unary(
      "leaky_relu", a, [slope](T x) { return x > T(0) ? x : slope * x; },
      [slope](T x, T) { return x > T(0) ? T(1) : slope; });
}

// ---------------------------------------------------------------------------
// reductions

template <typename T>
Var<T> sum_v(Var<T> a) {
  Tape<T>& t = *a.tape;
  const Tensor<T>& av = t.val(a);
  T s = 0;
  for (T x : av.v) s += x;
  bool ng = t.recording && t.needs_grad(a);
  Var<T> o = t.raw_node(Tensor<T>::scalar(s), ng);
  if (ng)
    t.set_back(o, [a, o]() {
      Tape<T>& tp = *a.tape;
      T g = tp.grad(o).v[0];
      Tensor<T>& ga = tp.grad_buf(a.id);
      for (auto& x : ga.v) x += g;
    });
  return o;
}

template <typename T>
Var<T> mean_v(Var<T> a) {
  Tape<T>& t = *a.tape;
  int64_t n = t.val(a).numel();
  return scale(sum_v(a), T(1) / static_cast<T>(n));
}

// ---------------------------------------------------------------------------
// shape ops

template <typename T>
Var<T> reshape(Var<T> a, std::vector<int> new_shape) {
  Tape<T>& t = *a.tape;
  const Tensor<T>& av = t.val(a);
  if (numel_of(new_shape) != av.numel())
    throw std::invalid_argument("reshape: numel mismatch " + shape_str(av.shape) + " -> " +
                                shape_str(new_shape));
  Tensor<T> out(new_shape, av.v);
  bool ng = t.recording && t.needs_grad(a);
  Var<T> o = t.raw_node(std::move(out), ng);
  if (ng)
    t.set_back(o, [a, o]() {
      Tape<T>& tp = *a.tape;
      const Tensor<T>& g = tp.grad(o);
      Tensor<T>& ga = tp.grad_buf(a.id);
      for (int64_t i = 0; i < g.numel(); i++) ga.v[i] += g.v[i];
    });
  return o;
}

// concatenate (C, H, W) tensors along the channel axis
template <typename T>
Var<T> concat_ch(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  Tape<T>& t = *parts[0].tape;
  int h = t.val(parts[0]).dim(1), w = t.val(parts[0]).dim(2);
  int ctot = 0;
  for (const auto& p : parts) {
    const Tensor<T>& pv = t.val(p);
    if (pv.rank() != 3 || pv.dim(1) != h || pv.dim(2) != w)
      throw std::invalid_argument("concat: incompatible shape " + shape_str(pv.shape));
    ctot += pv.dim(0);
  }
  Tensor<T> out({ctot, h, w});
  int64_t off = 0;
  for (const auto& p : parts) {
    const Tensor<T>& pv = t.val(p);
    std::memcpy(out.data() + off, pv.data(), pv.numel() * sizeof(T));
    off += pv.numel();
  }
  bool ng = false;
  if (t.recording)
    for (const auto& p : parts) ng = ng || t.needs_grad(p);
  Var<T> o = t.raw_node(std::move(out), ng);
  if (ng) {
    std::vector<Var<T>> ps = parts;
    t.set_back(o, [ps, o]() {
      Tape<T>& tp = *o.tape;
      const Tensor<T>& g = tp.grad(o);
      int64_t off2 = 0;
      for (const auto& p : ps) {
        int64_t n = tp.val(p).numel();
        if (tp.needs_grad(p)) {
          Tensor<T>& gp = tp.grad_buf(p.id);
          for (int64_t i = 0; i < n; i++) gp.v[i] += g.v[off2 + i];
        }
        off2 += n;
      }
    });
  }
  return o;
}

// channels [c0, c1) of a (C, H, W) tensor
template <typename T>
Var<T> slice_ch(Var<T> a, int c0, int c1) {
  Tape<T>& t = *a.tape;
  const Tensor<T>& av = t.val(a);
  if (av.rank() != 3 || c0 < 0 || c1 > av.dim(0) || c0 >= c1)
    throw std::invalid_argument("slice: bad channel range on " + shape_str(av.shape));
  int h = av.dim(1), w = av.dim(2);
  int64_t plane = static_cast<int64_t>(h) * w;
  Tensor<T> out({c1 - c0, h, w});
  std::memcpy(out.data(), av.data() + c0 * plane, out.numel() * sizeof(T));
  bool ng = t.recording && t.needs_grad(a);
  Var<T> o = t.raw_node(std::move(out), ng);
  if (ng)
    t.set_back(o, [a, o, c0, plane]() {
      Tape<T>& tp = *a.tape;
      const Tensor<T>& g = tp.grad(o);
      Tensor<T>& ga = tp.grad_buf(a.id);
      for (int64_t i = 0; i < g.numel(); i++) ga.v[c0 * plane + i] += g.v[i];
    });
  return o;
}

// every second row/column of a (C, H, W) tensor
template <typename T>
Var<T> subsample2(Var<T> a) {
  Tape<T>& t = *a.tape;
  const Tensor<T>& av = t.val(a);
  if (av.rank() != 3) throw std::invalid_argument("subsample2: want rank 3, got " + shape_str(av.shape));
  int c = av.dim(0), h = av.dim(1), w = av.dim(2);
  int ho = (h + 1) / 2, wo = (w + 1) / 2;
  Tensor<T> out({c, ho, wo});
  for (int ci = 0; ci < c; ci++)
    for (int i = 0; i < ho; i++)
      for (int j = 0; j < wo; j++)
        out.v[(static_cast<int64_t>(ci) * ho + i) * wo + j] =
            av.v[(static_cast<int64_t>(ci) * h + 2 * i) * w + 2 * j];
  bool ng = t.recording && t.needs_grad(a);
  Var<T> o = t.raw_node(std::move(out), ng);
  if (ng)
    t.set_back(o, [a, o, c, h, w, ho, wo]() {
      Tape<T>& tp = *a.tape;
      const Tensor<T>& g = tp.grad(o);
      Tensor<T>& ga = tp.grad_buf(a.id);
      for (int ci = 0; ci < c; ci++)
        for (int i = 0; i < ho; i++)
          for (int j = 0; j < wo; j++)
            ga.v[(static_cast<int64_t>(ci) * h + 2 * i) * w + 2 * j] +=
                g.v[(static_cast<int64_t>(ci) * ho + i) * wo + j];
    });
  return o;
}

// ---------------------------------------------------------------------------
// matmul: (m, k) x (k, n) -> (m, n)

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  Tape<T>& t = *a.tape;
  const Tensor<T>&av = t.val(a), &bv = t.val(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0))
    throw std::invalid_argument("matmul: shape mismatch " + shape_str(av.shape) + " vs " +
                                shape_str(bv.shape));
  int m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor<T> out({m, n});
  gemm<T>(false, false, m, n, k, av.data(), bv.data(), out.data(), false);
  bool ng = t.recording && detail::want_grad<T>({a, b});
  Var<T> o = t.raw_node(std::move(out), ng);
  if (ng)
    t.set_back(o, [a, b, o, m, k, n]() {
      Tape<T>& tp = *a.tape;
      const Tensor<T>& g = tp.grad(o);
      if (tp.needs_grad(a))
        gemm<T>(false, true, m, k, n, g.data(), tp.val(b).data(), tp.grad_buf(a.id).data(), true);
      if (tp.needs_grad(b))
        gemm<T>(true, false, k, n, m, tp.val(a).data(), g.data(), tp.grad_buf(b.id).data(), true);
    });
  return o;
}

// ---------------------------------------------------------------------------
// conv2d, stride 1, zero "same" padding, odd square kernels.
//
// Dense-connection stacks pass several input tensors; they are treated as one
// virtually concatenated (sum C_i, H, W) input without materializing the
// concatenation. kernel: (C_out, C_total, KH, KW), bias: (C_out).

namespace detail {

template <typename T>
std::vector<T>& conv_scratch() {
  static thread_local std::vector<T> buf;
  return buf;
}

// writes the im2col matrix (C_total*KH*KW, H*W) for the given inputs
template <typename T>
void im2col(Tape<T>& t, const std::vector<Var<T>>& inputs, int kh, int kw, int h, int w,
            T* col) {
  int64_t hw = static_cast<int64_t>(h) * w;
  int64_t row = 0;
  for (const auto& in : inputs) {
    const Tensor<T>& iv = t.val(in);
    int c = iv.dim(0);
    for (int ci = 0; ci < c; ci++) {
      const T* plane = iv.data() + static_cast<int64_t>(ci) * hw;
      for (int di = -(kh / 2); di <= kh / 2; di++)
        for (int dj = -(kw / 2); dj <= kw / 2; dj++) {
          T* dst = col + (row++) * hw;
          for (int i = 0; i < h; i++) {
            int si = i + di;
            if (si < 0 || si >= h) {
              std::fill(dst + static_cast<int64_t>(i) * w, dst + static_cast<int64_t>(i + 1) * w,
                        T(0));
              continue;
            }
            const T* srow = plane + static_cast<int64_t>(si) * w;
            T* drow = dst + static_cast<int64_t>(i) * w;
            int j0 = std::max(0, -dj), j1 = std::min(w, w - dj);
            if (j0 > 0) std::fill(drow, drow + j0, T(0));
            if (j1 > j0) std::memcpy(drow + j0, srow + j0 + dj, (j1 - j0) * sizeof(T));
            if (j1 < w) std::fill(drow + j1, drow + w, T(0));
          }
        }
    }
  }
}

}  // namespace detail

template <typename T>
Var<T> conv2d(const std::vector<Var<T>>& inputs, Var<T> kernel, Var<T> bias) {
  if (inputs.empty()) throw std::invalid_argument("conv2d: no inputs");
  Tape<T>& t = *inputs[0].tape;
  const Tensor<T>& kv = t.val(kernel);
  if (kv.rank() != 4) throw std::invalid_argument("conv2d: kernel must be rank 4");
  int cout = kv.dim(0), ctot = kv.dim(1), kh = kv.dim(2), kw = kv.dim(3);
  int h = t.val(inputs[0]).dim(1), w = t.val(inputs[0]).dim(2);
  int csum = 0;
  for (const auto& in : inputs) {
    const Tensor<T>& iv = t.val(in);
    if (iv.rank() != 3 || iv.dim(1) != h || iv.dim(2) != w)
      throw std::invalid_argument("conv2d: input shape mismatch " + shape_str(iv.shape));
    csum += iv.dim(0);
  }
  if (csum != ctot)
    throw std::invalid_argument("conv2d: kernel expects " + std::to_string(ctot) +
                                " channels, inputs provide " + std::to_string(csum));
  const Tensor<T>& bv = t.val(bias);
  if (bv.numel() != cout) throw std::invalid_argument("conv2d: bias size mismatch");

  int64_t hw = static_cast<int64_t>(h) * w;
  int64_t krows = static_cast<int64_t>(ctot) * kh * kw;
  std::vector<T>& col = detail::conv_scratch<T>();
  col.resize(krows * hw);
  detail::im2col(t, inputs, kh, kw, h, w, col.data());

  Tensor<T> out({cout, h, w});
  gemm<T>(false, false, cout, static_cast<int>(hw), static_cast<int>(krows), kv.data(),
          col.data(), out.data(), false);
  for (int co = 0; co < cout; co++) {
    T b = bv.v[co];
    T* dst = out.data() + static_cast<int64_t>(co) * hw;
    for (int64_t i = 0; i < hw; i++) dst[i] += b;
  }

  bool ng = t.recording;
  if (ng) {
    bool any = t.needs_grad(kernel) || t.needs_grad(bias);
    for (const auto& in : inputs) any = any || t.needs_grad(in);
    ng = any;
  }
  Var<T> o = t.raw_node(std::move(out), ng);
  if (ng) {
    std::vector<Var<T>> ins = inputs;
    t.set_back(o, [ins, kernel, bias, o, cout, ctot, kh, kw, h, w]() {
      Tape<T>& tp = *o.tape;
      const Tensor<T>& g = tp.grad(o);
      int64_t hw2 = static_cast<int64_t>(h) * w;
      int64_t krows2 = static_cast<int64_t>(ctot) * kh * kw;

      bool need_in = false;
      for (const auto& in : ins) need_in = need_in || tp.needs_grad(in);

      if (tp.needs_grad(kernel)) {
        // rebuild im2col (cheaper than keeping it alive for every conv node)
        std::vector<T>& col2 = detail::conv_scratch<T>();
        col2.resize(krows2 * hw2);
        detail::im2col(tp, ins, kh, kw, h, w, col2.data());
        gemm<T>(false, true, cout, static_cast<int>(krows2), static_cast<int>(hw2), g.data(),
                col2.data(), tp.grad_buf(kernel.id).data(), true);
      }
      if (tp.needs_grad(bias)) {
        Tensor<T>& gb = tp.grad_buf(bias.id);
        for (int co = 0; co < cout; co++) {
          T s = 0;
          const T* src = g.data() + static_cast<int64_t>(co) * hw2;
          for (int64_t i = 0; i < hw2; i++) s += src[i];
          gb.v[co] += s;
        }
      }
      if (need_in) {
        // dcol = K^T * g, then scatter back (col2im with flipped offsets)
        static thread_local std::vector<T> dcol;
        dcol.resize(krows2 * hw2);
        gemm<T>(true, false, static_cast<int>(krows2), static_cast<int>(hw2), cout,
                tp.val(kernel).data(), g.data(), dcol.data(), false);
        int64_t row = 0;
        for (const auto& in : ins) {
          int c = tp.val(in).dim(0);
          if (!tp.needs_grad(in)) {
            row += static_cast<int64_t>(c) * kh * kw;
            continue;
          }
          Tensor<T>& gi = tp.grad_buf(in.id);
          for (int ci = 0; ci < c; ci++) {
            T* plane = gi.data() + static_cast<int64_t>(ci) * hw2;
            for (int di = -(kh / 2); di <= kh / 2; di++)
              for (int dj = -(kw / 2); dj <= kw / 2; dj++) {
                const T* src = dcol.data() + (row++) * hw2;
                for (int i = 0; i < h; i++) {
                  int si = i + di;
                  if (si < 0 || si >= h) continue;
                  T* drow = plane + static_cast<int64_t>(si) * w;
                  const T* srow = src + static_cast<int64_t>(i) * w;
                  int j0 = std::max(0, -dj), j1 = std::min(w, w - dj);
                  for (int j = j0; j < j1; j++) drow[j + dj] += srow[j];
                }
              }
          }
        }
      }
    });
  }
  return o;
}

template <typename T>
Var<T> conv2d(Var<T> input, Var<T> kernel, Var<T> bias) {
  return conv2d(std::vector<Var<T>>{input}, kernel, bias);
}

// ---------------------------------------------------------------------------
// framing ops for the STFT/ISTFT pair.
//
// unfold: 1-D signal -> (win, T) frame matrix, centered with reflect padding
// of win/2 on each side; frame t is padded[t*hop .. t*hop+win).
// fold_norm: (win, T) frames -> 1-D signal of out_len via overlap-add,
// dividing by a precomputed normalization vector (window-sum), trimming pad.

namespace detail {

inline int64_t reflect_index(int64_t i, int64_t len) {
  // np.pad 'reflect' convention (edge sample not repeated)
  while (i < 0 || i >= len) {
    if (i < 0) i = -i;
    if (i >= len) i = 2 * len - 2 - i;
  }
  return i;
}

}  // namespace detail

template <typename T>
Var<T> unfold(Var<T> x, int win, int hop) {
  Tape<T>& t = *x.tape;
  const Tensor<T>& xv = t.val(x);
  if (xv.rank() != 1) throw std::invalid_argument("unfold: want rank-1 signal");
  int64_t len = xv.numel();
  int pad = win / 2;
  int frames = 1 + static_cast<int>(len / hop);
  Tensor<T> out({win, frames});
  for (int ti = 0; ti < frames; ti++)
    for (int j = 0; j < win; j++) {
      int64_t src = detail::reflect_index(static_cast<int64_t>(ti) * hop + j - pad, len);
      out.v[static_cast<int64_t>(j) * frames + ti] = xv.v[src];
    }
  bool ng = t.recording && t.needs_grad(x);
  Var<T> o = t.raw_node(std::move(out), ng);
  if (ng)
    t.set_back(o, [x, o, win, hop, pad, frames, len]() {
      Tape<T>& tp = *x.tape;
      const Tensor<T>& g = tp.grad(o);
      Tensor<T>& gx = tp.grad_buf(x.id);
      for (int ti = 0; ti < frames; ti++)
        for (int j = 0; j < win; j++) {
          int64_t src = detail::reflect_index(static_cast<int64_t>(ti) * hop + j - pad, len);
          gx.v[src] += g.v[static_cast<int64_t>(j) * frames + ti];
        }
    });
  return o;
}

template <typename T>
Var<T> fold_norm(Var<T> frames_mat, int hop, int pad, int out_len,
                 const std::vector<T>& inv_norm) {
  Tape<T>& t = *frames_mat.tape;
  const Tensor<T>& fv = t.val(frames_mat);
  if (fv.rank() != 2) throw std::invalid_argument("fold: want rank-2 frame matrix");
  int win = fv.dim(0), frames = fv.dim(1);
  if (static_cast<int>(inv_norm.size()) != out_len)
    throw std::invalid_argument("fold: norm vector size mismatch");
  Tensor<T> out({out_len});
  for (int ti = 0; ti < frames; ti++)
    for (int j = 0; j < win; j++) {
      int64_t n = static_cast<int64_t>(ti) * hop + j - pad;
      if (n >= 0 && n < out_len) out.v[n] += fv.v[static_cast<int64_t>(j) * frames + ti];
    }
  for (int64_t n = 0; n < out_len; n++) out.v[n] *= inv_norm[n];
  bool ng = t.recording && t.needs_grad(frames_mat);
  Var<T> o = t.raw_node(std::move(out), ng);
  if (ng) {
    std::vector<T> invn = inv_norm;
    t.set_back(o, [frames_mat, o, hop, pad, out_len, win, frames, invn]() {
      Tape<T>& tp = *frames_mat.tape;
      const Tensor<T>& g = tp.grad(o);
      Tensor<T>& gf = tp.grad_buf(frames_mat.id);
      for (int ti = 0; ti < frames; ti++)
        for (int j = 0; j < win; j++) {
          int64_t n = static_cast<int64_t>(ti) * hop + j - pad;
          if (n >= 0 && n < out_len)
            gf.v[static_cast<int64_t>(j) * frames + ti] += g.v[n] * invn[n];
        }
    });
  }
  return o;
}

// ---------------------------------------------------------------------------
// finite-difference gradient checker.
//
// Both the analytic gradient and the central differences are evaluated in
// 64-bit arithmetic regardless of the production scalar type; callers cast
// parameters to double first. Returns the max over checked coordinates of
// |analytic - fd| / max(|analytic|, |fd|, 1e-8). For large points a random
// coordinate subset of size max_coords is checked.

template <typename F>
double grad_check(F&& f, const TensorD& point, double step, int max_coords = -1,
                  uint64_t seed = 12345) {
  auto eval = [&](const TensorD& p) -> double {
    Tape<double> tape;
    tape.recording = false;
    Var<double> x = tape.leaf(p, false);
    Var<double> y = f(tape, x);
    if (tape.val(y).numel() != 1) throw std::invalid_argument("grad_check: f must be scalar");
    return tape.val(y).v[0];
  };

  Tape<double> tape;
  Var<double> x = tape.leaf(point, true);
  Var<double> y = f(tape, x);
  if (tape.val(y).numel() != 1) throw std::invalid_argument("grad_check: f must be scalar");
  tape.backward(y);
  TensorD analytic = tape.grad(x);
  if (analytic.empty()) analytic = TensorD::zeros(point.shape);

  std::vector<int64_t> coords;
  int64_t n = point.numel();
  if (max_coords < 0 || n <= max_coords) {
    coords.resize(n);
    std::iota(coords.begin(), coords.end(), 0);
  } else {
    Rng rng(seed);
    for (int i = 0; i < max_coords; i++) coords.push_back(rng.uniform_int(static_cast<uint32_t>(n)));
  }

  double worst = 0;
  for (int64_t c : coords) {
    TensorD p = point;
    p.v[c] += step;
    double fp = eval(p);
    p.v[c] = point.v[c] - step;
    double fm = eval(p);
    double fd = (fp - fm) / (2 * step);
    double a = analytic.v[c];
    double err = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-8});
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace wake

#endif  // WAKE_TAPE_HH
