// Copyright 2026 The adnz Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense tensors plus reverse-mode automatic differentiation over the
// primitive set needed by the mask-prediction networks: matmul, bias add,
// 1-D (transposed) convolution along the frequency axis, elementwise
// add/mul, sigmoid/tanh/relu, channel concat and slice.
//
// A Tape owns all intermediate values; ops return Var handles. Gradients are
// accumulated across fan-out. One backward pass per tape.

#ifndef ADNZ_TENSOR_HPP_
#define ADNZ_TENSOR_HPP_

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "adnz/common.hpp"

namespace adnz {

template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), T(0));
  }
  Tensor(std::vector<std::size_t> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    require_shape(data.size() == numel_of(shape), "tensor: data length does not match shape");
  }

  static std::size_t numel_of(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
  }

  std::size_t numel() const { return data.size(); }
  std::size_t dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  int ndim() const { return static_cast<int>(shape.size()); }

  T& at(std::size_t i) { return data[i]; }
  const T& at(std::size_t i) const { return data[i]; }
  // 2-D accessors, row-major.
  T& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  const T& at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

template <typename T>
std::string shape_str(const Tensor<T>& t) {
  std::string s = "[";
  for (std::size_t i = 0; i < t.shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(t.shape[i]);
  }
  return s + "]";
}

// Handle into a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var input(Tensor<T> value, bool requires_grad) {
    return push(std::move(value), requires_grad, {});
  }

  const Tensor<T>& value(Var v) const { return node(v).value; }
  const Tensor<T>& grad(Var v) const { return node(v).grad; }
  bool requires_grad(Var v) const { return node(v).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // ---- primitive ops -------------------------------------------------------

  // [m,k] x [k,n] -> [m,n], or [m,k] x [k] -> [m].
  Var matmul(Var a, Var b) {
    const Tensor<T>& A = value(a);
    const Tensor<T>& B = value(b);
    require_shape(A.ndim() == 2, "matmul: lhs must be 2-D, got " + shape_str(A));
    const bool vec = B.ndim() == 1;
    require_shape(vec || B.ndim() == 2, "matmul: rhs must be 1-D or 2-D, got " + shape_str(B));
    const std::size_t m = A.dim(0), k = A.dim(1);
    const std::size_t n = vec ? 1 : B.dim(1);
    require_shape((vec ? B.dim(0) : B.dim(0)) == k,
                  "matmul: inner dims differ, " + shape_str(A) + " x " + shape_str(B));

    Tensor<T> out(vec ? std::vector<std::size_t>{m} : std::vector<std::size_t>{m, n});
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        T acc = T(0);
        for (std::size_t p = 0; p < k; ++p) acc += A.data[i * k + p] * B.data[p * n + j];
        out.data[i * n + j] = acc;
      }
    }
    Var v = push(std::move(out), requires_grad(a) || requires_grad(b), {a, b});
    set_backward(v, [this, v, a, b, m, k, n](Tape& t) {
      const Tensor<T>& g = t.grad_of(v);
      const Tensor<T>& A2 = t.value(a);
      const Tensor<T>& B2 = t.value(b);
      if (t.requires_grad(a)) {
        Tensor<T>& ga = t.grad_of(a);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            T acc = T(0);
            for (std::size_t j = 0; j < n; ++j) acc += g.data[i * n + j] * B2.data[p * n + j];
            ga.data[i * k + p] += acc;
          }
      }
      if (t.requires_grad(b)) {
        Tensor<T>& gb = t.grad_of(b);
        for (std::size_t p = 0; p < k; ++p)
          for (std::size_t j = 0; j < n; ++j) {
            T acc = T(0);
            for (std::size_t i = 0; i < m; ++i) acc += A2.data[i * k + p] * g.data[i * n + j];
            gb.data[p * n + j] += acc;
          }
      }
    });
    return v;
  }

  // x [Cin,W], w [Cout,Cin,K]; stride s, zero padding (K-1)/2 on both sides;
  // output [Cout, W/s]. Stride must divide W.
  Var conv1d(Var x, Var w, int stride) {
    const Tensor<T>& X = value(x);
    const Tensor<T>& Wt = value(w);
    require_shape(X.ndim() == 2 && Wt.ndim() == 3,
                  "conv1d: want x [Cin,W], w [Cout,Cin,K]; got " + shape_str(X) + ", " +
                      shape_str(Wt));
    const std::size_t c_in = X.dim(0), width = X.dim(1);
    const std::size_t c_out = Wt.dim(0), k = Wt.dim(2);
    require_shape(Wt.dim(1) == c_in,
                  "conv1d: channel mismatch, x " + shape_str(X) + " vs w " + shape_str(Wt));
    require_shape(k % 2 == 1, "conv1d: kernel must be odd");
    require_shape(stride >= 1 && width % static_cast<std::size_t>(stride) == 0,
                  "conv1d: stride " + std::to_string(stride) + " does not divide width " +
                      std::to_string(width));
    const std::size_t out_w = width / static_cast<std::size_t>(stride);
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);

    Tensor<T> out({c_out, out_w});
    for (std::size_t co = 0; co < c_out; ++co) {
      for (std::size_t ci = 0; ci < c_in; ++ci) {
        const T* xrow = X.data.data() + ci * width;
        for (std::size_t kk = 0; kk < k; ++kk) {
          const T wv = Wt.data[(co * c_in + ci) * k + kk];
          if (wv == T(0)) continue;
          for (std::size_t ow = 0; ow < out_w; ++ow) {
            const std::ptrdiff_t iw =
                static_cast<std::ptrdiff_t>(ow) * stride + static_cast<std::ptrdiff_t>(kk) - pad;
            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(width)) continue;
            out.data[co * out_w + ow] += wv * xrow[iw];
          }
        }
      }
    }
    Var v = push(std::move(out), requires_grad(x) || requires_grad(w), {x, w});
    set_backward(v, [this, v, x, w, c_in, width, c_out, k, out_w, pad, stride](Tape& t) {
      const Tensor<T>& g = t.grad_of(v);
      const Tensor<T>& X2 = t.value(x);
      const Tensor<T>& W2 = t.value(w);
      const bool need_x = t.requires_grad(x);
      const bool need_w = t.requires_grad(w);
      Tensor<T>* gx = need_x ? &t.grad_of(x) : nullptr;
      Tensor<T>* gw = need_w ? &t.grad_of(w) : nullptr;
      for (std::size_t co = 0; co < c_out; ++co) {
        const T* grow = g.data.data() + co * out_w;
        for (std::size_t ci = 0; ci < c_in; ++ci) {
          const T* xrow = X2.data.data() + ci * width;
          for (std::size_t kk = 0; kk < k; ++kk) {
            const T wv = W2.data[(co * c_in + ci) * k + kk];
            T wacc = T(0);
            for (std::size_t ow = 0; ow < out_w; ++ow) {
              const std::ptrdiff_t iw =
                  static_cast<std::ptrdiff_t>(ow) * stride + static_cast<std::ptrdiff_t>(kk) - pad;
              if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(width)) continue;
              if (need_w) wacc += grow[ow] * xrow[iw];
              if (need_x) gx->data[ci * width + static_cast<std::size_t>(iw)] += grow[ow] * wv;
            }
            if (need_w) gw->data[(co * c_in + ci) * k + kk] += wacc;
          }
        }
      }
    });
    return v;
  }

  // Adjoint of conv1d: x [Cin,W], w [Cin,Cout,K] -> [Cout, W*stride].
  // Upsamples the frequency axis; padding mirrors conv1d's (K-1)/2.
  Var tconv1d(Var x, Var w, int stride) {
    const Tensor<T>& X = value(x);
    const Tensor<T>& Wt = value(w);
    require_shape(X.ndim() == 2 && Wt.ndim() == 3,
                  "tconv1d: want x [Cin,W], w [Cin,Cout,K]; got " + shape_str(X) + ", " +
                      shape_str(Wt));
    const std::size_t c_in = X.dim(0), width = X.dim(1);
    const std::size_t c_out = Wt.dim(1), k = Wt.dim(2);
    require_shape(Wt.dim(0) == c_in,
                  "tconv1d: channel mismatch, x " + shape_str(X) + " vs w " + shape_str(Wt));
    require_shape(k % 2 == 1, "tconv1d: kernel must be odd");
    require_shape(stride >= 1, "tconv1d: bad stride");
    const std::size_t out_w = width * static_cast<std::size_t>(stride);
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);

    Tensor<T> out({c_out, out_w});
    for (std::size_t ci = 0; ci < c_in; ++ci) {
      const T* xrow = X.data.data() + ci * width;
      for (std::size_t co = 0; co < c_out; ++co) {
        T* orow = out.data.data() + co * out_w;
        for (std::size_t kk = 0; kk < k; ++kk) {
          const T wv = Wt.data[(ci * c_out + co) * k + kk];
          if (wv == T(0)) continue;
          for (std::size_t iw = 0; iw < width; ++iw) {
            const std::ptrdiff_t ow =
                static_cast<std::ptrdiff_t>(iw) * stride + static_cast<std::ptrdiff_t>(kk) - pad;
            if (ow < 0 || ow >= static_cast<std::ptrdiff_t>(out_w)) continue;
            orow[ow] += wv * xrow[iw];
          }
        }
      }
    }
    Var v = push(std::move(out), requires_grad(x) || requires_grad(w), {x, w});
    set_backward(v, [this, v, x, w, c_in, width, c_out, k, out_w, pad, stride](Tape& t) {
      const Tensor<T>& g = t.grad_of(v);
      const Tensor<T>& X2 = t.value(x);
      const Tensor<T>& W2 = t.value(w);
      const bool need_x = t.requires_grad(x);
      const bool need_w = t.requires_grad(w);
      Tensor<T>* gx = need_x ? &t.grad_of(x) : nullptr;
      Tensor<T>* gw = need_w ? &t.grad_of(w) : nullptr;
      for (std::size_t ci = 0; ci < c_in; ++ci) {
        const T* xrow = X2.data.data() + ci * width;
        for (std::size_t co = 0; co < c_out; ++co) {
          const T* grow = g.data.data() + co * out_w;
          for (std::size_t kk = 0; kk < k; ++kk) {
            const T wv = W2.data[(ci * c_out + co) * k + kk];
            T wacc = T(0);
            for (std::size_t iw = 0; iw < width; ++iw) {
              const std::ptrdiff_t ow =
                  static_cast<std::ptrdiff_t>(iw) * stride + static_cast<std::ptrdiff_t>(kk) - pad;
              if (ow < 0 || ow >= static_cast<std::ptrdiff_t>(out_w)) continue;
              if (need_w) wacc += grow[ow] * xrow[iw];
              if (need_x) gx->data[ci * width + iw] += grow[ow] * wv;
            }
            if (need_w) gw->data[(ci * c_out + co) * k + kk] += wacc;
          }
        }
      }
    });
    return v;
  }

  Var add(Var a, Var b) {
    const Tensor<T>& A = value(a);
    const Tensor<T>& B = value(b);
    require_shape(A.same_shape(B), "add: shape mismatch " + shape_str(A) + " vs " + shape_str(B));
    Tensor<T> out = A;
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] += B.data[i];
    Var v = push(std::move(out), requires_grad(a) || requires_grad(b), {a, b});
    set_backward(v, [this, v, a, b](Tape& t) {
      const Tensor<T>& g = t.grad_of(v);
      if (t.requires_grad(a)) accumulate(t.grad_of(a), g);
      if (t.requires_grad(b)) accumulate(t.grad_of(b), g);
    });
    return v;
  }

  Var sub(Var a, Var b) {
    const Tensor<T>& A = value(a);
    const Tensor<T>& B = value(b);
    require_shape(A.same_shape(B), "sub: shape mismatch " + shape_str(A) + " vs " + shape_str(B));
    Tensor<T> out = A;
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] -= B.data[i];
    Var v = push(std::move(out), requires_grad(a) || requires_grad(b), {a, b});
    set_backward(v, [this, v, a, b](Tape& t) {
      const Tensor<T>& g = t.grad_of(v);
      if (t.requires_grad(a)) accumulate(t.grad_of(a), g);
      if (t.requires_grad(b)) {
        Tensor<T>& gb = t.grad_of(b);
        for (std::size_t i = 0; i < g.numel(); ++i) gb.data[i] -= g.data[i];
      }
    });
    return v;
  }

  Var mul(Var a, Var b) {
    const Tensor<T>& A = value(a);
    const Tensor<T>& B = value(b);
    require_shape(A.same_shape(B), "mul: shape mismatch " + shape_str(A) + " vs " + shape_str(B));
    Tensor<T> out = A;
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] *= B.data[i];
    Var v = push(std::move(out), requires_grad(a) || requires_grad(b), {a, b});
    set_backward(v, [this, v, a, b](Tape& t) {
      const Tensor<T>& g = t.grad_of(v);
      const Tensor<T>& A2 = t.value(a);
      const Tensor<T>& B2 = t.value(b);
      if (t.requires_grad(a)) {
        Tensor<T>& ga = t.grad_of(a);
        for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i] * B2.data[i];
      }
      if (t.requires_grad(b)) {
        Tensor<T>& gb = t.grad_of(b);
        for (std::size_t i = 0; i < g.numel(); ++i) gb.data[i] += g.data[i] * A2.data[i];
      }
    });
    return v;
  }

  // x [C,W] + b [C] broadcast along W, or x [n] + b [n].
  Var add_bias(Var x, Var b) {
    const Tensor<T>& X = value(x);
    const Tensor<T>& B = value(b);
    if (X.ndim() == 1) return add(x, b);
    require_shape(X.ndim() == 2 && B.ndim() == 1 && B.dim(0) == X.dim(0),
                  "add_bias: want x [C,W], b [C]; got " + shape_str(X) + ", " + shape_str(B));
    const std::size_t c = X.dim(0), w = X.dim(1);
    Tensor<T> out = X;
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t j = 0; j < w; ++j) out.data[i * w + j] += B.data[i];
    Var v = push(std::move(out), requires_grad(x) || requires_grad(b), {x, b});
    set_backward(v, [this, v, x, b, c, w](Tape& t) {
      const Tensor<T>& g = t.grad_of(v);
      if (t.requires_grad(x)) accumulate(t.grad_of(x), g);
      if (t.requires_grad(b)) {
        Tensor<T>& gb = t.grad_of(b);
        for (std::size_t i = 0; i < c; ++i) {
          T acc = T(0);
          for (std::size_t j = 0; j < w; ++j) acc += g.data[i * w + j];
          gb.data[i] += acc;
        }
      }
    });
    return v;
  }

  Var sigmoid(Var x) {
    Tensor<T> out = value(x);
    for (auto& v : out.data) v = T(1) / (T(1) + std::exp(-v));
    Var v = push(std::move(out), requires_grad(x), {x});
    set_backward(v, [this, v, x](Tape& t) {
      if (!t.requires_grad(x)) return;
      const Tensor<T>& g = t.grad_of(v);
      const Tensor<T>& y = t.value(v);
      Tensor<T>& gx = t.grad_of(x);
      for (std::size_t i = 0; i < g.numel(); ++i) {
        gx.data[i] += g.data[i] * y.data[i] * (T(1) - y.data[i]);
      }
    });
    return v;
  }

  Var tanh(Var x) {
    Tensor<T> out = value(x);
    for (auto& v : out.data) v = std::tanh(v);
    Var v = push(std::move(out), requires_grad(x), {x});
    set_backward(v, [this, v, x](Tape& t) {
      if (!t.requires_grad(x)) return;
      const Tensor<T>& g = t.grad_of(v);
      const Tensor<T>& y = t.value(v);
      Tensor<T>& gx = t.grad_of(x);
      for (std::size_t i = 0; i < g.numel(); ++i) {
        gx.data[i] += g.data[i] * (T(1) - y.data[i] * y.data[i]);
      }
    });
    return v;
  }

  Var relu(Var x) {
    Tensor<T> out = value(x);
    for (auto& v : out.data) v = v > T(0) ? v : T(0);
    Var v = push(std::move(out), requires_grad(x), {x});
    set_backward(v, [this, v, x](Tape& t) {
      if (!t.requires_grad(x)) return;
      const Tensor<T>& g = t.grad_of(v);
      const Tensor<T>& xin = t.value(x);
      Tensor<T>& gx = t.grad_of(x);
      for (std::size_t i = 0; i < g.numel(); ++i) {
        if (xin.data[i] > T(0)) gx.data[i] += g.data[i];
      }
    });
    return v;
  }

  // Concatenate along the channel axis (axis 0). Widths must match for 2-D.
  Var concat_rows(Var a, Var b) {
    const Tensor<T>& A = value(a);
    const Tensor<T>& B = value(b);
    require_shape(A.ndim() == B.ndim() && (A.ndim() == 1 || A.dim(1) == B.dim(1)),
                  "concat_rows: incompatible " + shape_str(A) + " vs " + shape_str(B));
    std::vector<std::size_t> shape = A.shape;
    shape[0] += B.dim(0);
    Tensor<T> out(shape);
    std::copy(A.data.begin(), A.data.end(), out.data.begin());
    std::copy(B.data.begin(), B.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(A.numel()));
    const std::size_t a_n = A.numel();
    Var v = push(std::move(out), requires_grad(a) || requires_grad(b), {a, b});
    set_backward(v, [this, v, a, b, a_n](Tape& t) {
      const Tensor<T>& g = t.grad_of(v);
      if (t.requires_grad(a)) {
        Tensor<T>& ga = t.grad_of(a);
        for (std::size_t i = 0; i < a_n; ++i) ga.data[i] += g.data[i];
      }
      if (t.requires_grad(b)) {
        Tensor<T>& gb = t.grad_of(b);
        for (std::size_t i = 0; i < gb.numel(); ++i) gb.data[i] += g.data[a_n + i];
      }
    });
    return v;
  }

  // Rows [r0, r1) along axis 0.
  Var slice_rows(Var x, std::size_t r0, std::size_t r1) {
    const Tensor<T>& X = value(x);
    require_shape(r0 < r1 && r1 <= X.dim(0),
                  "slice_rows: range [" + std::to_string(r0) + "," + std::to_string(r1) +
                      ") out of " + shape_str(X));
    const std::size_t row = X.ndim() == 1 ? 1 : X.dim(1);
    std::vector<std::size_t> shape = X.shape;
    shape[0] = r1 - r0;
    Tensor<T> out(shape);
    std::copy(X.data.begin() + static_cast<std::ptrdiff_t>(r0 * row),
              X.data.begin() + static_cast<std::ptrdiff_t>(r1 * row), out.data.begin());
    Var v = push(std::move(out), requires_grad(x), {x});
    set_backward(v, [this, v, x, r0, row](Tape& t) {
      if (!t.requires_grad(x)) return;
      const Tensor<T>& g = t.grad_of(v);
      Tensor<T>& gx = t.grad_of(x);
      for (std::size_t i = 0; i < g.numel(); ++i) gx.data[r0 * row + i] += g.data[i];
    });
    return v;
  }

  // Metadata-only view change; element order is preserved.
  Var reshape(Var x, std::vector<std::size_t> shape) {
    const Tensor<T>& X = value(x);
    require_shape(Tensor<T>::numel_of(shape) == X.numel(),
                  "reshape: element count mismatch for " + shape_str(X));
    Tensor<T> out(std::move(shape), X.data);
    Var v = push(std::move(out), requires_grad(x), {x});
    set_backward(v, [this, v, x](Tape& t) {
      if (!t.requires_grad(x)) return;
      const Tensor<T>& g = t.grad_of(v);
      Tensor<T>& gx = t.grad_of(x);
      for (std::size_t i = 0; i < g.numel(); ++i) gx.data[i] += g.data[i];
    });
    return v;
  }

  Var scale(Var x, T c) {
    Tensor<T> out = value(x);
    for (auto& v : out.data) v *= c;
    Var v = push(std::move(out), requires_grad(x), {x});
    set_backward(v, [this, v, x, c](Tape& t) {
      if (!t.requires_grad(x)) return;
      const Tensor<T>& g = t.grad_of(v);
      Tensor<T>& gx = t.grad_of(x);
      for (std::size_t i = 0; i < g.numel(); ++i) gx.data[i] += c * g.data[i];
    });
    return v;
  }

  // Sum of all elements -> scalar [1].
  Var sum(Var x) {
    const Tensor<T>& X = value(x);
    T acc = T(0);
    for (const T& v : X.data) acc += v;
    Tensor<T> out({1});
    out.data[0] = acc;
    Var v = push(std::move(out), requires_grad(x), {x});
    set_backward(v, [this, v, x](Tape& t) {
      if (!t.requires_grad(x)) return;
      const T g = t.grad_of(v).data[0];
      Tensor<T>& gx = t.grad_of(x);
      for (auto& gv : gx.data) gv += g;
    });
    return v;
  }

  // Mean squared error between two same-shape vars -> scalar.
  Var mse(Var pred, Var target) {
    Var d = sub(pred, target);
    Var sq = mul(d, d);
    Var s = sum(sq);
    return scale(s, T(1) / static_cast<T>(value(pred).numel()));
  }

  // Reverse pass from a scalar loss. May be called once per tape.
  void backward(Var loss) {
    require(!backward_done_, "backward: already called on this tape");
    require(node(loss).value.numel() == 1, "backward: loss must be scalar");
    backward_done_ = true;
    node(loss).grad.data[0] = T(1);
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      if (nodes_[i].backward && nodes_[i].requires_grad) nodes_[i].backward(*this);
    }
  }

  Tensor<T>& grad_of(Var v) { return node(v).grad; }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    std::function<void(Tape&)> backward;
  };

  Var push(Tensor<T> value, bool requires_grad, std::vector<Var> /*parents*/) {
    for (const T& v : value.data) {
      if (!std::isfinite(static_cast<double>(v))) {
        throw NumericError("tape: non-finite value produced at node " +
                           std::to_string(nodes_.size()));
      }
    }
    Node n;
    n.grad = Tensor<T>(value.shape);
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  void set_backward(Var v, std::function<void(Tape&)> fn) { node(v).backward = std::move(fn); }

  Node& node(Var v) { return nodes_[v.id]; }
  const Node& node(Var v) const { return nodes_[v.id]; }

  static void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
    for (std::size_t i = 0; i < dst.numel(); ++i) dst.data[i] += src.data[i];
  }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// Central finite-difference check of reverse-mode gradients.
// `build` maps (tape, input var) to a scalar loss var; returns the worst
// relative error over all coordinates of x.
template <typename T, typename BuildFn>
double grad_check(const BuildFn& build, const Tensor<T>& x, double eps) {
  require_config(eps >= 1e-7 && eps <= 1e-3, "grad_check: eps out of [1e-7, 1e-3]");

  Tensor<T> analytic;
  {
    Tape<T> tape;
    Var xv = tape.input(x, true);
    Var loss = build(tape, xv);
    require(tape.value(loss).numel() == 1, "grad_check: build must yield a scalar");
    require(std::isfinite(static_cast<double>(tape.value(loss).data[0])),
            "grad_check: non-finite loss");
    tape.backward(loss);
    analytic = tape.grad(xv);
  }

  const auto eval = [&](const Tensor<T>& probe) {
    Tape<T> tape;
    Var xv = tape.input(probe, false);
    Var loss = build(tape, xv);
    return static_cast<double>(tape.value(loss).data[0]);
  };

  double worst = 0.0;
  Tensor<T> probe = x;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double x0 = static_cast<double>(x.data[i]);
    const double h = eps * std::max(1.0, std::abs(x0));
    probe.data[i] = static_cast<T>(x0 + h);
    const double f_plus = eval(probe);
    probe.data[i] = static_cast<T>(x0 - h);
    const double f_minus = eval(probe);
    probe.data[i] = static_cast<T>(x0);
    const double fd = (f_plus - f_minus) / (2.0 * h);
    const double ad = static_cast<double>(analytic.data[i]);
    if (std::abs(ad) < 1e-10 && std::abs(fd) < 1e-10) continue;
    const double rel = std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), 1e-6});
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace adnz

#endif  // ADNZ_TENSOR_HPP_
