// Reverse-mode tape over shared-buffer tensors. Scalar type is a template
// parameter: float for training, double for finite-difference checks.
#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

namespace nav::ad {

template <class S>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false) {
    Tensor t;
    t.d_ = std::make_shared<Data>();
    t.d_->shape = std::move(shape);
    t.d_->val.assign(product(t.d_->shape), S(0));
    if (requires_grad) t.set_requires_grad();
    return t;
  }

  static Tensor from(std::vector<int> shape, std::vector<S> values,
                     bool requires_grad = false) {
    Tensor t;
    t.d_ = std::make_shared<Data>();
    t.d_->shape = std::move(shape);
    assert(int64_t(values.size()) == product(t.d_->shape));
    t.d_->val = std::move(values);
    if (requires_grad) t.set_requires_grad();
    return t;
  }

  static Tensor scalar(S v, bool requires_grad = false) {
    return from({1}, {v}, requires_grad);
  }

  // Tensors are shared-buffer handles; constness is shallow by design.
  bool defined() const { return d_ != nullptr; }
  const std::vector<int>& shape() const { return d_->shape; }
  int64_t size() const { return int64_t(d_->val.size()); }

  S* data() const { return d_->val.data(); }
  std::vector<S>& values() const { return d_->val; }

  bool requires_grad() const { return d_ && d_->requires_grad; }
  void set_requires_grad() const {
    d_->requires_grad = true;
    d_->grad.assign(d_->val.size(), S(0));
  }
  S* grad() const { return d_->grad.data(); }
  void zero_grad() const { std::fill(d_->grad.begin(), d_->grad.end(), S(0)); }

  S item() const {
    assert(size() == 1);
    return d_->val[0];
  }

  // Identity of the underlying buffer, not value equality.
  bool same_storage(const Tensor& o) const { return d_ == o.d_; }

  static int64_t product(const std::vector<int>& shape) {
    return std::accumulate(shape.begin(), shape.end(), int64_t(1),
                           [](int64_t a, int b) { return a * b; });
  }

 private:
  struct Data {
    std::vector<int> shape;
    std::vector<S> val;
    std::vector<S> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Data> d_;
};

// Records backward closures in forward order; backward() runs them in
// exact reverse so every node's gradient is complete before its inputs'.
template <class S>
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }
  void set_recording(bool r) { recording_ = r; }
  size_t size() const { return ops_.size(); }

  void record(std::function<void()> fn) {
    if (recording_) ops_.push_back(std::move(fn));
  }

  void backward(Tensor<S>& out) {
    assert(out.size() == 1 && out.requires_grad());
    out.grad()[0] += S(1);
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
  }

  void clear() { ops_.clear(); }

 private:
  bool recording_;
  std::vector<std::function<void()>> ops_;
};

namespace detail {

// Fixed-order blocked reduction; vectorizes without relaxed FP semantics.
template <class S>
inline S dot_n(const S* a, const S* b, int64_t n) {
  S acc[8] = {S(0), S(0), S(0), S(0), S(0), S(0), S(0), S(0)};
  int64_t c = 0;
  for (; c + 8 <= n; c += 8)
    for (int j = 0; j < 8; ++j) acc[j] += a[c + j] * b[c + j];
  S tail = S(0);
  for (; c < n; ++c) tail += a[c] * b[c];
  return ((acc[0] + acc[4]) + (acc[1] + acc[5])) +
         ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail;
}

template <class S>
inline void axpy_n(S alpha, const S* x, S* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class S>
inline S stable_sigmoid(S x) {
  if (x >= S(0)) return S(1) / (S(1) + std::exp(-x));
  const S e = std::exp(x);
  return e / (S(1) + e);
}

template <class S>
bool mark_output(Tape<S>& tape, Tensor<S>& out, bool any_input_grad) {
  const bool track = tape.recording() && any_input_grad;
  if (track) out.set_requires_grad();
  return track;
}

}  // namespace detail

// ---- elementwise ----

template <class S>
Tensor<S> add(Tape<S>& tape, const Tensor<S>& a, const Tensor<S>& b) {
  assert(a.shape() == b.shape());
  Tensor<S> out = Tensor<S>::zeros(a.shape());
  for (int64_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
  if (detail::mark_output(tape, out, a.requires_grad() || b.requires_grad())) {
    tape.record([a, b, out]() mutable {
      if (a.requires_grad())
        for (int64_t i = 0; i < a.size(); ++i) a.grad()[i] += out.grad()[i];
      if (b.requires_grad())
        for (int64_t i = 0; i < b.size(); ++i) b.grad()[i] += out.grad()[i];
    });
  }
  return out;
}

template <class S>
Tensor<S> sub(Tape<S>& tape, const Tensor<S>& a, const Tensor<S>& b) {
  assert(a.shape() == b.shape());
  Tensor<S> out = Tensor<S>::zeros(a.shape());
  for (int64_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
  if (detail::mark_output(tape, out, a.requires_grad() || b.requires_grad())) {
    tape.record([a, b, out]() mutable {
      if (a.requires_grad())
        for (int64_t i = 0; i < a.size(); ++i) a.grad()[i] += out.grad()[i];
      if (b.requires_grad())
        for (int64_t i = 0; i < b.size(); ++i) b.grad()[i] -= out.grad()[i];
    });
  }
  return out;
}

template <class S>
Tensor<S> mul(Tape<S>& tape, const Tensor<S>& a, const Tensor<S>& b) {
  assert(a.shape() == b.shape());
  Tensor<S> out = Tensor<S>::zeros(a.shape());
  for (int64_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  if (detail::mark_output(tape, out, a.requires_grad() || b.requires_grad())) {
    tape.record([a, b, out]() mutable {
      if (a.requires_grad())
        for (int64_t i = 0; i < a.size(); ++i)
          a.grad()[i] += out.grad()[i] * b.data()[i];
      if (b.requires_grad())
        for (int64_t i = 0; i < b.size(); ++i)
          b.grad()[i] += out.grad()[i] * a.data()[i];
    });
  }
  return out;
}

// mul_c * x + add_c
template <class S>
Tensor<S> affine(Tape<S>& tape, const Tensor<S>& x, S mul_c, S add_c) {
  Tensor<S> out = Tensor<S>::zeros(x.shape());
  for (int64_t i = 0; i < x.size(); ++i) out.data()[i] = mul_c * x.data()[i] + add_c;
  if (detail::mark_output(tape, out, x.requires_grad())) {
    tape.record([x, out, mul_c]() mutable {
      for (int64_t i = 0; i < x.size(); ++i) x.grad()[i] += mul_c * out.grad()[i];
    });
  }
  return out;
}

template <class S>
Tensor<S> relu(Tape<S>& tape, const Tensor<S>& x) {
  Tensor<S> out = Tensor<S>::zeros(x.shape());
  for (int64_t i = 0; i < x.size(); ++i)
    out.data()[i] = x.data()[i] > S(0) ? x.data()[i] : S(0);
  if (detail::mark_output(tape, out, x.requires_grad())) {
    tape.record([x, out]() mutable {
      for (int64_t i = 0; i < x.size(); ++i)
        if (x.data()[i] > S(0)) x.grad()[i] += out.grad()[i];
    });
  }
  return out;
}

template <class S>
Tensor<S> tanh(Tape<S>& tape, const Tensor<S>& x) {
  Tensor<S> out = Tensor<S>::zeros(x.shape());
  for (int64_t i = 0; i < x.size(); ++i) out.data()[i] = std::tanh(x.data()[i]);
  if (detail::mark_output(tape, out, x.requires_grad())) {
    tape.record([x, out]() mutable {
      for (int64_t i = 0; i < x.size(); ++i)
        x.grad()[i] += out.grad()[i] * (S(1) - out.data()[i] * out.data()[i]);
    });
  }
  return out;
}

template <class S>
Tensor<S> sigmoid(Tape<S>& tape, const Tensor<S>& x) {
  Tensor<S> out = Tensor<S>::zeros(x.shape());
  for (int64_t i = 0; i < x.size(); ++i)
    out.data()[i] = detail::stable_sigmoid(x.data()[i]);
  if (detail::mark_output(tape, out, x.requires_grad())) {
    tape.record([x, out]() mutable {
      for (int64_t i = 0; i < x.size(); ++i)
        x.grad()[i] += out.grad()[i] * out.data()[i] * (S(1) - out.data()[i]);
    });
  }
  return out;
}

template <class S>
Tensor<S> exp(Tape<S>& tape, const Tensor<S>& x) {
  Tensor<S> out = Tensor<S>::zeros(x.shape());
  for (int64_t i = 0; i < x.size(); ++i) out.data()[i] = std::exp(x.data()[i]);
  if (detail::mark_output(tape, out, x.requires_grad())) {
    tape.record([x, out]() mutable {
      for (int64_t i = 0; i < x.size(); ++i)
        x.grad()[i] += out.grad()[i] * out.data()[i];
    });
  }
  return out;
}

// Gradient passes only strictly inside [lo, hi].
template <class S>
Tensor<S> clamp(Tape<S>& tape, const Tensor<S>& x, S lo, S hi) {
  Tensor<S> out = Tensor<S>::zeros(x.shape());
  for (int64_t i = 0; i < x.size(); ++i)
    out.data()[i] = std::clamp(x.data()[i], lo, hi);
  if (detail::mark_output(tape, out, x.requires_grad())) {
    tape.record([x, out, lo, hi]() mutable {
      for (int64_t i = 0; i < x.size(); ++i)
        if (x.data()[i] > lo && x.data()[i] < hi) x.grad()[i] += out.grad()[i];
    });
  }
  return out;
}

// Elementwise min; ties route the gradient to a.
template <class S>
Tensor<S> min(Tape<S>& tape, const Tensor<S>& a, const Tensor<S>& b) {
  assert(a.shape() == b.shape());
  Tensor<S> out = Tensor<S>::zeros(a.shape());
  for (int64_t i = 0; i < a.size(); ++i)
    out.data()[i] = a.data()[i] <= b.data()[i] ? a.data()[i] : b.data()[i];
  if (detail::mark_output(tape, out, a.requires_grad() || b.requires_grad())) {
    tape.record([a, b, out]() mutable {
      for (int64_t i = 0; i < a.size(); ++i) {
        if (a.data()[i] <= b.data()[i]) {
          if (a.requires_grad()) a.grad()[i] += out.grad()[i];
        } else if (b.requires_grad()) {
          b.grad()[i] += out.grad()[i];
        }
      }
    });
  }
  return out;
}

template <class S>
Tensor<S> sum(Tape<S>& tape, const Tensor<S>& x) {
  S acc = S(0);
  for (int64_t i = 0; i < x.size(); ++i) acc += x.data()[i];
  Tensor<S> out = Tensor<S>::scalar(acc);
  if (detail::mark_output(tape, out, x.requires_grad())) {
    tape.record([x, out]() mutable {
      const S g = out.grad()[0];
      for (int64_t i = 0; i < x.size(); ++i) x.grad()[i] += g;
    });
  }
  return out;
}

template <class S>
Tensor<S> concat(Tape<S>& tape, const std::vector<Tensor<S>>& parts) {
  int64_t total = 0;
  bool any_grad = false;
  for (const auto& p : parts) {
    assert(p.shape().size() == 1);
    total += p.size();
    any_grad = any_grad || p.requires_grad();
  }
  Tensor<S> out = Tensor<S>::zeros({int(total)});
  int64_t off = 0;
  for (const auto& p : parts) {
    std::copy(p.data(), p.data() + p.size(), out.data() + off);
    off += p.size();
  }
  if (detail::mark_output(tape, out, any_grad)) {
    tape.record([parts, out]() mutable {
      int64_t o = 0;
      for (auto& p : parts) {
        if (p.requires_grad())
          for (int64_t i = 0; i < p.size(); ++i) p.grad()[i] += out.grad()[o + i];
        o += p.size();
      }
    });
  }
  return out;
}

// ---- layers ----

// x [n] or [B, n]; weights [m, n]; bias [m].
template <class S>
Tensor<S> dense(Tape<S>& tape, const Tensor<S>& x, const Tensor<S>& weights,
                const Tensor<S>& bias) {
  assert(weights.shape().size() == 2 && bias.shape().size() == 1);
  const int m = weights.shape()[0];
  const int n = weights.shape()[1];
  assert(bias.shape()[0] == m);
  const bool batched = x.shape().size() == 2;
  const int batch = batched ? x.shape()[0] : 1;
  assert((batched ? x.shape()[1] : x.shape()[0]) == n);

  Tensor<S> out =
      batched ? Tensor<S>::zeros({batch, m}) : Tensor<S>::zeros({m});
  for (int bi = 0; bi < batch; ++bi) {
    const S* xv = x.data() + int64_t(bi) * n;
    S* ov = out.data() + int64_t(bi) * m;
    for (int r = 0; r < m; ++r)
      ov[r] = detail::dot_n(weights.data() + int64_t(r) * n, xv, n) + bias.data()[r];
  }
  const bool any =
      x.requires_grad() || weights.requires_grad() || bias.requires_grad();
  if (detail::mark_output(tape, out, any)) {
    tape.record([x, weights, bias, out, m, n, batch]() mutable {
      for (int bi = 0; bi < batch; ++bi) {
        const S* gy = out.grad() + int64_t(bi) * m;
        const S* xv = x.data() + int64_t(bi) * n;
        for (int r = 0; r < m; ++r) {
          const S g = gy[r];
          if (g == S(0)) continue;
          if (x.requires_grad())
            detail::axpy_n(g, weights.data() + int64_t(r) * n,
                           x.grad() + int64_t(bi) * n, n);
          if (weights.requires_grad())
            detail::axpy_n(g, xv, weights.grad() + int64_t(r) * n, n);
          if (bias.requires_grad()) bias.grad()[r] += g;
        }
      }
    });
  }
  return out;
}

// Valid (no padding) cross-correlation. x [C,H,W]; kernels [Co,Ci,k,k].
template <class S>
Tensor<S> conv2d(Tape<S>& tape, const Tensor<S>& x, const Tensor<S>& kernels,
                 int stride) {
  assert(x.shape().size() == 3 && kernels.shape().size() == 4);
  const int ci = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  const int co = kernels.shape()[0], k = kernels.shape()[2];
  assert(kernels.shape()[1] == ci && kernels.shape()[3] == k);
  assert(h >= k && w >= k && stride >= 1);
  const int ho = (h - k) / stride + 1;
  const int wo = (w - k) / stride + 1;

  Tensor<S> out = Tensor<S>::zeros({co, ho, wo});
  for (int oc = 0; oc < co; ++oc)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        S acc = S(0);
        for (int ic = 0; ic < ci; ++ic)
          for (int ky = 0; ky < k; ++ky) {
            const S* row =
                x.data() + (int64_t(ic) * h + oy * stride + ky) * w + ox * stride;
            const S* kr = kernels.data() + ((int64_t(oc) * ci + ic) * k + ky) * k;
            acc += detail::dot_n(kr, row, k);
          }
        out.data()[(int64_t(oc) * ho + oy) * wo + ox] = acc;
      }
  const bool any = x.requires_grad() || kernels.requires_grad();
  if (detail::mark_output(tape, out, any)) {
    tape.record([x, kernels, out, ci, h, w, co, k, ho, wo, stride]() mutable {
      for (int oc = 0; oc < co; ++oc)
        for (int oy = 0; oy < ho; ++oy)
          for (int ox = 0; ox < wo; ++ox) {
            const S g = out.grad()[(int64_t(oc) * ho + oy) * wo + ox];
            if (g == S(0)) continue;
            for (int ic = 0; ic < ci; ++ic)
              for (int ky = 0; ky < k; ++ky) {
                const int64_t row_off =
                    (int64_t(ic) * h + oy * stride + ky) * w + ox * stride;
                const int64_t ker_off = ((int64_t(oc) * ci + ic) * k + ky) * k;
                if (x.requires_grad())
                  detail::axpy_n(g, kernels.data() + ker_off, x.grad() + row_off, k);
                if (kernels.requires_grad())
                  detail::axpy_n(g, x.data() + row_off, kernels.grad() + ker_off, k);
              }
          }
    });
  }
  return out;
}

// Per-channel bias over [C,H,W].
template <class S>
Tensor<S> bias_channels(Tape<S>& tape, const Tensor<S>& x, const Tensor<S>& bias) {
  assert(x.shape().size() == 3 && bias.shape().size() == 1);
  const int c = x.shape()[0];
  const int64_t plane = int64_t(x.shape()[1]) * x.shape()[2];
  assert(bias.shape()[0] == c);
  Tensor<S> out = Tensor<S>::zeros(x.shape());
  for (int ic = 0; ic < c; ++ic)
    for (int64_t i = 0; i < plane; ++i)
      out.data()[ic * plane + i] = x.data()[ic * plane + i] + bias.data()[ic];
  if (detail::mark_output(tape, out, x.requires_grad() || bias.requires_grad())) {
    tape.record([x, bias, out, c, plane]() mutable {
      for (int ic = 0; ic < c; ++ic)
        for (int64_t i = 0; i < plane; ++i) {
          const S g = out.grad()[ic * plane + i];
          if (x.requires_grad()) x.grad()[ic * plane + i] += g;
          if (bias.requires_grad()) bias.grad()[ic] += g;
        }
    });
  }
  return out;
}

template <class S>
Tensor<S> reshape(Tape<S>& tape, const Tensor<S>& x, std::vector<int> shape) {
  assert(Tensor<S>::product(shape) == x.size());
  Tensor<S> out = Tensor<S>::from(std::move(shape),
                                  std::vector<S>(x.data(), x.data() + x.size()));
  if (detail::mark_output(tape, out, x.requires_grad())) {
    tape.record([x, out]() mutable {
      for (int64_t i = 0; i < x.size(); ++i) x.grad()[i] += out.grad()[i];
    });
  }
  return out;
}

// Single fused LSTM cell. One weight matrix over [x; h], gate order
// i, f, g, o. x [n] or [B, n]; h, c [H] or [B, H]; weights [4H, n+H];
// bias [4H]. Backward chains across time for BPTT.
template <class S>
std::pair<Tensor<S>, Tensor<S>> lstm_cell(Tape<S>& tape, const Tensor<S>& x,
                                          const Tensor<S>& h, const Tensor<S>& c,
                                          const Tensor<S>& weights,
                                          const Tensor<S>& bias) {
  const bool batched = x.shape().size() == 2;
  const int batch = batched ? x.shape()[0] : 1;
  const int n = batched ? x.shape()[1] : x.shape()[0];
  const int hn = batched ? h.shape()[1] : h.shape()[0];
  assert(weights.shape()[0] == 4 * hn && weights.shape()[1] == n + hn);
  assert(bias.shape()[0] == 4 * hn);
  assert(c.size() == h.size() && h.size() == int64_t(batch) * hn);

  auto shape_bh = [&](int units) {
    return batched ? std::vector<int>{batch, units} : std::vector<int>{units};
  };
  Tensor<S> h_out = Tensor<S>::zeros(shape_bh(hn));
  Tensor<S> c_out = Tensor<S>::zeros(shape_bh(hn));
  // Saved activations for the backward pass: i, f, g, o per unit.
  Tensor<S> gates = Tensor<S>::zeros({batch, 4 * hn});
  std::vector<S> xh(size_t(n) + hn);

  for (int bi = 0; bi < batch; ++bi) {
    std::copy(x.data() + int64_t(bi) * n, x.data() + int64_t(bi + 1) * n, xh.begin());
    std::copy(h.data() + int64_t(bi) * hn, h.data() + int64_t(bi + 1) * hn,
              xh.begin() + n);
    S* gv = gates.data() + int64_t(bi) * 4 * hn;
    for (int r = 0; r < 4 * hn; ++r)
      gv[r] = detail::dot_n(weights.data() + int64_t(r) * (n + hn), xh.data(), n + hn) +
              bias.data()[r];
    const S* cv = c.data() + int64_t(bi) * hn;
    S* hv = h_out.data() + int64_t(bi) * hn;
    S* cnv = c_out.data() + int64_t(bi) * hn;
    for (int u = 0; u < hn; ++u) {
      const S gi = detail::stable_sigmoid(gv[u]);
      const S gf = detail::stable_sigmoid(gv[hn + u]);
      const S gg = std::tanh(gv[2 * hn + u]);
      const S go = detail::stable_sigmoid(gv[3 * hn + u]);
      gv[u] = gi;
      gv[hn + u] = gf;
      gv[2 * hn + u] = gg;
      gv[3 * hn + u] = go;
      cnv[u] = gf * cv[u] + gi * gg;
      hv[u] = go * std::tanh(cnv[u]);
    }
  }

  const bool any = x.requires_grad() || h.requires_grad() || c.requires_grad() ||
                   weights.requires_grad() || bias.requires_grad();
  if (tape.recording() && any) {
    h_out.set_requires_grad();
    c_out.set_requires_grad();
    tape.record([x, h, c, weights, bias, h_out, c_out, gates, batch, n, hn]() mutable {
      std::vector<S> gz(size_t(4) * hn);
      std::vector<S> xh(size_t(n) + hn);
      std::vector<S> gxh(size_t(n) + hn);
      for (int bi = 0; bi < batch; ++bi) {
        const S* gv = gates.data() + int64_t(bi) * 4 * hn;
        const S* cv = c.data() + int64_t(bi) * hn;
        const S* cnv = c_out.data() + int64_t(bi) * hn;
        const S* gho = h_out.grad() + int64_t(bi) * hn;
        const S* gco = c_out.grad() + int64_t(bi) * hn;
        for (int u = 0; u < hn; ++u) {
          const S gi = gv[u], gf = gv[hn + u], gg = gv[2 * hn + u], go = gv[3 * hn + u];
          const S tc = std::tanh(cnv[u]);
          const S gc_total = gco[u] + gho[u] * go * (S(1) - tc * tc);
          const S d_go = gho[u] * tc;
          const S d_gi = gc_total * gg;
          const S d_gf = gc_total * cv[u];
          const S d_gg = gc_total * gi;
          gz[u] = d_gi * gi * (S(1) - gi);
          gz[hn + u] = d_gf * gf * (S(1) - gf);
          gz[2 * hn + u] = d_gg * (S(1) - gg * gg);
          gz[3 * hn + u] = d_go * go * (S(1) - go);
          if (c.requires_grad()) c.grad()[int64_t(bi) * hn + u] += gc_total * gf;
        }
        std::fill(gxh.begin(), gxh.end(), S(0));
        std::copy(x.data() + int64_t(bi) * n, x.data() + int64_t(bi + 1) * n,
                  xh.begin());
        std::copy(h.data() + int64_t(bi) * hn, h.data() + int64_t(bi + 1) * hn,
                  xh.begin() + n);
        for (int r = 0; r < 4 * hn; ++r) {
          const S g = gz[r];
          if (g == S(0)) continue;
          detail::axpy_n(g, weights.data() + int64_t(r) * (n + hn), gxh.data(),
                         n + hn);
          if (weights.requires_grad())
            detail::axpy_n(g, xh.data(), weights.grad() + int64_t(r) * (n + hn),
                           n + hn);
          if (bias.requires_grad()) bias.grad()[r] += g;
        }
        if (x.requires_grad())
          detail::axpy_n(S(1), gxh.data(), x.grad() + int64_t(bi) * n, n);
        if (h.requires_grad())
          detail::axpy_n(S(1), gxh.data() + n, h.grad() + int64_t(bi) * hn, hn);
      }
    });
  }
  return {h_out, c_out};
}

// Diagonal-Gaussian log density of a fixed sample u under (mu, log_std),
// without any squash Jacobian.
template <class S>
Tensor<S> gaussian_logprob(Tape<S>& tape, const Tensor<S>& mu,
                           const Tensor<S>& log_std, const std::vector<S>& u) {
  const int d = int(mu.size());
  assert(int(log_std.size()) == d && int(u.size()) == d);
  S lp = S(-0.5) * S(d) * S(std::log(2.0 * std::numbers::pi));
  std::vector<S> z(d);
  for (int i = 0; i < d; ++i) {
    const S inv_std = std::exp(-log_std.data()[i]);
    z[i] = (u[i] - mu.data()[i]) * inv_std;
    lp += S(-0.5) * z[i] * z[i] - log_std.data()[i];
  }
  Tensor<S> out = Tensor<S>::scalar(lp);
  const bool any = mu.requires_grad() || log_std.requires_grad();
  if (detail::mark_output(tape, out, any)) {
    tape.record([mu, log_std, out, z, d]() mutable {
      const S g = out.grad()[0];
      for (int i = 0; i < d; ++i) {
        if (mu.requires_grad())
          mu.grad()[i] += g * z[i] * std::exp(-log_std.data()[i]);
        if (log_std.requires_grad())
          log_std.grad()[i] += g * (z[i] * z[i] - S(1));
      }
    });
  }
  return out;
}

// Central-difference check of a scalar-valued function against the tape
// gradient. Returns the max relative error with denominator
// max(|analytic|, |numeric|, 1e-8).
template <class S>
S grad_check(
    const std::function<Tensor<S>(Tape<S>&, std::vector<Tensor<S>>&)>& fn,
    std::vector<Tensor<S>>& inputs, S eps) {
  Tape<S> tape;
  Tensor<S> out = fn(tape, inputs);
  assert(out.size() == 1 && "grad_check needs a scalar-valued function");
  tape.backward(out);

  std::vector<std::vector<S>> analytic;
  for (auto& in : inputs)
    analytic.emplace_back(in.grad(), in.grad() + in.size());

  S max_err = S(0);
  for (size_t t = 0; t < inputs.size(); ++t) {
    for (int64_t i = 0; i < inputs[t].size(); ++i) {
      const S saved = inputs[t].data()[i];
      Tape<S> quiet(false);
      inputs[t].data()[i] = saved + eps;
      const S fp = fn(quiet, inputs).item();
      inputs[t].data()[i] = saved - eps;
      const S fm = fn(quiet, inputs).item();
      inputs[t].data()[i] = saved;
      const S numeric = (fp - fm) / (S(2) * eps);
      const S a = analytic[t][i];
      const S denom = std::max({std::abs(a), std::abs(numeric), S(1e-8)});
      max_err = std::max(max_err, std::abs(a - numeric) / denom);
    }
  }
  return max_err;
}

}  // namespace nav::ad
