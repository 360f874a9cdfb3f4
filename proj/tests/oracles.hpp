#pragma once

// Independent reference implementations for the numeric contracts. These are
// deliberately written in the plainest possible style (at4 indexing, one
// accumulator per output cell) so that agreement with the production kernels
// is evidence, not tautology. The accumulation order per output cell matches
// the documented kernel contracts, which is what makes bitwise comparison
// meaningful.

#include <cmath>
#include <cstring>

#include "microgan/adam.hpp"
#include "microgan/rng.hpp"
#include "microgan/tensor.hpp"

namespace microgan::oracle {

// Direct convolution by definition: for every output cell, sum input taps in
// (in-channel, kernel-row, kernel-col) order, skipping taps that fall outside
// the input entirely (no multiply-by-zero terms).
template <typename S>
Tensor<S> conv2d(const Tensor<S>& in, const Tensor<S>& w,
                 const ConvSpec& spec) {
  const int64_t n = in.dim(0), ih = in.dim(2), iw = in.dim(3);
  const int64_t oh = spec.out_h(ih), ow = spec.out_w(iw);
  Tensor<S> out({n, spec.out_channels, oh, ow});
  for (int64_t b = 0; b < n; ++b)
    for (int64_t co = 0; co < spec.out_channels; ++co)
      for (int64_t y = 0; y < oh; ++y)
        for (int64_t x = 0; x < ow; ++x) {
          S acc = S(0);
          for (int64_t ci = 0; ci < spec.in_channels; ++ci)
            for (int64_t dy = 0; dy < spec.kh; ++dy)
              for (int64_t dx = 0; dx < spec.kw; ++dx) {
                const int64_t iy = y * spec.sh - spec.ph + dy;
                const int64_t ix = x * spec.sw - spec.pw + dx;
                if (iy < 0 || iy >= ih || ix < 0 || ix >= iw) continue;
                acc += in.at4(b, ci, iy, ix) * w.at4(co, ci, dy, dx);
              }
          out.at4(b, co, y, x) = acc;
        }
  return out;
}

// Transposed convolution as a gather: an output cell (oy, ox) receives from
// source cell (y, x) through kernel tap (oy - (y*s - p), ox - (x*s - p)) when
// that tap exists. Visiting sources in (in-channel, row, col) order
// reproduces the scatter kernel's per-cell accumulation order exactly.
template <typename S>
Tensor<S> conv_transpose2d(const Tensor<S>& in, const Tensor<S>& w,
                           const ConvSpec& spec, int64_t oh, int64_t ow) {
  const int64_t n = in.dim(0), ih = in.dim(2), iw = in.dim(3);
  Tensor<S> out({n, spec.out_channels, oh, ow});
  for (int64_t b = 0; b < n; ++b)
    for (int64_t co = 0; co < spec.out_channels; ++co)
      for (int64_t oy = 0; oy < oh; ++oy)
        for (int64_t ox = 0; ox < ow; ++ox) {
          S acc = S(0);
          for (int64_t ci = 0; ci < spec.in_channels; ++ci)
            for (int64_t y = 0; y < ih; ++y)
              for (int64_t x = 0; x < iw; ++x) {
                const int64_t dy = oy - (y * spec.sh - spec.ph);
                const int64_t dx = ox - (x * spec.sw - spec.pw);
                if (dy < 0 || dy >= spec.kh || dx < 0 || dx >= spec.kw)
                  continue;
                acc += in.at4(b, ci, y, x) * w.at4(ci, co, dy, dx);
              }
          out.at4(b, co, oy, ox) = acc;
        }
  return out;
}

template <typename S>
Tensor<S> conv_transpose2d(const Tensor<S>& in, const Tensor<S>& w,
                           const ConvSpec& spec) {
  return conv_transpose2d(in, w, spec, spec.out_h(in.dim(2)),
                          spec.out_w(in.dim(3)));
}

// One Adam-updated scalar, straight from the update equations.
template <typename S>
struct AdamScalar {
  S m = S(0);
  S v = S(0);
  int64_t t = 0;

  void step(S& w, S g, const AdamConfig& cfg) {
    ++t;
    const S b1 = static_cast<S>(cfg.beta1);
    const S b2 = static_cast<S>(cfg.beta2);
    m = b1 * m + (S(1) - b1) * g;
    v = b2 * v + (S(1) - b2) * g * g;
    const S mhat = m / (S(1) - static_cast<S>(std::pow(cfg.beta1, t)));
    const S vhat = v / (S(1) - static_cast<S>(std::pow(cfg.beta2, t)));
    w -= static_cast<S>(cfg.lr) * mhat /
         (std::sqrt(vhat) + static_cast<S>(cfg.eps));
  }
};

template <typename S>
bool bits_equal(const Tensor<S>& a, const Tensor<S>& b) {
  if (!a.same_shape(b)) return false;
  return std::memcmp(a.data(), b.data(),
                     sizeof(S) * static_cast<size_t>(a.numel())) == 0;
}

template <typename S>
double max_abs_diff(const Tensor<S>& a, const Tensor<S>& b) {
  double worst = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i)
    worst = std::max(worst, std::abs(static_cast<double>(a[i]) -
                                     static_cast<double>(b[i])));
  return worst;
}

template <typename S>
Tensor<S> randn(const Shape& shape, Rng& rng, double scale = 1.0) {
  Tensor<S> t(shape);
  for (int64_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<S>(scale * rng.normal());
  return t;
}

template <typename S>
Tensor<S> rand_in(const Shape& shape, Rng& rng, double lo, double hi) {
  Tensor<S> t(shape);
  for (int64_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<S>(rng.uniform_in(lo, hi));
  return t;
}

}  // namespace microgan::oracle
