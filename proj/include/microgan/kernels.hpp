#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "microgan/parallel.hpp"
#include "microgan/tensor.hpp"

namespace microgan {

namespace detail {

template <typename S>
void check_nchw(const Tensor<S>& t, const char* what) {
  if (t.rank() != 4)
    fail(ErrorKind::Rank, std::string(what) + " must be rank 4 (NCHW), got " +
                              shape_str(t.shape()));
}

// first index y with lo <= y*s + d < hi, clipped to [0, n)
inline int64_t first_tap(int64_t d, int64_t s, int64_t lo) {
  int64_t a = lo - d;
  if (a <= 0) return 0;
  return (a + s - 1) / s;
}

inline int64_t last_tap_excl(int64_t d, int64_t s, int64_t hi, int64_t n) {
  int64_t a = hi - 1 - d;
  if (a < 0) return 0;
  return std::min(n, a / s + 1);
}

}  // namespace detail

// Direct 2-D convolution over NCHW with implicit zero padding. For every
// output cell the in-bounds products accumulate in (ci, dy, dx) order and
// out-of-bounds taps are skipped outright rather than added as zeros, so the
// result is bit-identical to a naive direct summation with the same rule.
template <typename S>
Tensor<S> conv2d(const Tensor<S>& input, const Tensor<S>& weight,
                 const ConvSpec& spec) {
  detail::check_nchw(input, "conv2d input");
  detail::check_nchw(weight, "conv2d weight");
  spec.validate();
  if (spec.transposed)
    fail(ErrorKind::Spec, "conv2d called with a transposed spec");

  const int64_t n_batch = input.dim(0), cin = input.dim(1);
  const int64_t h = input.dim(2), w = input.dim(3);
  if (cin != spec.in_channels || weight.dim(0) != spec.out_channels ||
      weight.dim(1) != spec.in_channels || weight.dim(2) != spec.kh ||
      weight.dim(3) != spec.kw)
    fail(ErrorKind::Shape, "conv2d operands " + shape_str(input.shape()) +
                               " x " + shape_str(weight.shape()) +
                               " do not match the spec");

  const int64_t hout = spec.out_h(h), wout = spec.out_w(w);
  if (hout < 1 || wout < 1)
    fail(ErrorKind::Spec, "conv2d output would be empty for input " +
                              shape_str(input.shape()));

  Tensor<S> out({n_batch, spec.out_channels, hout, wout});
  const int64_t in_plane = h * w, out_plane = hout * wout;
  const int64_t k_plane = spec.kh * spec.kw;
  const S* in_base = input.data();
  const S* w_base = weight.data();
  S* out_base = out.data();

  parallel_for(n_batch, [&](int64_t n) {
    const S* in_n = in_base + n * cin * in_plane;
    S* out_n = out_base + n * spec.out_channels * out_plane;
    for (int64_t co = 0; co < spec.out_channels; ++co) {
      S* out_c = out_n + co * out_plane;
      for (int64_t ci = 0; ci < cin; ++ci) {
        const S* in_c = in_n + ci * in_plane;
        const S* w_c = w_base + (co * cin + ci) * k_plane;
        for (int64_t dy = 0; dy < spec.kh; ++dy) {
          int64_t y0 = detail::first_tap(dy - spec.ph, spec.sh, 0);
          int64_t y1 = detail::last_tap_excl(dy - spec.ph, spec.sh, h, hout);
          for (int64_t dx = 0; dx < spec.kw; ++dx) {
            const S wv = w_c[dy * spec.kw + dx];
            const int64_t off = dx - spec.pw;
            int64_t x0 = detail::first_tap(off, spec.sw, 0);
            int64_t x1 = detail::last_tap_excl(off, spec.sw, w, wout);
            for (int64_t y = y0; y < y1; ++y) {
              const S* in_row = in_c + (y * spec.sh + dy - spec.ph) * w;
              S* out_row = out_c + y * wout;
              for (int64_t x = x0; x < x1; ++x)
                out_row[x] += wv * in_row[x * spec.sw + off];
            }
          }
        }
      }
    }
  });
  return out;
}

// Transposed convolution as scatter-add: every input cell distributes
// input * weight patches onto the output, contributions landing in
// (ci, y, x) source order; writes falling outside the output rectangle are
// discarded. out_h/out_w are explicit because the inverse of the direct
// formula is not unique when the direct input size was not stride-aligned.
template <typename S>
Tensor<S> conv_transpose2d_to(const Tensor<S>& input, const Tensor<S>& weight,
                              const ConvSpec& spec, int64_t out_h,
                              int64_t out_w) {
  detail::check_nchw(input, "conv_transpose2d input");
  detail::check_nchw(weight, "conv_transpose2d weight");
  spec.validate();

  const int64_t n_batch = input.dim(0), cin = input.dim(1);
  const int64_t h = input.dim(2), w = input.dim(3);
  const int64_t cout = weight.dim(1);
  if (weight.dim(0) != cin || weight.dim(2) != spec.kh ||
      weight.dim(3) != spec.kw)
    fail(ErrorKind::Shape, "conv_transpose2d operands " +
                               shape_str(input.shape()) + " x " +
                               shape_str(weight.shape()) +
                               " do not match the spec");
  if (out_h < 1 || out_w < 1)
    fail(ErrorKind::Spec, "conv_transpose2d output would be empty for input " +
                              shape_str(input.shape()));

  Tensor<S> out({n_batch, cout, out_h, out_w});
  const int64_t in_plane = h * w, out_plane = out_h * out_w;
  const int64_t k_plane = spec.kh * spec.kw;
  const S* in_base = input.data();
  const S* w_base = weight.data();
  S* out_base = out.data();

  parallel_for(n_batch, [&](int64_t n) {
    const S* in_n = in_base + n * cin * in_plane;
    S* out_n = out_base + n * cout * out_plane;
    for (int64_t ci = 0; ci < cin; ++ci) {
      const S* in_c = in_n + ci * in_plane;
      const S* w_ci = w_base + ci * cout * k_plane;
      for (int64_t y = 0; y < h; ++y) {
        const S* in_row = in_c + y * w;
        for (int64_t co = 0; co < cout; ++co) {
          S* out_c = out_n + co * out_plane;
          const S* w_c = w_ci + co * k_plane;
          for (int64_t dy = 0; dy < spec.kh; ++dy) {
            int64_t oy = y * spec.sh + dy - spec.ph;
            if (oy < 0 || oy >= out_h) continue;
            S* out_row = out_c + oy * out_w;
            const S* w_row = w_c + dy * spec.kw;
            for (int64_t x = 0; x < w; ++x) {
              const S v = in_row[x];
              int64_t xs = x * spec.sw - spec.pw;
              for (int64_t dx = 0; dx < spec.kw; ++dx) {
                int64_t ox = xs + dx;
                if (ox < 0 || ox >= out_w) continue;
                out_row[ox] += v * w_row[dx];
              }
            }
          }
        }
      }
    }
  });
  return out;
}

template <typename S>
Tensor<S> conv_transpose2d(const Tensor<S>& input, const Tensor<S>& weight,
                           const ConvSpec& spec) {
  if (!spec.transposed)
    fail(ErrorKind::Spec, "conv_transpose2d called with a direct spec");
  if (input.rank() != 4)
    fail(ErrorKind::Rank, "conv_transpose2d input must be rank 4 (NCHW)");
  if (input.dim(1) != spec.in_channels ||
      (weight.rank() == 4 && weight.dim(1) != spec.out_channels))
    fail(ErrorKind::Shape, "conv_transpose2d operands " +
                               shape_str(input.shape()) + " x " +
                               shape_str(weight.shape()) +
                               " do not match the spec");
  return conv_transpose2d_to(input, weight, spec, spec.out_h(input.dim(2)),
                             spec.out_w(input.dim(3)));
}

// dL/dweight for conv2d: dw[co,ci,dy,dx] = sum over (n,y,x) of
// grad[n,co,y,x] * input[n,ci,y*sh+dy-ph,x*sw+dx-pw], skipping padded taps.
template <typename S>
Tensor<S> conv2d_weight_grad(const Tensor<S>& input, const Tensor<S>& grad_out,
                             const ConvSpec& spec) {
  const int64_t n_batch = input.dim(0), cin = input.dim(1);
  const int64_t h = input.dim(2), w = input.dim(3);
  const int64_t cout = grad_out.dim(1);
  const int64_t hout = grad_out.dim(2), wout = grad_out.dim(3);

  Tensor<S> dw({cout, cin, spec.kh, spec.kw});
  const int64_t in_plane = h * w, out_plane = hout * wout;
  const S* in_base = input.data();
  const S* g_base = grad_out.data();
  S* dw_base = dw.data();

  parallel_for(cout, [&](int64_t co) {
    for (int64_t ci = 0; ci < cin; ++ci) {
      S* dw_c = dw_base + (co * cin + ci) * spec.kh * spec.kw;
      for (int64_t dy = 0; dy < spec.kh; ++dy) {
        int64_t y0 = detail::first_tap(dy - spec.ph, spec.sh, 0);
        int64_t y1 = detail::last_tap_excl(dy - spec.ph, spec.sh, h, hout);
        for (int64_t dx = 0; dx < spec.kw; ++dx) {
          const int64_t off = dx - spec.pw;
          int64_t x0 = detail::first_tap(off, spec.sw, 0);
          int64_t x1 = detail::last_tap_excl(off, spec.sw, w, wout);
          S acc = S(0);
          for (int64_t n = 0; n < n_batch; ++n) {
            const S* in_c = in_base + (n * cin + ci) * in_plane;
            const S* g_c = g_base + (n * cout + co) * out_plane;
            for (int64_t y = y0; y < y1; ++y) {
              const S* in_row = in_c + (y * spec.sh + dy - spec.ph) * w;
              const S* g_row = g_c + y * wout;
              for (int64_t x = x0; x < x1; ++x)
                acc += g_row[x] * in_row[x * spec.sw + off];
            }
          }
          dw_c[dy * spec.kw + dx] = acc;
        }
      }
    }
  });
  return dw;
}

// dL/dweight for conv_transpose2d: dw[ci,co,dy,dx] = sum over (n,y,x) of
// input[n,ci,y,x] * grad[n,co,y*sh+dy-ph,x*sw+dx-pw], discarding taps that
// fell outside the output.
template <typename S>
Tensor<S> conv_transpose2d_weight_grad(const Tensor<S>& input,
                                       const Tensor<S>& grad_out,
                                       const ConvSpec& spec) {
  const int64_t n_batch = input.dim(0), cin = input.dim(1);
  const int64_t h = input.dim(2), w = input.dim(3);
  const int64_t cout = grad_out.dim(1);
  const int64_t hout = grad_out.dim(2), wout = grad_out.dim(3);

  Tensor<S> dw({cin, cout, spec.kh, spec.kw});
  const int64_t in_plane = h * w, out_plane = hout * wout;
  const S* in_base = input.data();
  const S* g_base = grad_out.data();
  S* dw_base = dw.data();

  parallel_for(cin, [&](int64_t ci) {
    for (int64_t co = 0; co < cout; ++co) {
      S* dw_c = dw_base + (ci * cout + co) * spec.kh * spec.kw;
      for (int64_t dy = 0; dy < spec.kh; ++dy) {
        int64_t y0 = detail::first_tap(dy - spec.ph, spec.sh, 0);
        int64_t y1 = detail::last_tap_excl(dy - spec.ph, spec.sh, hout, h);
        for (int64_t dx = 0; dx < spec.kw; ++dx) {
          const int64_t off = dx - spec.pw;
          int64_t x0 = detail::first_tap(off, spec.sw, 0);
          int64_t x1 = detail::last_tap_excl(off, spec.sw, wout, w);
          S acc = S(0);
          for (int64_t n = 0; n < n_batch; ++n) {
            const S* in_c = in_base + (n * cin + ci) * in_plane;
            const S* g_c = g_base + (n * cout + co) * out_plane;
            for (int64_t y = y0; y < y1; ++y) {
              const S* in_row = in_c + y * w;
              const S* g_row = g_c + (y * spec.sh + dy - spec.ph) * wout;
              for (int64_t x = x0; x < x1; ++x)
                acc += in_row[x] * g_row[x * spec.sw + off];
            }
          }
          dw_c[dy * spec.kw + dx] = acc;
        }
      }
    }
  });
  return dw;
}

enum class BnMode { Train, Eval };

// Values the backward pass needs; filled only when a tape asks for them.
template <typename S>
struct BnSaved {
  Tensor<S> x_hat;         // normalized input under the stats actually used
  std::vector<S> inv_std;  // per channel
};

// Per-channel batch normalization over NCHW. Train mode normalizes with the
// biased batch statistics and folds them into the running buffers as
// running = (1 - momentum) * running + momentum * batch; eval mode uses the
// running buffers untouched. Statistics accumulate over (n, y, x) in index
// order within each channel.
template <typename S>
Tensor<S> batchnorm2d(const Tensor<S>& input, const Tensor<S>& gamma,
                      const Tensor<S>& beta, Tensor<S>& running_mean,
                      Tensor<S>& running_var, BnMode mode, S eps, S momentum,
                      BnSaved<S>* saved = nullptr) {
  detail::check_nchw(input, "batchnorm2d input");
  const int64_t n_batch = input.dim(0), c = input.dim(1);
  const int64_t h = input.dim(2), w = input.dim(3);
  auto check_vec = [&](const Tensor<S>& t, const char* what) {
    if (t.rank() != 1 || t.dim(0) != c)
      fail(ErrorKind::Shape, std::string("batchnorm2d ") + what +
                                 " must have shape (" + std::to_string(c) +
                                 "), got " + shape_str(t.shape()));
  };
  check_vec(gamma, "gamma");
  check_vec(beta, "beta");
  check_vec(running_mean, "running_mean");
  check_vec(running_var, "running_var");
  if (!(eps > S(0))) fail(ErrorKind::Spec, "batchnorm2d eps must be > 0");
  if (momentum < S(0) || momentum > S(1))
    fail(ErrorKind::Spec, "batchnorm2d momentum must lie in [0, 1]");

  const int64_t m = n_batch * h * w;
  if (mode == BnMode::Train && m < 2)
    fail(ErrorKind::Statistics,
         "batchnorm2d train mode needs at least 2 values per channel, got " +
             std::to_string(m));

  Tensor<S> out(input.shape());
  if (saved) {
    saved->x_hat = Tensor<S>(input.shape());
    saved->inv_std.assign(static_cast<size_t>(c), S(0));
  }

  const int64_t plane = h * w;
  const S* in_base = input.data();
  S* out_base = out.data();

  parallel_for(c, [&](int64_t ch) {
    S mean, inv;
    if (mode == BnMode::Train) {
      S sum = S(0);
      for (int64_t n = 0; n < n_batch; ++n) {
        const S* p = in_base + (n * c + ch) * plane;
        for (int64_t i = 0; i < plane; ++i) sum += p[i];
      }
      mean = sum / static_cast<S>(m);
      S sq = S(0);
      for (int64_t n = 0; n < n_batch; ++n) {
        const S* p = in_base + (n * c + ch) * plane;
        for (int64_t i = 0; i < plane; ++i) {
          S d = p[i] - mean;
          sq += d * d;
        }
      }
      S var = sq / static_cast<S>(m);
      inv = S(1) / std::sqrt(var + eps);
      running_mean[ch] = (S(1) - momentum) * running_mean[ch] + momentum * mean;
      running_var[ch] = (S(1) - momentum) * running_var[ch] + momentum * var;
    } else {
      mean = running_mean[ch];
      inv = S(1) / std::sqrt(running_var[ch] + eps);
    }

    const S g = gamma[ch], b = beta[ch];
    S* xh_base = saved ? saved->x_hat.data() : nullptr;
    for (int64_t n = 0; n < n_batch; ++n) {
      const S* p = in_base + (n * c + ch) * plane;
      S* q = out_base + (n * c + ch) * plane;
      S* xh = xh_base ? xh_base + (n * c + ch) * plane : nullptr;
      for (int64_t i = 0; i < plane; ++i) {
        S norm = (p[i] - mean) * inv;
        if (xh) xh[i] = norm;
        q[i] = g * norm + b;
      }
    }
    if (saved) saved->inv_std[static_cast<size_t>(ch)] = inv;
  });
  return out;
}

enum class Act { Relu, LeakyRelu, Tanh, Sigmoid };

inline const char* act_name(Act a) {
  switch (a) {
    case Act::Relu: return "relu";
    case Act::LeakyRelu: return "leaky_relu";
    case Act::Tanh: return "tanh";
    case Act::Sigmoid: return "sigmoid";
  }
  return "?";
}

// Elementwise activations; slope is meaningful only for leaky_relu and must
// be left at zero otherwise.
template <typename S>
Tensor<S> activation(const Tensor<S>& input, Act kind, S slope = S(0)) {
  if (kind != Act::LeakyRelu && slope != S(0))
    fail(ErrorKind::Spec,
         std::string("slope is only meaningful for leaky_relu, not ") +
             act_name(kind));
  Tensor<S> out(input.shape());
  const S* p = input.data();
  S* q = out.data();
  const int64_t n = input.numel();
  switch (kind) {
    case Act::Relu:
      for (int64_t i = 0; i < n; ++i) q[i] = p[i] > S(0) ? p[i] : S(0);
      break;
    case Act::LeakyRelu:
      for (int64_t i = 0; i < n; ++i) q[i] = p[i] > S(0) ? p[i] : slope * p[i];
      break;
    case Act::Tanh:
      for (int64_t i = 0; i < n; ++i) q[i] = std::tanh(p[i]);
      break;
    case Act::Sigmoid:
      for (int64_t i = 0; i < n; ++i) q[i] = S(1) / (S(1) + std::exp(-p[i]));
      break;
  }
  return out;
}

}  // namespace microgan
