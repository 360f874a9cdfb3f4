#pragma once

#include <cmath>
#include <map>
#include <string>

#include "microgan/autograd.hpp"

namespace microgan {

struct AdamConfig {
  double lr = 0.0005;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    if (!(lr > 0) || !(lr < 1))
      fail(ErrorKind::Config, "adam lr must lie in (0, 1)");
    if (!(beta1 >= 0) || !(beta1 < 1) || !(beta2 >= 0) || !(beta2 < 1))
      fail(ErrorKind::Config, "adam betas must lie in [0, 1)");
    if (!(eps > 0)) fail(ErrorKind::Config, "adam eps must be > 0");
  }
};

// Per-optimizer state: shared step count plus first/second moments keyed by
// parameter name. Moments appear on first use, zero-initialized.
template <typename S>
struct AdamState {
  AdamConfig cfg;
  int64_t t = 0;
  NamedTensors<S> m, v;
};

// One Adam update with bias correction. params maps names to the live
// parameter tensors; every gradient must be finite, and a non-finite one
// aborts naming the parameter before anything is touched.
template <typename S>
void adam_step(const std::map<std::string, Tensor<S>*>& params,
               const NamedTensors<S>& grads, AdamState<S>& state) {
  state.cfg.validate();
  for (const auto& [name, p] : params) {
    auto g = grads.find(name);
    if (g == grads.end())
      fail(ErrorKind::Spec, "adam_step missing gradient for " + name);
    if (!g->second.same_shape(*p))
      fail(ErrorKind::Shape, "adam_step gradient shape mismatch for " + name);
    if (!g->second.all_finite())
      fail(ErrorKind::Numeric, "non-finite gradient for parameter " + name);
  }

  state.t += 1;
  const S b1 = static_cast<S>(state.cfg.beta1);
  const S b2 = static_cast<S>(state.cfg.beta2);
  const S lr = static_cast<S>(state.cfg.lr);
  const S eps = static_cast<S>(state.cfg.eps);
  const S corr1 =
      S(1) - static_cast<S>(std::pow(state.cfg.beta1, static_cast<double>(state.t)));
  const S corr2 =
      S(1) - static_cast<S>(std::pow(state.cfg.beta2, static_cast<double>(state.t)));

  for (const auto& [name, p] : params) {
    const Tensor<S>& g = grads.at(name);
    auto mi = state.m.find(name);
    if (mi == state.m.end()) {
      mi = state.m.emplace(name, Tensor<S>::zeros(p->shape())).first;
      state.v.emplace(name, Tensor<S>::zeros(p->shape()));
    }
    Tensor<S>& m = mi->second;
    Tensor<S>& v = state.v.at(name);
    Tensor<S>& w = *p;
    for (int64_t i = 0; i < w.numel(); ++i) {
      m[i] = b1 * m[i] + (S(1) - b1) * g[i];
      v[i] = b2 * v[i] + (S(1) - b2) * g[i] * g[i];
      const S mhat = m[i] / corr1;
      const S vhat = v[i] / corr2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace microgan
