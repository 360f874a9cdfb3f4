#pragma once

#include <algorithm>
#include <cstring>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "microgan/autograd.hpp"
#include "microgan/rng.hpp"

namespace microgan {

struct GradCheckEntry {
  std::string param;
  double max_rel_err = 0.0;
  int64_t coords_checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;

  double worst() const {
    double w = 0.0;
    for (const auto& e : entries) w = std::max(w, e.max_rel_err);
    return w;
  }

  bool all_below(double tol) const { return worst() < tol; }
};

// Central-difference comparison of an analytic gradient. loss_fn must be a
// pure function of the parameter map; it is evaluated twice up front and a
// bitwise mismatch aborts with a determinism error, because a noisy forward
// makes the finite differences meaningless. Tensors larger than max_coords
// are probed at max_coords distinct coordinates drawn from seed.
template <typename S>
GradCheckReport grad_check(
    const std::function<S(const NamedTensors<S>&)>& loss_fn,
    const std::function<NamedTensors<S>(const NamedTensors<S>&)>& grad_fn,
    const NamedTensors<S>& params, double h, int64_t max_coords,
    uint64_t seed) {
  if (!(h > 0)) fail(ErrorKind::Spec, "grad_check step h must be > 0");
  if (max_coords < 1)
    fail(ErrorKind::Spec, "grad_check needs max_coords >= 1");

  const S l1 = loss_fn(params);
  const S l2 = loss_fn(params);
  if (std::memcmp(&l1, &l2, sizeof(S)) != 0)
    fail(ErrorKind::Determinism,
         "loss function returned different bits on repeated evaluation");

  NamedTensors<S> analytic = grad_fn(params);
  NamedTensors<S> work = params;
  Rng rng(splitmix64(seed));
  const S step = static_cast<S>(h);

  GradCheckReport report;
  for (const auto& [name, p] : params) {
    auto it = analytic.find(name);
    if (it == analytic.end())
      fail(ErrorKind::Spec, "analytic gradients missing parameter " + name);
    const Tensor<S>& a = it->second;
    if (!a.same_shape(p))
      fail(ErrorKind::Shape, "gradient shape mismatch for " + name);

    std::vector<int64_t> coords;
    if (p.numel() <= max_coords) {
      coords.resize(static_cast<size_t>(p.numel()));
      for (int64_t i = 0; i < p.numel(); ++i) coords[static_cast<size_t>(i)] = i;
    } else {
      std::set<int64_t> picked;
      while (static_cast<int64_t>(picked.size()) < max_coords)
        picked.insert(rng.below(p.numel()));
      coords.assign(picked.begin(), picked.end());
    }

    Tensor<S>& wp = work.at(name);
    GradCheckEntry entry{name, 0.0, static_cast<int64_t>(coords.size())};
    for (int64_t c : coords) {
      const S saved = wp[c];
      wp[c] = saved + step;
      const S fp = loss_fn(work);
      wp[c] = saved - step;
      const S fm = loss_fn(work);
      wp[c] = saved;

      const double numeric = (static_cast<double>(fp) - static_cast<double>(fm)) /
                             (2.0 * h);
      const double exact = static_cast<double>(a[c]);
      const double denom =
          std::max({std::abs(numeric), std::abs(exact), 1e-4});
      entry.max_rel_err =
          std::max(entry.max_rel_err, std::abs(numeric - exact) / denom);
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace microgan
