#pragma once

#include <cmath>
#include <string>

#include "microgan/autograd.hpp"
#include "microgan/rng.hpp"

namespace microgan {

// Floor for log arguments: below any probability a 32-bit sigmoid can emit
// except exact 0/1, so |log| stays <= ~27.63 however saturated the
// discriminator gets.
template <typename S>
inline constexpr S kLogClampFloor = S(1e-12);

enum class GenLossVariant { Minimax, NonSaturating };

namespace detail {

template <typename S>
void check_probabilities(const Tensor<S>& t, const char* what) {
  for (int64_t i = 0; i < t.numel(); ++i)
    if (!(t[i] >= S(0) && t[i] <= S(1)))
      fail(ErrorKind::Domain, std::string(what) +
                                  " must lie in [0, 1], found " +
                                  std::to_string(static_cast<double>(t[i])));
}

template <typename S>
S mean_log_clamped(const Tensor<S>& t, bool one_minus) {
  S sum = S(0);
  for (int64_t i = 0; i < t.numel(); ++i) {
    S v = one_minus ? S(1) - t[i] : t[i];
    sum += std::log(v > kLogClampFloor<S> ? v : kLogClampFloor<S>);
  }
  return sum / static_cast<S>(t.numel());
}

}  // namespace detail

// The two-player value V(D, G) = E[log D(x)] + E[log(1 - D(G(z)))],
// estimated over one batch of each. Zero only in degenerate corners; a
// discriminator outputting 1/2 everywhere gives -2 log 2.
template <typename S>
S gan_value(const Tensor<S>& d_real, const Tensor<S>& d_fake) {
  detail::check_probabilities(d_real, "d_real");
  detail::check_probabilities(d_fake, "d_fake");
  return detail::mean_log_clamped(d_real, false) +
         detail::mean_log_clamped(d_fake, true);
}

// D ascends V, so its loss is the exact negation.
template <typename S>
S discriminator_loss(const Tensor<S>& d_real, const Tensor<S>& d_fake) {
  return -gan_value(d_real, d_fake);
}

// minimax: G descends its V term directly. non_saturating: the standard
// -E[log D(G(z))] surrogate with the same fixed points but live gradients
// when D wins early.
template <typename S>
S generator_loss(const Tensor<S>& d_fake, GenLossVariant variant) {
  detail::check_probabilities(d_fake, "d_fake");
  if (variant == GenLossVariant::Minimax)
    return detail::mean_log_clamped(d_fake, true);
  return -detail::mean_log_clamped(d_fake, false);
}

// Same losses as differentiable tape expressions. 1 - p is written as the
// affine map -1 * p + 1 so both variants reuse the same backward rules.
template <typename S>
typename Tape<S>::ValueId discriminator_loss_node(
    Tape<S>& tape, typename Tape<S>::ValueId d_real,
    typename Tape<S>::ValueId d_fake) {
  auto real_term = tape.mean_all(tape.log_clamped(d_real, kLogClampFloor<S>));
  auto fake_term = tape.mean_all(tape.log_clamped(
      tape.affine(d_fake, S(-1), S(1)), kLogClampFloor<S>));
  return tape.affine(tape.add(real_term, fake_term), S(-1), S(0));
}

template <typename S>
typename Tape<S>::ValueId generator_loss_node(Tape<S>& tape,
                                              typename Tape<S>::ValueId d_fake,
                                              GenLossVariant variant) {
  if (variant == GenLossVariant::Minimax)
    return tape.mean_all(tape.log_clamped(tape.affine(d_fake, S(-1), S(1)),
                                          kLogClampFloor<S>));
  return tape.affine(
      tape.mean_all(tape.log_clamped(d_fake, kLogClampFloor<S>)), S(-1),
      S(0));
}

struct Accuracy {
  double real = 0.0;      // fraction of real samples with D > 1/2
  double fake = 0.0;      // fraction of fake samples with D <= 1/2
  double combined = 0.0;  // over both batches together
};

// Threshold classification at 1/2; a D sitting exactly on the threshold
// calls the sample fake.
template <typename S>
Accuracy d_accuracy(const Tensor<S>& d_real, const Tensor<S>& d_fake) {
  detail::check_probabilities(d_real, "d_real");
  detail::check_probabilities(d_fake, "d_fake");
  int64_t right_real = 0, right_fake = 0;
  for (int64_t i = 0; i < d_real.numel(); ++i)
    if (d_real[i] > S(0.5)) ++right_real;
  for (int64_t i = 0; i < d_fake.numel(); ++i)
    if (!(d_fake[i] > S(0.5))) ++right_fake;
  Accuracy acc;
  acc.real = static_cast<double>(right_real) /
             static_cast<double>(d_real.numel());
  acc.fake = static_cast<double>(right_fake) /
             static_cast<double>(d_fake.numel());
  acc.combined = static_cast<double>(right_real + right_fake) /
                 static_cast<double>(d_real.numel() + d_fake.numel());
  return acc;
}

// batch x latent_dim x 1 x 1 of standard normals, drawn in index order
template <typename S>
Tensor<S> sample_latent(int64_t batch, int64_t latent_dim, Rng& rng) {
  if (batch < 1 || latent_dim < 1)
    fail(ErrorKind::Spec, "sample_latent needs batch >= 1 and latent_dim >= 1");
  Tensor<S> z({batch, latent_dim, 1, 1});
  for (int64_t i = 0; i < z.numel(); ++i)
    z[i] = static_cast<S>(rng.normal());
  return z;
}

}  // namespace microgan
