#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <vector>

#include "doctest.h"
#include "microgan/kernels.hpp"
#include "microgan/tensor.hpp"
#include "oracles.hpp"
#include "testing.hpp"

using namespace microgan;
using testing::error_message;

TEST_CASE("tensor shape, strides and storage") {
  Tensor<float> t({2, 3, 4, 5});
  CHECK(t.rank() == 4);
  CHECK(t.numel() == 120);
  CHECK(t.strides() == std::vector<int64_t>{60, 20, 5, 1});
  CHECK(t.dim(3) == 5);

  t.at4(1, 2, 3, 4) = 7.0f;
  CHECK(t[119] == 7.0f);
  t.fill(1.5f);
  CHECK(t[0] == 1.5f);
  CHECK(t.all_finite());
  t[3] = std::numeric_limits<float>::infinity();
  CHECK_FALSE(t.all_finite());

  Tensor<float> from_buf({2, 2}, std::vector<float>{1, 2, 3, 4});
  CHECK(from_buf[1] == 2.0f);
  CHECK(from_buf[3] == 4.0f);

  Tensor<double> d = from_buf.cast<double>();
  CHECK(d[2] == 3.0);
  CHECK(d.shape() == Shape{2, 2});

  Tensor<float> undef;
  CHECK_FALSE(undef.defined());
}

TEST_CASE("tensor construction rejects bad shapes and buffers") {
  error_message([] { Tensor<float> t(Shape{}); }, ErrorKind::Size);
  error_message([] { Tensor<float> t({2, 0, 3}); }, ErrorKind::Size);
  error_message([] { Tensor<float> t({-1}); }, ErrorKind::Size);
  auto msg = error_message(
      [] { Tensor<float> t({2, 3}, std::vector<float>{1, 2}); },
      ErrorKind::Size);
  CHECK(msg.find("(2, 3)") != std::string::npos);
}

TEST_CASE("conv spec geometry") {
  ConvSpec c = ConvSpec::conv(3, 8, 3, 2, 1);
  CHECK_FALSE(c.transposed);
  CHECK(c.out_h(5) == 3);
  CHECK(c.out_h(4) == 2);
  CHECK(c.out_extent(1, 5, 1, 0) == 0);  // kernel larger than padded input

  ConvSpec t = ConvSpec::conv_transpose(8, 3, 4, 2, 1);
  CHECK(t.transposed);
  CHECK(t.out_h(3) == 6);
  CHECK(t.out_h(4) == 8);

  ConvSpec t0 = ConvSpec::conv_transpose(1000, 512, 4, 1, 0);
  CHECK(t0.out_h(1) == 4);

  error_message([] { ConvSpec::conv(0, 4, 3, 1, 0).validate(); },
                ErrorKind::Spec);
  error_message([] { ConvSpec::conv(3, 4, 0, 1, 0).validate(); },
                ErrorKind::Spec);
  error_message([] { ConvSpec::conv(3, 4, 3, 0, 0).validate(); },
                ErrorKind::Spec);
  error_message([] { ConvSpec::conv(3, 4, 3, 1, -1).validate(); },
                ErrorKind::Spec);
}

TEST_CASE("conv2d matches hand-computed values") {
  // 2x2 image of 1..4 under an all-ones 2x2 kernel collapses to their sum
  Tensor<float> x({1, 1, 2, 2}, std::vector<float>{1, 2, 3, 4});
  Tensor<float> w({1, 1, 2, 2}, std::vector<float>{1, 1, 1, 1});
  Tensor<float> y = conv2d(x, w, ConvSpec::conv(1, 1, 2, 1, 0));
  CHECK(y.shape() == Shape{1, 1, 1, 1});
  CHECK(y[0] == 10.0f);

  // 1x1 unit kernel is the identity
  Tensor<float> eye({1, 1, 1, 1}, std::vector<float>{1});
  Tensor<float> same = conv2d(x, eye, ConvSpec::conv(1, 1, 1, 1, 0));
  CHECK(oracle::bits_equal(same, x));

  // a delta at the north-west tap of a padded 3x3 kernel shifts the image
  // one down and one right
  Tensor<float> delta({1, 1, 3, 3});
  delta.at4(0, 0, 0, 0) = 1.0f;
  Tensor<float> shifted = conv2d(x, delta, ConvSpec::conv(1, 1, 3, 1, 1));
  CHECK(shifted.at4(0, 0, 0, 0) == 0.0f);
  CHECK(shifted.at4(0, 0, 1, 1) == 1.0f);
  CHECK(shifted.at4(0, 0, 0, 1) == 0.0f);
  CHECK(shifted.at4(0, 0, 1, 0) == 0.0f);

  // two input channels accumulate, two output channels stay independent
  Tensor<float> x2({1, 2, 1, 1}, std::vector<float>{3, 5});
  Tensor<float> w2({2, 2, 1, 1}, std::vector<float>{1, 1, 2, -1});
  Tensor<float> y2 = conv2d(x2, w2, ConvSpec::conv(2, 2, 1, 1, 0));
  CHECK(y2.at4(0, 0, 0, 0) == 8.0f);
  CHECK(y2.at4(0, 1, 0, 0) == 1.0f);
}

TEST_CASE("conv_transpose2d matches hand-computed values") {
  // a single unit pixel paints one copy of the kernel
  Tensor<float> x({1, 1, 1, 1}, std::vector<float>{1});
  Tensor<float> w({1, 1, 2, 2}, std::vector<float>{1, 2, 3, 4});
  Tensor<float> y = conv_transpose2d(x, w, ConvSpec::conv_transpose(1, 1, 2, 1, 0));
  CHECK(y.shape() == Shape{1, 1, 2, 2});
  CHECK(y[0] == 1.0f);
  CHECK(y[1] == 2.0f);
  CHECK(y[2] == 3.0f);
  CHECK(y[3] == 4.0f);

  // stride-2 scatters of two pixels overlap in the middle column
  Tensor<float> x2({1, 1, 1, 2}, std::vector<float>{1, 10});
  Tensor<float> w2({1, 1, 1, 3}, std::vector<float>{1, 2, 3});
  ConvSpec spec{1, 1, 1, 3, 1, 2, 0, 0, true};
  Tensor<float> y2 = conv_transpose2d(x2, w2, spec);
  // out width (2-1)*2 + 3 = 5: [1, 2, 3+10, 20, 30]
  CHECK(y2.shape() == Shape{1, 1, 1, 5});
  CHECK(y2[0] == 1.0f);
  CHECK(y2[1] == 2.0f);
  CHECK(y2[2] == 13.0f);
  CHECK(y2[3] == 20.0f);
  CHECK(y2[4] == 30.0f);
}

TEST_CASE("conv kernels agree bitwise with the direct-summation oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const int64_t n = 1 + rng.below(2);
    const int64_t cin = 1 + rng.below(3);
    const int64_t cout = 1 + rng.below(3);
    const int64_t k = 1 + rng.below(4);
    const int64_t s = 1 + rng.below(3);
    const int64_t p = rng.below(k);  // keep output nonempty
    const int64_t h = k + rng.below(6);
    const int64_t w = k + rng.below(6);

    ConvSpec direct{cin, cout, k, k, s, s, p, p, false};
    Tensor<float> x = oracle::randn<float>({n, cin, h, w}, rng);
    Tensor<float> wt = oracle::randn<float>({cout, cin, k, k}, rng);
    CHECK(oracle::bits_equal(conv2d(x, wt, direct),
                             oracle::conv2d(x, wt, direct)));

    ConvSpec transp{cin, cout, k, k, s, s, p, p, true};
    if (transp.out_h(h) >= 1 && transp.out_w(w) >= 1) {
      Tensor<float> wt2 = oracle::randn<float>({cin, cout, k, k}, rng);
      CHECK(oracle::bits_equal(conv_transpose2d(x, wt2, transp),
                               oracle::conv_transpose2d(x, wt2, transp)));
    }
  }
}

TEST_CASE("conv kernels are bit-stable across worker counts") {
  Rng rng(21);
  Tensor<float> x = oracle::randn<float>({4, 3, 9, 9}, rng);
  ConvSpec spec = ConvSpec::conv(3, 5, 3, 2, 1);
  Tensor<float> wt = oracle::randn<float>({5, 3, 3, 3}, rng);

  setenv("MICROGAN_THREADS", "1", 1);
  Tensor<float> serial = conv2d(x, wt, spec);
  setenv("MICROGAN_THREADS", "4", 1);
  Tensor<float> threaded = conv2d(x, wt, spec);
  setenv("MICROGAN_THREADS", "1", 1);
  CHECK(oracle::bits_equal(serial, threaded));
}

TEST_CASE("conv kernels leave their inputs untouched") {
  Rng rng(11);
  Tensor<float> x = oracle::randn<float>({2, 3, 6, 6}, rng);
  Tensor<float> wt = oracle::randn<float>({4, 3, 3, 3}, rng);
  Tensor<float> x_copy = x;
  Tensor<float> w_copy = wt;
  conv2d(x, wt, ConvSpec::conv(3, 4, 3, 2, 1));
  CHECK(oracle::bits_equal(x, x_copy));
  CHECK(oracle::bits_equal(wt, w_copy));
}

TEST_CASE("conv2d rejects mismatched operands") {
  Tensor<float> x({1, 3, 8, 8});
  Tensor<float> w({4, 3, 3, 3});
  error_message([&] { conv2d(x, w, ConvSpec::conv_transpose(3, 4, 3, 1, 1)); },
                ErrorKind::Spec);
  auto msg = error_message(
      [&] { conv2d(x, w, ConvSpec::conv(5, 4, 3, 1, 1)); }, ErrorKind::Shape);
  CHECK(msg.find("(1, 3, 8, 8)") != std::string::npos);
  error_message([&] { conv2d(x, w, ConvSpec::conv(3, 4, 3, 1, -1)); },
                ErrorKind::Spec);
  Tensor<float> rank3({3, 8, 8});
  error_message([&] { conv2d(rank3, w, ConvSpec::conv(3, 4, 3, 1, 1)); },
                ErrorKind::Rank);
  Tensor<float> tiny({1, 3, 2, 2});
  error_message([&] { conv2d(tiny, w, ConvSpec::conv(3, 4, 3, 1, 0)); },
                ErrorKind::Spec);
  error_message(
      [&] { conv_transpose2d(x, w, ConvSpec::conv(3, 4, 3, 1, 1)); },
      ErrorKind::Spec);
}

TEST_CASE("transposed conv with explicit output size covers non-aligned inputs") {
  // a stride-2 direct conv maps both 7 and 8 wide inputs to 4; the gradient
  // must come back at the original width, which the formula alone cannot know
  Rng rng(3);
  ConvSpec spec = ConvSpec::conv(1, 1, 3, 2, 1);
  for (int64_t in_w : {7, 8}) {
    Tensor<double> x = oracle::randn<double>({1, 1, in_w, in_w}, rng);
    Tensor<double> w = oracle::randn<double>({1, 1, 3, 3}, rng);
    Tensor<double> y = conv2d(x, w, spec);
    Tensor<double> back =
        conv_transpose2d_to(y, w, spec, in_w, in_w);
    CHECK(back.dim(2) == in_w);
    CHECK(back.dim(3) == in_w);
    CHECK(oracle::bits_equal(
        back, oracle::conv_transpose2d(y, w, spec, in_w, in_w)));
  }
}

TEST_CASE("scatter is the adjoint of gather: <conv(x,w), u> == <x, convT(u,w)>") {
  Rng rng(13);
  for (int trial = 0; trial < 25; ++trial) {
    const int64_t cin = 1 + rng.below(3);
    const int64_t cout = 1 + rng.below(3);
    const int64_t k = 1 + rng.below(4);
    const int64_t s = 1 + rng.below(3);
    const int64_t p = rng.below(k);
    const int64_t h = k + rng.below(5);
    ConvSpec spec{cin, cout, k, k, s, s, p, p, false};

    Tensor<double> x = oracle::randn<double>({2, cin, h, h}, rng);
    Tensor<double> w = oracle::randn<double>({cout, cin, k, k}, rng);
    Tensor<double> y = conv2d(x, w, spec);
    Tensor<double> u = oracle::randn<double>({2, cout, y.dim(2), y.dim(3)}, rng);
    Tensor<double> xt = conv_transpose2d_to(u, w, spec, h, h);

    double lhs = 0, rhs = 0;
    for (int64_t i = 0; i < y.numel(); ++i) lhs += y[i] * u[i];
    for (int64_t i = 0; i < x.numel(); ++i) rhs += x[i] * xt[i];
    const double denom = std::max({std::abs(lhs), std::abs(rhs), 1e-12});
    CHECK(std::abs(lhs - rhs) / denom < 1e-12);
  }
}

TEST_CASE("batchnorm train mode normalizes with biased batch statistics") {
  Rng rng(5);
  Tensor<float> x = oracle::randn<float>({3, 2, 4, 4}, rng, 2.0);
  Tensor<float> gamma({2}, std::vector<float>{1.5f, 0.5f});
  Tensor<float> beta({2}, std::vector<float>{0.25f, -1.0f});
  Tensor<float> rm({2}), rv({2}, 1.0f);

  Tensor<float> y = batchnorm2d(x, gamma, beta, rm, rv, BnMode::Train,
                                1e-5f, 0.1f);

  const int64_t m = 3 * 4 * 4;
  for (int64_t ch = 0; ch < 2; ++ch) {
    double sum = 0;
    for (int64_t n = 0; n < 3; ++n)
      for (int64_t i = 0; i < 16; ++i)
        sum += x.at4(n, ch, i / 4, i % 4);
    const double mean = sum / m;
    double sq = 0;
    for (int64_t n = 0; n < 3; ++n)
      for (int64_t i = 0; i < 16; ++i) {
        double d = x.at4(n, ch, i / 4, i % 4) - mean;
        sq += d * d;
      }
    const double var = sq / m;  // biased: divide by m, not m-1

    for (int64_t n = 0; n < 3; ++n)
      for (int64_t i = 0; i < 16; ++i) {
        const double want = gamma[ch] * (x.at4(n, ch, i / 4, i % 4) - mean) /
                                std::sqrt(var + 1e-5) +
                            beta[ch];
        CHECK(y.at4(n, ch, i / 4, i % 4) == doctest::Approx(want).epsilon(1e-4));
      }
    CHECK(rm[ch] == doctest::Approx(0.9 * 0.0 + 0.1 * mean).epsilon(1e-4));
    CHECK(rv[ch] == doctest::Approx(0.9 * 1.0 + 0.1 * var).epsilon(1e-4));
  }
}

TEST_CASE("batchnorm with zero gamma reproduces beta exactly") {
  Rng rng(17);
  Tensor<float> x = oracle::randn<float>({2, 3, 5, 5}, rng, 10.0);
  Tensor<float> gamma({3});  // zeros
  Tensor<float> beta({3}, std::vector<float>{0.125f, -2.0f, 42.0f});
  Tensor<float> rm({3}), rv({3}, 1.0f);
  Tensor<float> y = batchnorm2d(x, gamma, beta, rm, rv, BnMode::Train,
                                1e-5f, 0.1f);
  for (int64_t ch = 0; ch < 3; ++ch)
    for (int64_t n = 0; n < 2; ++n)
      for (int64_t i = 0; i < 25; ++i)
        CHECK(y.at4(n, ch, i / 5, i % 5) == beta[ch]);
}

TEST_CASE("batchnorm eval mode uses the running buffers untouched") {
  Tensor<float> x({1, 1, 1, 2}, std::vector<float>{3.0f, 7.0f});
  Tensor<float> gamma({1}, std::vector<float>{2.0f});
  Tensor<float> beta({1}, std::vector<float>{1.0f});
  // running stats chosen so sqrt(var + eps) is trivial to verify
  Tensor<float> rm({1}, std::vector<float>{3.0f});
  Tensor<float> rv({1}, std::vector<float>{4.0f});
  Tensor<float> rm_before = rm, rv_before = rv;

  Tensor<float> y = batchnorm2d(x, gamma, beta, rm, rv, BnMode::Eval,
                                1e-5f, 0.1f);
  CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-5));  // (3-3)/2*2+1
  CHECK(y[1] == doctest::Approx(5.0).epsilon(1e-4));  // (7-3)/2*2+1
  CHECK(oracle::bits_equal(rm, rm_before));
  CHECK(oracle::bits_equal(rv, rv_before));
}

TEST_CASE("batchnorm validates its operands") {
  Tensor<float> x({1, 2, 1, 1}, std::vector<float>{1, 2});
  Tensor<float> g2({2}, 1.0f), b2({2});
  Tensor<float> rm({2}), rv({2}, 1.0f);
  // a single value per channel has no spread to normalize by
  error_message(
      [&] {
        batchnorm2d(x, g2, b2, rm, rv, BnMode::Train, 1e-5f, 0.1f);
      },
      ErrorKind::Statistics);

  Tensor<float> x4({2, 2, 2, 2});
  Tensor<float> g3({3}, 1.0f);
  auto msg = error_message(
      [&] {
        batchnorm2d(x4, g3, b2, rm, rv, BnMode::Train, 1e-5f, 0.1f);
      },
      ErrorKind::Shape);
  CHECK(msg.find("gamma") != std::string::npos);
  error_message(
      [&] {
        batchnorm2d(x4, g2, b2, rm, rv, BnMode::Train, 0.0f, 0.1f);
      },
      ErrorKind::Spec);
  error_message(
      [&] {
        batchnorm2d(x4, g2, b2, rm, rv, BnMode::Train, 1e-5f, 1.5f);
      },
      ErrorKind::Spec);
}

TEST_CASE("activations compute the documented elementwise maps") {
  Tensor<float> x({1, 1, 1, 5},
                  std::vector<float>{-2.0f, -0.5f, 0.0f, 0.5f, 2.0f});

  Tensor<float> r = activation(x, Act::Relu);
  CHECK(r[0] == 0.0f);
  CHECK(r[2] == 0.0f);
  CHECK(r[4] == 2.0f);

  Tensor<float> l = activation(x, Act::LeakyRelu, 0.2f);
  CHECK(l[0] == doctest::Approx(-0.4));
  CHECK(l[1] == doctest::Approx(-0.1));
  CHECK(l[3] == 0.5f);

  Tensor<float> t = activation(x, Act::Tanh);
  CHECK(t[2] == 0.0f);
  CHECK(t[4] == doctest::Approx(std::tanh(2.0)));
  for (int64_t i = 0; i < 5; ++i) {
    CHECK(t[i] >= -1.0f);
    CHECK(t[i] <= 1.0f);
  }

  Tensor<float> s = activation(x, Act::Sigmoid);
  CHECK(s[2] == 0.5f);
  CHECK(s[4] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
  for (int64_t i = 0; i < 5; ++i) {
    CHECK(s[i] > 0.0f);
    CHECK(s[i] < 1.0f);
  }

  error_message([&] { activation(x, Act::Tanh, 0.2f); }, ErrorKind::Spec);
}

TEST_CASE("rng streams are deterministic and serializable") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  // normal() consumes exactly two uniforms per draw, so interleaving stays
  // aligned
  Rng c(42), d(42);
  (void)c.normal();
  (void)d.next_u64();
  (void)d.next_u64();
  CHECK(c.next_u64() == d.next_u64());

  Rng e(7);
  for (int i = 0; i < 37; ++i) (void)e.normal();
  const std::string state = e.state();
  Rng f(999);
  f.set_state(state);
  for (int i = 0; i < 50; ++i) CHECK(e.next_u64() == f.next_u64());

  // distinct streams from one seed stay distinct; same derivation matches
  Rng s1 = Rng::from_stream(1, 100);
  Rng s2 = Rng::from_stream(1, 101);
  Rng s3 = Rng::from_stream(1, 100);
  const uint64_t first_of_100 = s1.next_u64();
  CHECK(first_of_100 != s2.next_u64());
  CHECK(first_of_100 == s3.next_u64());

  Rng g(0);
  for (int i = 0; i < 1000; ++i) {
    uint64_t v = g.below(13);
    CHECK(v < 13);
  }
  double u = 0;
  Rng h(5);
  for (int i = 0; i < 1000; ++i) {
    u = h.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }

  Rng bad(1);
  error_message([&] { bad.set_state("not a state"); }, ErrorKind::Load);
}
