#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "microgan/layers.hpp"
#include "oracles.hpp"
#include "testing.hpp"

using namespace microgan;
using testing::error_message;

namespace {

struct ConvEntry {
  int64_t cin, cout, k, s, p;
};

void check_conv(const Layer<float>& l, LayerKind kind, const ConvEntry& e) {
  CHECK(l.kind == kind);
  CHECK(l.conv.in_channels == e.cin);
  CHECK(l.conv.out_channels == e.cout);
  CHECK(l.conv.kh == e.k);
  CHECK(l.conv.kw == e.k);
  CHECK(l.conv.sh == e.s);
  CHECK(l.conv.ph == e.p);
  CHECK(l.conv.transposed == (kind == LayerKind::ConvT));
  // transposed weights are (cin, cout, k, k); direct are (cout, cin, k, k)
  if (kind == LayerKind::ConvT)
    CHECK(l.weight.shape() == Shape{e.cin, e.cout, e.k, e.k});
  else
    CHECK(l.weight.shape() == Shape{e.cout, e.cin, e.k, e.k});
}

}  // namespace

TEST_CASE("generator stack matches the published layout entry for entry") {
  Sequential<float> g = build_generator<float>();
  REQUIRE(g.layers.size() == 14);

  check_conv(g.layers[0], LayerKind::ConvT, {1000, 512, 4, 1, 0});
  CHECK(g.layers[1].kind == LayerKind::BatchNorm);
  CHECK(g.layers[1].channels == 512);
  CHECK(g.layers[1].bn_eps == 1e-5f);
  CHECK(g.layers[1].bn_momentum == 0.1f);
  CHECK(g.layers[2].kind == LayerKind::Activation);
  CHECK(g.layers[2].act == Act::Relu);

  check_conv(g.layers[3], LayerKind::ConvT, {512, 256, 4, 2, 1});
  CHECK(g.layers[4].channels == 256);
  CHECK(g.layers[5].act == Act::Relu);

  check_conv(g.layers[6], LayerKind::ConvT, {256, 128, 4, 2, 1});
  CHECK(g.layers[7].channels == 128);
  CHECK(g.layers[8].act == Act::Relu);

  check_conv(g.layers[9], LayerKind::ConvT, {128, 64, 4, 2, 1});
  CHECK(g.layers[10].channels == 64);
  CHECK(g.layers[11].act == Act::Relu);

  // final upsampling goes straight to tanh: no batchnorm on the output
  check_conv(g.layers[12], LayerKind::ConvT, {64, 3, 4, 2, 1});
  CHECK(g.layers[13].kind == LayerKind::Activation);
  CHECK(g.layers[13].act == Act::Tanh);

  CHECK(g.param_count() == 10949504);
}

TEST_CASE("discriminator stack matches the published layout entry for entry") {
  Sequential<float> d = build_discriminator<float>();
  REQUIRE(d.layers.size() == 13);

  // no batchnorm after the first convolution
  check_conv(d.layers[0], LayerKind::Conv, {3, 64, 4, 2, 1});
  CHECK(d.layers[1].kind == LayerKind::Activation);
  CHECK(d.layers[1].act == Act::LeakyRelu);
  CHECK(d.layers[1].slope == 0.2f);

  check_conv(d.layers[2], LayerKind::Conv, {64, 128, 4, 2, 1});
  CHECK(d.layers[3].kind == LayerKind::BatchNorm);
  CHECK(d.layers[3].channels == 128);
  CHECK(d.layers[4].act == Act::LeakyRelu);

  check_conv(d.layers[5], LayerKind::Conv, {128, 256, 4, 2, 1});
  CHECK(d.layers[6].channels == 256);
  CHECK(d.layers[7].act == Act::LeakyRelu);

  check_conv(d.layers[8], LayerKind::Conv, {256, 512, 4, 2, 1});
  CHECK(d.layers[9].channels == 512);
  CHECK(d.layers[10].act == Act::LeakyRelu);

  check_conv(d.layers[11], LayerKind::Conv, {512, 1, 4, 1, 0});
  CHECK(d.layers[12].kind == LayerKind::Activation);
  CHECK(d.layers[12].act == Act::Sigmoid);

  CHECK(d.param_count() == 2765568);
}

TEST_CASE("shape chains hold through both full-size networks") {
  Rng rng(1);
  Sequential<float> g = build_generator<float>();
  Sequential<float> d = build_discriminator<float>();
  init_weights(g, InitSpec{}, rng);
  init_weights(d, InitSpec{}, rng);

  Tensor<float> z = oracle::randn<float>({2, 1000, 1, 1}, rng);
  Tensor<float> img = g.forward(z, BnMode::Train);
  CHECK(img.shape() == Shape{2, 3, 64, 64});
  Tensor<float> p = d.forward(img, BnMode::Train);
  CHECK(p.shape() == Shape{2, 1, 1, 1});
  CHECK(p.all_finite());
}

TEST_CASE("scaled-down variants keep the same skeleton") {
  ModelScale s{16, 4};
  CHECK(s.latent_channels() == 250);
  CHECK(s.generator_widths() == std::vector<int64_t>{128, 64});

  Sequential<float> g = build_generator<float>(s);
  Sequential<float> d = build_discriminator<float>(s);
  // 2 upsampling stages with bn+relu, then the output stage: 2*3 + 2 = 8
  CHECK(g.layers.size() == 8);
  check_conv(g.layers[0], LayerKind::ConvT, {250, 128, 4, 1, 0});
  check_conv(g.layers[3], LayerKind::ConvT, {128, 64, 4, 2, 1});
  check_conv(g.layers[6], LayerKind::ConvT, {64, 3, 4, 2, 1});
  CHECK(d.layers.size() == 7);
  check_conv(d.layers[0], LayerKind::Conv, {3, 64, 4, 2, 1});
  check_conv(d.layers[2], LayerKind::Conv, {64, 128, 4, 2, 1});
  check_conv(d.layers[5], LayerKind::Conv, {128, 1, 4, 1, 0});

  Rng rng(2);
  init_weights(g, InitSpec{}, rng);
  init_weights(d, InitSpec{}, rng);
  Tensor<float> z = oracle::randn<float>({4, 250, 1, 1}, rng);
  Tensor<float> img = g.forward(z, BnMode::Train);
  CHECK(img.shape() == Shape{4, 3, 16, 16});
  CHECK(d.forward(img, BnMode::Train).shape() == Shape{4, 1, 1, 1});

  ModelScale tiny{8, 64};
  CHECK(tiny.latent_channels() == 15);
  CHECK(tiny.generator_widths() == std::vector<int64_t>{8});

  error_message([] { ModelScale{12, 1}.validate(); }, ErrorKind::Spec);
  error_message([] { ModelScale{16, 3}.validate(); }, ErrorKind::Spec);
  error_message([] { ModelScale{16, 128}.validate(); }, ErrorKind::Spec);
}

TEST_CASE("weight init draws from the documented distributions") {
  Sequential<float> g = build_generator<float>();
  Rng rng(77);
  init_weights(g, InitSpec{}, rng);

  double sum = 0, sq = 0;
  int64_t n = 0;
  for (const Layer<float>& l : g.layers) {
    if (l.kind != LayerKind::ConvT) continue;
    for (int64_t i = 0; i < l.weight.numel(); ++i) {
      sum += l.weight[i];
      sq += static_cast<double>(l.weight[i]) * l.weight[i];
      ++n;
    }
  }
  const double mean = sum / n;
  const double std = std::sqrt(sq / n - mean * mean);
  CHECK(std::abs(mean) < 1e-3);
  CHECK(std == doctest::Approx(0.02).epsilon(0.05));

  for (const Layer<float>& l : g.layers) {
    if (l.kind != LayerKind::BatchNorm) continue;
    for (int64_t i = 0; i < l.beta.numel(); ++i) CHECK(l.beta[i] == 0.0f);
    for (int64_t i = 0; i < l.running_mean.numel(); ++i) {
      CHECK(l.running_mean[i] == 0.0f);
      CHECK(l.running_var[i] == 1.0f);
    }
  }

  // gamma across the full model: mean 1, std 0.2
  double gsum = 0, gsq = 0;
  int64_t gn = 0;
  for (const Layer<float>& l : g.layers) {
    if (l.kind != LayerKind::BatchNorm) continue;
    for (int64_t i = 0; i < l.gamma.numel(); ++i) {
      gsum += l.gamma[i];
      gsq += static_cast<double>(l.gamma[i]) * l.gamma[i];
      ++gn;
    }
  }
  const double gmean = gsum / gn;
  CHECK(gmean == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::sqrt(gsq / gn - gmean * gmean) ==
        doctest::Approx(0.2).epsilon(0.15));

  // same seed, same weights; different seed, different weights
  Sequential<float> g2 = build_generator<float>();
  Rng rng2(77);
  init_weights(g2, InitSpec{}, rng2);
  CHECK(oracle::bits_equal(g.layers[0].weight, g2.layers[0].weight));
  Sequential<float> g3 = build_generator<float>();
  Rng rng3(78);
  init_weights(g3, InitSpec{}, rng3);
  CHECK_FALSE(oracle::bits_equal(g.layers[0].weight, g3.layers[0].weight));

  InitSpec bad;
  bad.conv_weight_std = 0.0;
  error_message([&] { init_weights(g, bad, rng); }, ErrorKind::Spec);
}

TEST_CASE("forward errors name the offending layer") {
  Sequential<float> g = build_generator<float>(ModelScale{8, 8});
  Rng rng(5);
  init_weights(g, InitSpec{}, rng);
  Tensor<float> wrong({2, 7, 1, 1}, 0.5f);
  auto msg = error_message([&] { g.forward(wrong, BnMode::Train); },
                           ErrorKind::Shape);
  CHECK(msg.find("layer 0") != std::string::npos);
}

TEST_CASE("parameter walk yields every tensor once, in layer order") {
  Sequential<float> g = build_generator<float>();
  std::vector<std::string> names;
  g.for_each_param([&](const std::string& n, Tensor<float>&) {
    names.push_back(n);
  });
  CHECK(names.size() == 13);  // 5 conv weights + 4 bn pairs
  CHECK(names[0] == "0.weight");
  CHECK(names[1] == "1.gamma");
  CHECK(names[2] == "1.beta");
  CHECK(names.back() == "12.weight");
  std::set<std::string> uniq(names.begin(), names.end());
  CHECK(uniq.size() == names.size());

  std::vector<std::string> buffers;
  g.for_each_buffer([&](const std::string& n, Tensor<float>&) {
    buffers.push_back(n);
  });
  CHECK(buffers.size() == 8);  // 4 bn layers x (mean, var)
  CHECK(buffers[0] == "1.running_mean");

  Sequential<float> d = build_discriminator<float>();
  std::vector<std::string> dnames;
  d.for_each_param([&](const std::string& n, Tensor<float>&) {
    dnames.push_back(n);
  });
  CHECK(dnames.size() == 11);  // 5 conv weights + 3 bn pairs
}

TEST_CASE("taped forward agrees with the plain forward") {
  ModelScale s{8, 16};
  Sequential<float> g = build_generator<float>(s);
  Rng rng(9);
  init_weights(g, InitSpec{}, rng);
  Tensor<float> z = oracle::randn<float>({2, s.latent_channels(), 1, 1}, rng);

  Sequential<float> g_plain = g;  // separate running buffers
  Tensor<float> direct = g_plain.forward(z, BnMode::Train);

  Tape<float> tape;
  TapedModel<float> tm(tape, g);
  auto out = tm.forward(tape, tape.input(z), BnMode::Train);
  CHECK(oracle::bits_equal(tape.value(out), direct));

  // both forwards advanced their running stats identically
  for (size_t i = 0; i < g.layers.size(); ++i)
    if (g.layers[i].kind == LayerKind::BatchNorm)
      CHECK(oracle::bits_equal(g.layers[i].running_mean,
                               g_plain.layers[i].running_mean));

  NamedTensors<float> grads;
  tape.backward(tape.mean_all(out));
  grads = tm.grads(tape);
  CHECK(grads.size() == 4);  // one stage: 2 weights + 1 bn pair
  for (const auto& [name, gr] : grads) {
    CHECK(gr.all_finite());
    (void)name;
  }
}

TEST_CASE("eval mode uses buffers and leaves them unchanged") {
  ModelScale s{8, 16};
  Sequential<float> g = build_generator<float>(s);
  Rng rng(15);
  init_weights(g, InitSpec{}, rng);
  Tensor<float> z = oracle::randn<float>({2, s.latent_channels(), 1, 1}, rng);

  Tensor<float> rm_before;
  for (const auto& l : g.layers)
    if (l.kind == LayerKind::BatchNorm) rm_before = l.running_mean;

  Tensor<float> a = g.forward(z, BnMode::Eval);
  Tensor<float> b = g.forward(z, BnMode::Eval);
  CHECK(oracle::bits_equal(a, b));  // eval forwards are pure

  for (const auto& l : g.layers)
    if (l.kind == LayerKind::BatchNorm)
      CHECK(oracle::bits_equal(l.running_mean, rm_before));

  Tensor<float> c = g.forward(z, BnMode::Train);
  for (const auto& l : g.layers)
    if (l.kind == LayerKind::BatchNorm)
      CHECK_FALSE(oracle::bits_equal(l.running_mean, rm_before));
}
