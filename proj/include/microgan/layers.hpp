#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "microgan/autograd.hpp"
#include "microgan/rng.hpp"

namespace microgan {

enum class LayerKind { Conv, ConvT, BatchNorm, Activation };

// One entry of a feed-forward stack. A tagged struct instead of a class
// hierarchy: there are exactly four kinds and checkpointing needs to walk
// their tensors by name anyway.
template <typename S>
struct Layer {
  LayerKind kind = LayerKind::Activation;

  // Conv / ConvT
  ConvSpec conv;
  Tensor<S> weight;

  // BatchNorm
  int64_t channels = 0;
  S bn_eps = S(1e-5);
  S bn_momentum = S(0.1);
  Tensor<S> gamma, beta, running_mean, running_var;

  // Activation
  Act act = Act::Relu;
  S slope = S(0);

  static Layer conv2d(int64_t cin, int64_t cout, int64_t k, int64_t s,
                      int64_t p) {
    Layer l;
    l.kind = LayerKind::Conv;
    l.conv = ConvSpec::conv(cin, cout, k, s, p);
    l.weight = Tensor<S>({cout, cin, k, k});
    return l;
  }

  static Layer conv_transpose2d(int64_t cin, int64_t cout, int64_t k,
                                int64_t s, int64_t p) {
    Layer l;
    l.kind = LayerKind::ConvT;
    l.conv = ConvSpec::conv_transpose(cin, cout, k, s, p);
    l.weight = Tensor<S>({cin, cout, k, k});
    return l;
  }

  static Layer batchnorm(int64_t channels) {
    Layer l;
    l.kind = LayerKind::BatchNorm;
    l.channels = channels;
    l.gamma = Tensor<S>({channels}, S(1));
    l.beta = Tensor<S>({channels});
    l.running_mean = Tensor<S>({channels});
    l.running_var = Tensor<S>({channels}, S(1));
    return l;
  }

  static Layer activation(Act act, S slope = S(0)) {
    Layer l;
    l.kind = LayerKind::Activation;
    l.act = act;
    l.slope = slope;
    return l;
  }
};

// Trainable-parameter draw distributions. Conv and transposed-conv kernels
// share one normal; batchnorm scale gets its own; batchnorm offset is a
// constant. Buffers always reset to mean 0 / var 1.
struct InitSpec {
  double conv_weight_mean = 0.0;
  double conv_weight_std = 0.02;
  double bn_gamma_mean = 1.0;
  double bn_gamma_std = 0.2;
  double bn_beta = 0.0;

  void validate() const {
    if (!(conv_weight_std > 0) || !(bn_gamma_std > 0))
      fail(ErrorKind::Spec, "init std must be > 0");
  }
};

template <typename S>
class Sequential {
 public:
  std::vector<Layer<S>> layers;

  Tensor<S> forward(const Tensor<S>& x, BnMode mode) {
    Tensor<S> cur = x;
    for (size_t i = 0; i < layers.size(); ++i) {
      Layer<S>& l = layers[i];
      try {
        switch (l.kind) {
          case LayerKind::Conv:
            cur = microgan::conv2d(cur, l.weight, l.conv);
            break;
          case LayerKind::ConvT:
            cur = microgan::conv_transpose2d(cur, l.weight, l.conv);
            break;
          case LayerKind::BatchNorm:
            cur = microgan::batchnorm2d(cur, l.gamma, l.beta, l.running_mean,
                                        l.running_var, mode, l.bn_eps,
                                        l.bn_momentum);
            break;
          case LayerKind::Activation:
            cur = microgan::activation(cur, l.act, l.slope);
            break;
        }
      } catch (const Error& e) {
        fail(e.kind(), "layer " + std::to_string(i) + ": " + e.what());
      }
    }
    return cur;
  }

  int64_t param_count() const {
    int64_t n = 0;
    for (const Layer<S>& l : layers) {
      if (l.kind == LayerKind::Conv || l.kind == LayerKind::ConvT)
        n += l.weight.numel();
      else if (l.kind == LayerKind::BatchNorm)
        n += l.gamma.numel() + l.beta.numel();
    }
    return n;
  }

  // trainable parameters, in layer order; names are "<idx>.<field>"
  template <typename F>
  void for_each_param(F&& fn) {
    for (size_t i = 0; i < layers.size(); ++i) {
      Layer<S>& l = layers[i];
      const std::string p = std::to_string(i);
      if (l.kind == LayerKind::Conv || l.kind == LayerKind::ConvT) {
        fn(p + ".weight", l.weight);
      } else if (l.kind == LayerKind::BatchNorm) {
        fn(p + ".gamma", l.gamma);
        fn(p + ".beta", l.beta);
      }
    }
  }

  template <typename F>
  void for_each_param(F&& fn) const {
    for (size_t i = 0; i < layers.size(); ++i) {
      const Layer<S>& l = layers[i];
      const std::string p = std::to_string(i);
      if (l.kind == LayerKind::Conv || l.kind == LayerKind::ConvT) {
        fn(p + ".weight", l.weight);
      } else if (l.kind == LayerKind::BatchNorm) {
        fn(p + ".gamma", l.gamma);
        fn(p + ".beta", l.beta);
      }
    }
  }

  // non-trainable state (batchnorm running statistics)
  template <typename F>
  void for_each_buffer(F&& fn) {
    for (size_t i = 0; i < layers.size(); ++i) {
      Layer<S>& l = layers[i];
      if (l.kind == LayerKind::BatchNorm) {
        fn(std::to_string(i) + ".running_mean", l.running_mean);
        fn(std::to_string(i) + ".running_var", l.running_var);
      }
    }
  }

  template <typename F>
  void for_each_buffer(F&& fn) const {
    for (size_t i = 0; i < layers.size(); ++i) {
      const Layer<S>& l = layers[i];
      if (l.kind == LayerKind::BatchNorm) {
        fn(std::to_string(i) + ".running_mean", l.running_mean);
        fn(std::to_string(i) + ".running_var", l.running_var);
      }
    }
  }
};

// Fills parameters in layer order, row-major within each tensor, so a given
// seed always produces the same model.
template <typename S>
void init_weights(Sequential<S>& model, const InitSpec& init, Rng& rng) {
  init.validate();
  for (Layer<S>& l : model.layers) {
    switch (l.kind) {
      case LayerKind::Conv:
      case LayerKind::ConvT:
        for (int64_t i = 0; i < l.weight.numel(); ++i)
          l.weight[i] = static_cast<S>(init.conv_weight_mean +
                                       init.conv_weight_std * rng.normal());
        break;
      case LayerKind::BatchNorm:
        for (int64_t i = 0; i < l.gamma.numel(); ++i)
          l.gamma[i] = static_cast<S>(init.bn_gamma_mean +
                                      init.bn_gamma_std * rng.normal());
        l.beta.fill(static_cast<S>(init.bn_beta));
        l.running_mean.fill(S(0));
        l.running_var.fill(S(1));
        break;
      case LayerKind::Activation:
        break;
    }
  }
}

// Model family selector. The full model is {64, 1}: latent 1000x1x1 through
// widths 512/256/128/64 up to 3x64x64, mirrored on the discriminator side.
// Smaller image sizes drop trailing upsampling stages; channel_div thins
// every width (and the latent) by the same power of two.
struct ModelScale {
  int64_t image_size = 64;
  int64_t channel_div = 1;

  void validate() const {
    if (image_size != 8 && image_size != 16 && image_size != 32 &&
        image_size != 64)
      fail(ErrorKind::Spec, "model image_size must be 8, 16, 32 or 64");
    if (channel_div < 1 || channel_div > 64 ||
        (channel_div & (channel_div - 1)) != 0)
      fail(ErrorKind::Spec,
           "model channel_div must be a power of two in [1, 64]");
  }

  int64_t latent_channels() const { return 1000 / channel_div; }

  // intermediate widths walking down from 512/div; one per upsampling stage
  std::vector<int64_t> generator_widths() const {
    validate();
    int stages = 0;
    for (int64_t s = image_size; s > 4; s /= 2) ++stages;
    std::vector<int64_t> w;
    int64_t width = 512 / channel_div;
    for (int i = 0; i < stages; ++i, width /= 2) w.push_back(width);
    return w;
  }
};

// latent Cx1x1 -> 4x4 -> ... -> image_size, batchnorm+relu after every
// upsampling except the last, which goes straight to tanh
template <typename S>
Sequential<S> build_generator(const ModelScale& scale = {}) {
  const std::vector<int64_t> widths = scale.generator_widths();
  Sequential<S> g;
  int64_t cin = scale.latent_channels();
  for (size_t i = 0; i < widths.size(); ++i) {
    if (i == 0)
      g.layers.push_back(Layer<S>::conv_transpose2d(cin, widths[i], 4, 1, 0));
    else
      g.layers.push_back(Layer<S>::conv_transpose2d(cin, widths[i], 4, 2, 1));
    g.layers.push_back(Layer<S>::batchnorm(widths[i]));
    g.layers.push_back(Layer<S>::activation(Act::Relu));
    cin = widths[i];
  }
  g.layers.push_back(Layer<S>::conv_transpose2d(cin, 3, 4, 2, 1));
  g.layers.push_back(Layer<S>::activation(Act::Tanh));
  return g;
}

// image -> halving convs -> 1x1x1 sigmoid probability; leaky relu 0.2
// throughout, batchnorm on every downsampling except the first
template <typename S>
Sequential<S> build_discriminator(const ModelScale& scale = {}) {
  std::vector<int64_t> widths = scale.generator_widths();
  std::reverse(widths.begin(), widths.end());
  Sequential<S> d;
  int64_t cin = 3;
  for (size_t i = 0; i < widths.size(); ++i) {
    d.layers.push_back(Layer<S>::conv2d(cin, widths[i], 4, 2, 1));
    if (i != 0) d.layers.push_back(Layer<S>::batchnorm(widths[i]));
    d.layers.push_back(Layer<S>::activation(Act::LeakyRelu, S(0.2)));
    cin = widths[i];
  }
  d.layers.push_back(Layer<S>::conv2d(cin, 1, 4, 1, 0));
  d.layers.push_back(Layer<S>::activation(Act::Sigmoid));
  return d;
}

// Registers a model's parameters as tape leaves so the same Sequential can
// run both recorded and unrecorded forwards.
template <typename S>
struct TapedModel {
  Sequential<S>* model = nullptr;
  struct LayerIds {
    typename Tape<S>::ValueId weight = -1, gamma = -1, beta = -1;
  };
  std::vector<LayerIds> ids;

  TapedModel(Tape<S>& tape, Sequential<S>& m) : model(&m) {
    ids.resize(m.layers.size());
    for (size_t i = 0; i < m.layers.size(); ++i) {
      Layer<S>& l = m.layers[i];
      if (l.kind == LayerKind::Conv || l.kind == LayerKind::ConvT)
        ids[i].weight = tape.input(l.weight);
      else if (l.kind == LayerKind::BatchNorm) {
        ids[i].gamma = tape.input(l.gamma);
        ids[i].beta = tape.input(l.beta);
      }
    }
  }

  typename Tape<S>::ValueId forward(Tape<S>& tape,
                                    typename Tape<S>::ValueId x,
                                    BnMode mode) const {
    auto cur = x;
    for (size_t i = 0; i < model->layers.size(); ++i) {
      Layer<S>& l = model->layers[i];
      try {
        switch (l.kind) {
          case LayerKind::Conv:
            cur = tape.conv2d(cur, ids[i].weight, l.conv);
            break;
          case LayerKind::ConvT:
            cur = tape.conv_transpose2d(cur, ids[i].weight, l.conv);
            break;
          case LayerKind::BatchNorm:
            cur = tape.batchnorm2d(cur, ids[i].gamma, ids[i].beta,
                                   l.running_mean, l.running_var, mode,
                                   l.bn_eps, l.bn_momentum);
            break;
          case LayerKind::Activation:
            cur = tape.activation(cur, l.act, l.slope);
            break;
        }
      } catch (const Error& e) {
        fail(e.kind(), "layer " + std::to_string(i) + ": " + e.what());
      }
    }
    return cur;
  }

  // every registered parameter appears exactly once; zeros if unreached
  NamedTensors<S> grads(const Tape<S>& tape,
                        const std::string& prefix = "") const {
    NamedTensors<S> out;
    for (size_t i = 0; i < model->layers.size(); ++i) {
      const Layer<S>& l = model->layers[i];
      const std::string p = prefix + std::to_string(i);
      if (l.kind == LayerKind::Conv || l.kind == LayerKind::ConvT)
        out.emplace(p + ".weight", tape.grad(ids[i].weight));
      else if (l.kind == LayerKind::BatchNorm) {
        out.emplace(p + ".gamma", tape.grad(ids[i].gamma));
        out.emplace(p + ".beta", tape.grad(ids[i].beta));
      }
    }
    return out;
  }
};

}  // namespace microgan
