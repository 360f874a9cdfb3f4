#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "microgan/kernels.hpp"

namespace microgan {

template <typename S>
using NamedTensors = std::map<std::string, Tensor<S>>;

// Reverse-mode tape. Forward calls append nodes (values computed eagerly via
// the kernels); backward(loss) walks the nodes in reverse and accumulates
// gradients into the nodes that contributed. Leaves enter via input();
// detach() copies a value onto a fresh leaf so gradients stop there.
template <typename S>
class Tape {
 public:
  using ValueId = int32_t;

  ValueId input(Tensor<S> value) {
    Node n;
    n.op = Op::Input;
    n.value = std::move(value);
    return push(std::move(n));
  }

  ValueId detach(ValueId x) {
    Node n;
    n.op = Op::Input;
    n.value = value(x);
    return push(std::move(n));
  }

  ValueId conv2d(ValueId x, ValueId w, const ConvSpec& spec) {
    Node n;
    n.op = Op::Conv2d;
    n.a = x;
    n.b = w;
    n.conv = spec;
    n.value = microgan::conv2d(value(x), value(w), spec);
    return push(std::move(n));
  }

  ValueId conv_transpose2d(ValueId x, ValueId w, const ConvSpec& spec) {
    Node n;
    n.op = Op::ConvT2d;
    n.a = x;
    n.b = w;
    n.conv = spec;
    n.value = microgan::conv_transpose2d(value(x), value(w), spec);
    return push(std::move(n));
  }

  // Running buffers live outside the tape; they update as a side effect of
  // the forward pass and never receive gradients.
  ValueId batchnorm2d(ValueId x, ValueId gamma, ValueId beta,
                      Tensor<S>& running_mean, Tensor<S>& running_var,
                      BnMode mode, S eps, S momentum) {
    Node n;
    n.op = Op::BatchNorm;
    n.a = x;
    n.b = gamma;
    n.c = beta;
    n.bn_mode = mode;
    BnSaved<S> saved;
    n.value = microgan::batchnorm2d(value(x), value(gamma), value(beta),
                                    running_mean, running_var, mode, eps,
                                    momentum, &saved);
    n.bn_xhat = std::move(saved.x_hat);
    n.bn_inv_std = std::move(saved.inv_std);
    return push(std::move(n));
  }

  ValueId activation(ValueId x, Act kind, S slope = S(0)) {
    Node n;
    n.op = Op::Activation;
    n.a = x;
    n.act = kind;
    n.s0 = slope;
    n.value = microgan::activation(value(x), kind, slope);
    return push(std::move(n));
  }

  // mean over all elements; result has shape (1)
  ValueId mean_all(ValueId x) {
    Node n;
    n.op = Op::MeanAll;
    n.a = x;
    const Tensor<S>& v = value(x);
    S sum = S(0);
    for (int64_t i = 0; i < v.numel(); ++i) sum += v[i];
    n.value = Tensor<S>({1}, sum / static_cast<S>(v.numel()));
    return push(std::move(n));
  }

  // log(max(x, floor)); the clamp keeps saturated probabilities finite
  ValueId log_clamped(ValueId x, S floor) {
    if (!(floor > S(0)))
      fail(ErrorKind::Spec, "log_clamped floor must be > 0");
    Node n;
    n.op = Op::LogClamped;
    n.a = x;
    n.s0 = floor;
    const Tensor<S>& v = value(x);
    n.value = Tensor<S>(v.shape());
    for (int64_t i = 0; i < v.numel(); ++i)
      n.value[i] = std::log(v[i] > floor ? v[i] : floor);
    return push(std::move(n));
  }

  // scale * x + shift, elementwise
  ValueId affine(ValueId x, S scale, S shift) {
    Node n;
    n.op = Op::Affine;
    n.a = x;
    n.s0 = scale;
    const Tensor<S>& v = value(x);
    n.value = Tensor<S>(v.shape());
    for (int64_t i = 0; i < v.numel(); ++i) n.value[i] = scale * v[i] + shift;
    return push(std::move(n));
  }

  ValueId add(ValueId a, ValueId b) {
    const Tensor<S>& va = value(a);
    const Tensor<S>& vb = value(b);
    if (!va.same_shape(vb))
      fail(ErrorKind::Shape, "add operands differ: " + shape_str(va.shape()) +
                                 " vs " + shape_str(vb.shape()));
    Node n;
    n.op = Op::Add;
    n.a = a;
    n.b = b;
    n.value = Tensor<S>(va.shape());
    for (int64_t i = 0; i < va.numel(); ++i) n.value[i] = va[i] + vb[i];
    return push(std::move(n));
  }

  const Tensor<S>& value(ValueId id) const { return at(id).value; }

  size_t size() const { return nodes_.size(); }

  void backward(ValueId loss) {
    const Node& top = at(loss);
    if (top.value.numel() != 1)
      fail(ErrorKind::Rank, "backward requires a scalar loss, got shape " +
                                shape_str(top.value.shape()));
    for (Node& n : nodes_) {
      n.grad = Tensor<S>();
      n.has_grad = false;
    }
    nodes_[static_cast<size_t>(loss)].grad = Tensor<S>({1}, S(1));
    nodes_[static_cast<size_t>(loss)].has_grad = true;
    ran_backward_ = true;

    for (int32_t i = loss; i >= 0; --i) {
      Node& n = nodes_[static_cast<size_t>(i)];
      if (!n.has_grad) continue;
      const Tensor<S>& g = n.grad;
      switch (n.op) {
        case Op::Input:
          break;
        case Op::Conv2d: {
          const Tensor<S>& x = value(n.a);
          const Tensor<S>& w = value(n.b);
          accumulate(n.a, conv_transpose2d_to(g, w, n.conv, x.dim(2), x.dim(3)));
          accumulate(n.b, conv2d_weight_grad(x, g, n.conv));
          break;
        }
        case Op::ConvT2d: {
          const Tensor<S>& x = value(n.a);
          const Tensor<S>& w = value(n.b);
          // the adjoint of scatter is the direct conv with the same geometry
          ConvSpec back = n.conv;
          back.transposed = false;
          back.in_channels = w.dim(1);
          back.out_channels = w.dim(0);
          accumulate(n.a, microgan::conv2d(g, w, back));
          accumulate(n.b, conv_transpose2d_weight_grad(x, g, n.conv));
          break;
        }
        case Op::BatchNorm:
          backward_batchnorm(n, g);
          break;
        case Op::Activation:
          backward_activation(n, g);
          break;
        case Op::MeanAll: {
          const Tensor<S>& x = value(n.a);
          Tensor<S> dx(x.shape(), g[0] / static_cast<S>(x.numel()));
          accumulate(n.a, std::move(dx));
          break;
        }
        case Op::LogClamped: {
          const Tensor<S>& x = value(n.a);
          Tensor<S> dx(x.shape());
          for (int64_t j = 0; j < x.numel(); ++j)
            dx[j] = g[j] / (x[j] > n.s0 ? x[j] : n.s0);
          accumulate(n.a, std::move(dx));
          break;
        }
        case Op::Affine: {
          Tensor<S> dx(g.shape());
          for (int64_t j = 0; j < g.numel(); ++j) dx[j] = n.s0 * g[j];
          accumulate(n.a, std::move(dx));
          break;
        }
        case Op::Add: {
          accumulate(n.a, Tensor<S>(g));
          accumulate(n.b, Tensor<S>(g));
          break;
        }
      }
    }
  }

  // zero for nodes the loss never reached; only valid after backward()
  Tensor<S> grad(ValueId id) const {
    if (!ran_backward_)
      fail(ErrorKind::Spec, "grad queried before backward()");
    const Node& n = at(id);
    if (!n.has_grad) return Tensor<S>::zeros(n.value.shape());
    return n.grad;
  }

 private:
  enum class Op {
    Input,
    Conv2d,
    ConvT2d,
    BatchNorm,
    Activation,
    MeanAll,
    LogClamped,
    Affine,
    Add,
  };

  struct Node {
    Op op = Op::Input;
    ValueId a = -1, b = -1, c = -1;
    Tensor<S> value;
    Tensor<S> grad;
    bool has_grad = false;
    ConvSpec conv;
    Act act = Act::Relu;
    S s0 = S(0);  // slope / scale / clamp floor
    BnMode bn_mode = BnMode::Train;
    Tensor<S> bn_xhat;
    std::vector<S> bn_inv_std;
  };

  ValueId push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<ValueId>(nodes_.size() - 1);
  }

  const Node& at(ValueId id) const {
    if (id < 0 || static_cast<size_t>(id) >= nodes_.size())
      fail(ErrorKind::Spec, "tape id out of range");
    return nodes_[static_cast<size_t>(id)];
  }

  void accumulate(ValueId id, Tensor<S> delta) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.has_grad) {
      n.grad = std::move(delta);
      n.has_grad = true;
      return;
    }
    for (int64_t i = 0; i < n.grad.numel(); ++i) n.grad[i] += delta[i];
  }

  void backward_activation(const Node& n, const Tensor<S>& g) {
    const Tensor<S>& x = value(n.a);
    const Tensor<S>& y = n.value;
    Tensor<S> dx(x.shape());
    switch (n.act) {
      case Act::Relu:
        for (int64_t i = 0; i < x.numel(); ++i)
          dx[i] = x[i] > S(0) ? g[i] : S(0);
        break;
      case Act::LeakyRelu:
        for (int64_t i = 0; i < x.numel(); ++i)
          dx[i] = x[i] > S(0) ? g[i] : n.s0 * g[i];
        break;
      case Act::Tanh:
        for (int64_t i = 0; i < x.numel(); ++i)
          dx[i] = g[i] * (S(1) - y[i] * y[i]);
        break;
      case Act::Sigmoid:
        for (int64_t i = 0; i < x.numel(); ++i)
          dx[i] = g[i] * y[i] * (S(1) - y[i]);
        break;
    }
    accumulate(n.a, std::move(dx));
  }

  void backward_batchnorm(const Node& n, const Tensor<S>& g) {
    const Tensor<S>& x = value(n.a);
    const Tensor<S>& gamma = value(n.b);
    const int64_t nb = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
    const int64_t m = nb * plane;

    Tensor<S> dx(x.shape());
    Tensor<S> dgamma({c});
    Tensor<S> dbeta({c});

    for (int64_t ch = 0; ch < c; ++ch) {
      S sum_g = S(0), sum_gx = S(0);
      for (int64_t bi = 0; bi < nb; ++bi) {
        const S* gp = g.data() + (bi * c + ch) * plane;
        const S* xh = n.bn_xhat.data() + (bi * c + ch) * plane;
        for (int64_t i = 0; i < plane; ++i) {
          sum_g += gp[i];
          sum_gx += gp[i] * xh[i];
        }
      }
      dbeta[ch] = sum_g;
      dgamma[ch] = sum_gx;

      const S inv = n.bn_inv_std[static_cast<size_t>(ch)];
      const S gm = gamma[ch];
      if (n.bn_mode == BnMode::Train) {
        // batch statistics depend on x, so the whole Jacobian applies:
        // dx = gamma * inv / m * (m g - sum(g) - xhat * sum(g xhat))
        const S scale = gm * inv / static_cast<S>(m);
        for (int64_t bi = 0; bi < nb; ++bi) {
          const S* gp = g.data() + (bi * c + ch) * plane;
          const S* xh = n.bn_xhat.data() + (bi * c + ch) * plane;
          S* dp = dx.data() + (bi * c + ch) * plane;
          for (int64_t i = 0; i < plane; ++i)
            dp[i] = scale * (static_cast<S>(m) * gp[i] - sum_g - xh[i] * sum_gx);
        }
      } else {
        // running statistics are constants in eval mode
        const S scale = gm * inv;
        for (int64_t bi = 0; bi < nb; ++bi) {
          const S* gp = g.data() + (bi * c + ch) * plane;
          S* dp = dx.data() + (bi * c + ch) * plane;
          for (int64_t i = 0; i < plane; ++i) dp[i] = scale * gp[i];
        }
      }
    }
    accumulate(n.a, std::move(dx));
    accumulate(n.b, std::move(dgamma));
    accumulate(n.c, std::move(dbeta));
  }

  std::vector<Node> nodes_;
  bool ran_backward_ = false;
};

}  // namespace microgan
