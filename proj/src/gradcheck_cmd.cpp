#include <cmath>
#include <iomanip>
#include <iostream>
#include <map>
#include <vector>

#include "microgan/commands.hpp"
#include "microgan/gradcheck.hpp"
#include "microgan/layers.hpp"
#include "microgan/losses.hpp"

namespace microgan {

namespace {

using TapeD = Tape<double>;
using Ids = std::map<std::string, TapeD::ValueId>;
using Builder = std::function<TapeD::ValueId(TapeD&, const Ids&)>;

Tensor<double> randn(const Shape& shape, Rng& rng, double scale = 1.0) {
  Tensor<double> t(shape);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = scale * rng.normal();
  return t;
}

// values kept away from zero so relu-family kinks never sit within the
// finite-difference step
Tensor<double> rand_offside(const Shape& shape, Rng& rng) {
  Tensor<double> t(shape);
  for (int64_t i = 0; i < t.numel(); ++i) {
    double mag = 0.05 + 0.95 * rng.uniform();
    t[i] = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

Tensor<double> rand_in(const Shape& shape, Rng& rng, double lo, double hi) {
  Tensor<double> t(shape);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform_in(lo, hi);
  return t;
}

struct RuleCheck {
  std::string name;
  NamedTensors<double> params;
  Builder build;
};

GradCheckReport run_rule(const RuleCheck& rule, double h, int64_t max_coords) {
  auto loss_fn = [&rule](const NamedTensors<double>& p) -> double {
    TapeD tape;
    Ids ids;
    for (const auto& [k, v] : p) ids[k] = tape.input(v);
    return tape.value(rule.build(tape, ids))[0];
  };
  auto grad_fn = [&rule](const NamedTensors<double>& p) {
    TapeD tape;
    Ids ids;
    for (const auto& [k, v] : p) ids[k] = tape.input(v);
    tape.backward(rule.build(tape, ids));
    NamedTensors<double> out;
    for (const auto& [k, id] : ids) out.emplace(k, tape.grad(id));
    return out;
  };
  return grad_check<double>(loss_fn, grad_fn, rule.params, h, max_coords,
                            0xC0FFEEull);
}

std::vector<RuleCheck> elementary_rules(Rng& rng) {
  std::vector<RuleCheck> rules;

  {
    RuleCheck r;
    r.name = "conv2d";
    r.params["x"] = randn({2, 3, 5, 5}, rng);
    r.params["w"] = randn({4, 3, 3, 3}, rng, 0.5);
    ConvSpec spec = ConvSpec::conv(3, 4, 3, 2, 1);
    r.build = [spec](TapeD& t, const Ids& ids) {
      return t.mean_all(
          t.activation(t.conv2d(ids.at("x"), ids.at("w"), spec), Act::Tanh));
    };
    rules.push_back(std::move(r));
  }
  {
    RuleCheck r;
    r.name = "conv_transpose2d";
    r.params["x"] = randn({2, 3, 3, 3}, rng);
    r.params["w"] = randn({3, 4, 4, 4}, rng, 0.5);
    ConvSpec spec = ConvSpec::conv_transpose(3, 4, 4, 2, 1);
    r.build = [spec](TapeD& t, const Ids& ids) {
      return t.mean_all(t.activation(
          t.conv_transpose2d(ids.at("x"), ids.at("w"), spec), Act::Tanh));
    };
    rules.push_back(std::move(r));
  }
  {
    RuleCheck r;
    r.name = "batchnorm_train";
    r.params["x"] = randn({3, 2, 2, 2}, rng);
    r.params["gamma"] = rand_in({2}, rng, 0.5, 1.5);
    r.params["beta"] = randn({2}, rng, 0.3);
    r.build = [](TapeD& t, const Ids& ids) {
      Tensor<double> rm({2}), rv({2}, 1.0);
      auto y = t.batchnorm2d(ids.at("x"), ids.at("gamma"), ids.at("beta"), rm,
                             rv, BnMode::Train, 1e-5, 0.1);
      return t.mean_all(t.activation(y, Act::Tanh));
    };
    rules.push_back(std::move(r));
  }
  {
    RuleCheck r;
    r.name = "batchnorm_eval";
    r.params["x"] = randn({3, 2, 2, 2}, rng);
    r.params["gamma"] = rand_in({2}, rng, 0.5, 1.5);
    r.params["beta"] = randn({2}, rng, 0.3);
    r.build = [](TapeD& t, const Ids& ids) {
      Tensor<double> rm({2}, 0.3), rv({2}, 1.7);
      auto y = t.batchnorm2d(ids.at("x"), ids.at("gamma"), ids.at("beta"), rm,
                             rv, BnMode::Eval, 1e-5, 0.1);
      return t.mean_all(t.activation(y, Act::Tanh));
    };
    rules.push_back(std::move(r));
  }
  {
    RuleCheck r;
    r.name = "relu";
    r.params["x"] = rand_offside({2, 3, 4, 4}, rng);
    r.build = [](TapeD& t, const Ids& ids) {
      return t.mean_all(t.activation(ids.at("x"), Act::Relu));
    };
    rules.push_back(std::move(r));
  }
  {
    RuleCheck r;
    r.name = "leaky_relu";
    r.params["x"] = rand_offside({2, 3, 4, 4}, rng);
    r.build = [](TapeD& t, const Ids& ids) {
      return t.mean_all(t.activation(ids.at("x"), Act::LeakyRelu, 0.2));
    };
    rules.push_back(std::move(r));
  }
  {
    RuleCheck r;
    r.name = "tanh";
    r.params["x"] = randn({2, 3, 4, 4}, rng);
    r.build = [](TapeD& t, const Ids& ids) {
      return t.mean_all(t.activation(ids.at("x"), Act::Tanh));
    };
    rules.push_back(std::move(r));
  }
  {
    RuleCheck r;
    r.name = "sigmoid";
    r.params["x"] = randn({2, 3, 4, 4}, rng);
    r.build = [](TapeD& t, const Ids& ids) {
      return t.mean_all(t.activation(ids.at("x"), Act::Sigmoid));
    };
    rules.push_back(std::move(r));
  }
  {
    RuleCheck r;
    r.name = "mean";
    r.params["x"] = randn({17}, rng);
    r.build = [](TapeD& t, const Ids& ids) { return t.mean_all(ids.at("x")); };
    rules.push_back(std::move(r));
  }
  {
    RuleCheck r;
    r.name = "log";
    r.params["x"] = rand_in({7}, rng, 0.2, 1.3);
    r.build = [](TapeD& t, const Ids& ids) {
      return t.mean_all(t.log_clamped(ids.at("x"), kLogClampFloor<double>));
    };
    rules.push_back(std::move(r));
  }
  {
    RuleCheck r;
    r.name = "affine";
    r.params["x"] = randn({9}, rng);
    r.build = [](TapeD& t, const Ids& ids) {
      return t.mean_all(t.affine(ids.at("x"), 1.7, -0.3));
    };
    rules.push_back(std::move(r));
  }
  {
    RuleCheck r;
    r.name = "add";
    r.params["x"] = randn({6}, rng);
    r.params["y"] = randn({6}, rng);
    r.build = [](TapeD& t, const Ids& ids) {
      return t.mean_all(
          t.add(t.activation(ids.at("x"), Act::Tanh), ids.at("y")));
    };
    rules.push_back(std::move(r));
  }
  return rules;
}

// full shrunk-model audits: every parameter of G and D against finite
// differences of real losses
GradCheckReport check_generator(const ModelScale& scale, Rng& rng, double h,
                                int64_t max_coords) {
  Sequential<double> proto = build_generator<double>(scale);
  Rng ir(splitmix64(11));
  init_weights(proto, InitSpec{}, ir);
  NamedTensors<double> params;
  proto.for_each_param([&](const std::string& n, Tensor<double>& t) {
    params.emplace(n, t);
  });
  const Tensor<double> z = randn({2, scale.latent_channels(), 1, 1}, rng);

  auto forward = [proto, z](const NamedTensors<double>& p, Tape<double>& tape)
      -> Tape<double>::ValueId {
    Sequential<double> g = proto;
    g.for_each_param([&](const std::string& n, Tensor<double>& t) {
      t = p.at(n);
    });
    TapedModel<double> tm(tape, g);
    auto out = tm.forward(tape, tape.input(z), BnMode::Train);
    return tape.mean_all(out);
  };
  auto loss_fn = [forward](const NamedTensors<double>& p) -> double {
    Tape<double> tape;
    return tape.value(forward(p, tape))[0];
  };
  auto grad_fn = [proto, z](const NamedTensors<double>& p) {
    Sequential<double> g = proto;
    g.for_each_param([&](const std::string& n, Tensor<double>& t) {
      t = p.at(n);
    });
    Tape<double> tape;
    TapedModel<double> tm(tape, g);
    auto out = tm.forward(tape, tape.input(z), BnMode::Train);
    tape.backward(tape.mean_all(out));
    return tm.grads(tape);
  };
  return grad_check<double>(loss_fn, grad_fn, params, h, max_coords,
                            0xC0FFEEull);
}

GradCheckReport check_discriminator(const ModelScale& scale, Rng& rng,
                                    double h, int64_t max_coords) {
  Sequential<double> proto = build_discriminator<double>(scale);
  Rng ir(splitmix64(13));
  init_weights(proto, InitSpec{}, ir);
  NamedTensors<double> params;
  proto.for_each_param([&](const std::string& n, Tensor<double>& t) {
    params.emplace(n, t);
  });
  const Tensor<double> real =
      rand_in({2, 3, scale.image_size, scale.image_size}, rng, -0.9, 0.9);
  const Tensor<double> fake =
      rand_in({2, 3, scale.image_size, scale.image_size}, rng, -0.9, 0.9);

  auto loss_fn = [proto, real, fake](const NamedTensors<double>& p) -> double {
    Sequential<double> d = proto;
    d.for_each_param([&](const std::string& n, Tensor<double>& t) {
      t = p.at(n);
    });
    Tape<double> tape;
    TapedModel<double> tm(tape, d);
    auto p_real = tm.forward(tape, tape.input(real), BnMode::Train);
    auto p_fake = tm.forward(tape, tape.input(fake), BnMode::Train);
    return tape.value(discriminator_loss_node(tape, p_real, p_fake))[0];
  };
  auto grad_fn = [proto, real, fake](const NamedTensors<double>& p) {
    Sequential<double> d = proto;
    d.for_each_param([&](const std::string& n, Tensor<double>& t) {
      t = p.at(n);
    });
    Tape<double> tape;
    TapedModel<double> tm(tape, d);
    auto p_real = tm.forward(tape, tape.input(real), BnMode::Train);
    auto p_fake = tm.forward(tape, tape.input(fake), BnMode::Train);
    tape.backward(discriminator_loss_node(tape, p_real, p_fake));
    return tm.grads(tape);
  };
  return grad_check<double>(loss_fn, grad_fn, params, h, max_coords,
                            0xC0FFEEull);
}

void print_report(std::ostream& out, const std::string& name,
                  const GradCheckReport& rep, double tol, bool& all_ok,
                  double& worst, std::string& worst_name) {
  for (const auto& e : rep.entries) {
    const bool ok = e.max_rel_err < tol;
    all_ok = all_ok && ok;
    if (e.max_rel_err > worst) {
      worst = e.max_rel_err;
      worst_name = name + "/" + e.param;
    }
    out << std::left << std::setw(34) << (name + "/" + e.param)
        << std::right << std::setw(7) << e.coords_checked << "  "
        << std::scientific << std::setprecision(3) << e.max_rel_err << "  "
        << (ok ? "PASS" : "FAIL") << "\n";
  }
}

}  // namespace

int cmd_gradcheck(int64_t image_size, int64_t channel_div, double tol,
                  double h, std::ostream& out) {
  if (!(tol > 0)) fail(ErrorKind::Config, "tol must be > 0");
  if (!(h > 0)) fail(ErrorKind::Config, "h must be > 0");
  ModelScale scale{image_size, channel_div};
  scale.validate();

  const int64_t max_coords = 64;
  Rng rng(splitmix64(0x6772616463686bull));

  out << "gradient audit: double precision, h=" << h << ", tol=" << tol
      << ", probe cap " << max_coords << " coords/tensor\n";
  out << std::left << std::setw(34) << "gradient" << std::right
      << std::setw(7) << "coords" << "  " << "max_rel_err" << "  status\n";

  bool all_ok = true;
  double worst = 0.0;
  std::string worst_name;
  for (const RuleCheck& rule : elementary_rules(rng)) {
    GradCheckReport rep = run_rule(rule, h, max_coords);
    print_report(out, rule.name, rep, tol, all_ok, worst, worst_name);
  }

  out << "generator model " << scale.image_size << "px /" << scale.channel_div
      << " channels\n";
  print_report(out, "generator",
               check_generator(scale, rng, h, max_coords), tol, all_ok, worst,
               worst_name);
  out << "discriminator model " << scale.image_size << "px /"
      << scale.channel_div << " channels\n";
  print_report(out, "discriminator",
               check_discriminator(scale, rng, h, max_coords), tol, all_ok,
               worst, worst_name);

  out << "worst: " << std::scientific << std::setprecision(3) << worst
      << " (" << worst_name << ")\n";
  out << (all_ok ? "gradcheck: PASS" : "gradcheck: FAIL") << "\n";
  return all_ok ? 0 : 1;
}

}  // namespace microgan
