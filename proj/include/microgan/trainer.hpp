#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "microgan/adam.hpp"
#include "microgan/dataset.hpp"
#include "microgan/layers.hpp"
#include "microgan/losses.hpp"

namespace microgan {

enum class Granularity { Batch, Epoch };

struct TrainConfig {
  double lr = 0.0005;
  std::optional<double> lr_d;  // override for D; follows lr when unset
  std::optional<double> lr_g;  // override for G
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t batch_size = 64;
  int64_t latent_dim = 1000;
  int64_t d_steps_per_cycle = 1;
  int64_t g_steps_per_cycle = 1;
  Granularity alternation_granularity = Granularity::Batch;
  int64_t total_iterations = 0;
  uint64_t seed = 0;
  GenLossVariant loss_variant = GenLossVariant::Minimax;
  int64_t accuracy_window = 50;
  bool early_stop_accuracy = false;

  void validate() const {
    auto check_lr = [](double v, const char* what) {
      if (!(v > 0) || !(v < 1))
        fail(ErrorKind::Config, std::string(what) + " must lie in (0, 1)");
    };
    check_lr(lr, "lr");
    if (lr_d) check_lr(*lr_d, "lr_d");
    if (lr_g) check_lr(*lr_g, "lr_g");
    if (!(beta1 >= 0) || !(beta1 < 1) || !(beta2 >= 0) || !(beta2 < 1))
      fail(ErrorKind::Config, "betas must lie in [0, 1)");
    if (!(eps > 0)) fail(ErrorKind::Config, "eps must be > 0");
    if (batch_size < 2)
      fail(ErrorKind::Config,
           "batch_size must be >= 2 (train-mode batchnorm needs statistics)");
    if (latent_dim < 1) fail(ErrorKind::Config, "latent_dim must be >= 1");
    if (d_steps_per_cycle < 1 || g_steps_per_cycle < 1)
      fail(ErrorKind::Config, "steps per cycle must be >= 1");
    if (total_iterations < 0)
      fail(ErrorKind::Config, "total_iterations must be >= 0");
    if (accuracy_window < 1)
      fail(ErrorKind::Config, "accuracy_window must be >= 1");
  }

  AdamConfig adam_for_d() const {
    return AdamConfig{lr_d.value_or(lr), beta1, beta2, eps};
  }
  AdamConfig adam_for_g() const {
    return AdamConfig{lr_g.value_or(lr), beta1, beta2, eps};
  }
};

// One row per alternation cycle: the discriminator numbers come from its
// last update in the cycle, the generator loss from its last update.
struct LossTraceRow {
  int64_t iteration = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double d_acc_real = 0.0;
  double d_acc_fake = 0.0;
};

using LossTrace = std::vector<LossTraceRow>;

// Everything needed to continue a run exactly where it stopped.
template <typename S>
struct TrainerState {
  ModelScale scale;
  TrainConfig config;
  int64_t iteration = 0;
  int64_t epoch = 0;
  int64_t cursor = 0;
  std::string rng_state;
  Sequential<S> generator;
  Sequential<S> discriminator;
  AdamState<S> adam_g;
  AdamState<S> adam_d;
};

// Alternating GAN training. One iteration is one cycle of d_steps
// discriminator updates followed by g_steps generator updates (each scaled
// to whole epochs under epoch granularity). The real-data order is a
// per-epoch permutation derived purely from (seed, epoch), so a restored run
// walks the same batches as an uninterrupted one.
template <typename S>
class Trainer {
 public:
  Trainer(const TrainConfig& cfg, const ModelScale& scale, Sequential<S> g,
          Sequential<S> d)
      : cfg_(cfg), scale_(scale), g_(std::move(g)), d_(std::move(d)),
        rng_(splitmix64(cfg.seed)) {
    cfg_.validate();
    scale_.validate();
    adam_g_.cfg = cfg_.adam_for_g();
    adam_d_.cfg = cfg_.adam_for_d();
  }

  // dataset is borrowed and must outlive the trainer's run() calls
  void set_dataset(const Dataset* dataset) { dataset_ = dataset; }

  void run(int64_t target_iterations,
           const std::function<void(const LossTraceRow&)>& on_iteration = {}) {
    if (!dataset_) fail(ErrorKind::Config, "trainer has no dataset attached");
    if (dataset_->size() < cfg_.batch_size)
      fail(ErrorKind::Config,
           "dataset of " + std::to_string(dataset_->size()) +
               " items cannot fill batches of " +
               std::to_string(cfg_.batch_size));
    if (perm_.empty()) reshuffle();
    while (iteration_ < target_iterations && !stopped_early_) {
      step();
      if (on_iteration) on_iteration(trace_.back());
      if (cfg_.early_stop_accuracy &&
          accuracy_in_band(trace_, cfg_.accuracy_window, 0.45, 0.55))
        stopped_early_ = true;
    }
  }

  // one full alternation cycle
  void step() {
    const int64_t per_unit =
        cfg_.alternation_granularity == Granularity::Epoch ? steps_per_epoch()
                                                           : 1;
    LossTraceRow row;
    row.iteration = iteration_;
    for (int64_t i = 0; i < cfg_.d_steps_per_cycle * per_unit; ++i)
      d_update(row);
    for (int64_t i = 0; i < cfg_.g_steps_per_cycle * per_unit; ++i)
      g_update(row);
    trace_.push_back(row);
    ++iteration_;
  }

  // true when the mean combined accuracy over the last `window` rows sits
  // inside [lo, hi]; that plateau near 1/2 is the stop signal
  static bool accuracy_in_band(const LossTrace& trace, int64_t window,
                               double lo, double hi) {
    if (static_cast<int64_t>(trace.size()) < window) return false;
    double sum = 0.0;
    for (size_t i = trace.size() - static_cast<size_t>(window);
         i < trace.size(); ++i)
      sum += 0.5 * (trace[i].d_acc_real + trace[i].d_acc_fake);
    double mean = sum / static_cast<double>(window);
    return mean >= lo && mean <= hi;
  }

  // fixed latent probe derived from the seed; not consumed from the
  // training stream, so snapshots never perturb the run
  Tensor<S> probe_latent(int64_t n) {
    Rng probe = Rng::from_stream(cfg_.seed, kProbeStream);
    return sample_latent<S>(n, cfg_.latent_dim, probe);
  }

  TrainerState<S> snapshot() const {
    TrainerState<S> st;
    st.scale = scale_;
    st.config = cfg_;
    st.iteration = iteration_;
    st.epoch = epoch_;
    st.cursor = cursor_;
    st.rng_state = rng_.state();
    st.generator = g_;
    st.discriminator = d_;
    st.adam_g = adam_g_;
    st.adam_d = adam_d_;
    return st;
  }

  static Trainer restore(TrainerState<S> st) {
    Trainer t(st.config, st.scale, std::move(st.generator),
              std::move(st.discriminator));
    t.adam_g_ = std::move(st.adam_g);
    t.adam_d_ = std::move(st.adam_d);
    t.iteration_ = st.iteration;
    t.epoch_ = st.epoch;
    t.cursor_ = st.cursor;
    t.rng_.set_state(st.rng_state);
    return t;
  }

  const LossTrace& trace() const { return trace_; }
  int64_t iteration() const { return iteration_; }
  bool stopped_early() const { return stopped_early_; }
  Sequential<S>& generator() { return g_; }
  Sequential<S>& discriminator() { return d_; }
  const TrainConfig& config() const { return cfg_; }
  const ModelScale& scale() const { return scale_; }
  const AdamState<S>& adam_g() const { return adam_g_; }
  const AdamState<S>& adam_d() const { return adam_d_; }

 private:
  static constexpr uint64_t kEpochStream = 0x45504f4348ull;
  static constexpr uint64_t kProbeStream = 0x50524f4245ull;

  int64_t steps_per_epoch() const {
    return dataset_->size() / cfg_.batch_size;
  }

  void reshuffle() {
    Rng er = Rng::from_stream(cfg_.seed,
                              kEpochStream + static_cast<uint64_t>(epoch_));
    perm_ = shuffled_indices(dataset_->size(), er);
  }

  Tensor<S> next_real_batch() {
    if (cursor_ + cfg_.batch_size > dataset_->size()) {
      ++epoch_;
      cursor_ = 0;
      reshuffle();
    }
    const ImageU8& first =
        dataset_->items[static_cast<size_t>(perm_[static_cast<size_t>(cursor_)])];
    Tensor<S> batch({cfg_.batch_size, 3, first.height, first.width});
    const int64_t item = 3 * first.height * first.width;
    for (int64_t i = 0; i < cfg_.batch_size; ++i) {
      Tensor<S> t = to_model_range<S>(
          dataset_->items[static_cast<size_t>(perm_[static_cast<size_t>(cursor_ + i)])]);
      if (t.numel() != item)
        fail(ErrorKind::Shape, "dataset items disagree in size");
      for (int64_t j = 0; j < item; ++j) batch[i * item + j] = t[j];
    }
    cursor_ += cfg_.batch_size;
    return batch;
  }

  // real batch and a detached fake batch; only D's parameters move. The
  // generator still runs in train mode, so its running stats advance, but
  // its parameters see no gradient.
  void d_update(LossTraceRow& row) {
    Tensor<S> real = next_real_batch();
    Tensor<S> z = sample_latent<S>(cfg_.batch_size, cfg_.latent_dim, rng_);
    Tensor<S> fake = g_.forward(z, BnMode::Train);

    Tape<S> tape;
    TapedModel<S> td(tape, d_);
    auto p_real = td.forward(tape, tape.input(std::move(real)), BnMode::Train);
    auto p_fake = td.forward(tape, tape.input(std::move(fake)), BnMode::Train);
    auto loss = discriminator_loss_node(tape, p_real, p_fake);

    const S loss_val = tape.value(loss)[0];
    if (!std::isfinite(static_cast<double>(loss_val)))
      fail(ErrorKind::Numeric, "non-finite discriminator loss at iteration " +
                                   std::to_string(iteration_));
    Accuracy acc = d_accuracy(tape.value(p_real), tape.value(p_fake));
    row.d_loss = static_cast<double>(loss_val);
    row.d_acc_real = acc.real;
    row.d_acc_fake = acc.fake;

    tape.backward(loss);
    adam_step(param_pointers(d_), td.grads(tape), adam_d_);
  }

  // fresh latent through G and D, recorded end to end; only G's parameters
  // move. D still runs in train mode per the alternating scheme, so its
  // running stats advance here too.
  void g_update(LossTraceRow& row) {
    Tape<S> tape;
    TapedModel<S> tg(tape, g_);
    TapedModel<S> td(tape, d_);
    auto z = tape.input(sample_latent<S>(cfg_.batch_size, cfg_.latent_dim, rng_));
    auto fake = tg.forward(tape, z, BnMode::Train);
    auto p_fake = td.forward(tape, fake, BnMode::Train);
    auto loss = generator_loss_node(tape, p_fake, cfg_.loss_variant);

    const S loss_val = tape.value(loss)[0];
    if (!std::isfinite(static_cast<double>(loss_val)))
      fail(ErrorKind::Numeric, "non-finite generator loss at iteration " +
                                   std::to_string(iteration_));
    row.g_loss = static_cast<double>(loss_val);

    tape.backward(loss);
    adam_step(param_pointers(g_), tg.grads(tape), adam_g_);
  }

  static std::map<std::string, Tensor<S>*> param_pointers(Sequential<S>& m) {
    std::map<std::string, Tensor<S>*> out;
    m.for_each_param(
        [&](const std::string& name, Tensor<S>& t) { out[name] = &t; });
    return out;
  }

  TrainConfig cfg_;
  ModelScale scale_;
  Sequential<S> g_, d_;
  AdamState<S> adam_g_, adam_d_;
  Rng rng_;
  const Dataset* dataset_ = nullptr;
  std::vector<int64_t> perm_;
  int64_t iteration_ = 0;
  int64_t epoch_ = 0;
  int64_t cursor_ = 0;
  bool stopped_early_ = false;
  LossTrace trace_;
};

// Fresh models drawn from an init stream derived from the training seed, so
// a (seed, scale, init) triple always names the same starting point.
template <typename S>
Trainer<S> make_trainer(const TrainConfig& cfg, const ModelScale& scale,
                        const InitSpec& init) {
  Rng ir = Rng::from_stream(cfg.seed, 0x494e4954ull);
  Sequential<S> g = build_generator<S>(scale);
  Sequential<S> d = build_discriminator<S>(scale);
  init_weights(g, init, ir);
  init_weights(d, init, ir);
  return Trainer<S>(cfg, scale, std::move(g), std::move(d));
}

}  // namespace microgan
