#include "microgan/config_json.hpp"

#include <algorithm>
#include <vector>

namespace microgan {

void check_keys(const Json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!j.is_object())
    fail(ErrorKind::Config, where + " must be a JSON object");
  std::vector<std::string> bad;
  for (const auto& item : j.items()) {
    bool known = std::any_of(allowed.begin(), allowed.end(),
                             [&](const char* k) { return item.key() == k; });
    if (!known) bad.push_back(item.key());
  }
  if (!bad.empty()) {
    std::string msg = where + " has unknown key";
    if (bad.size() > 1) msg += "s";
    msg += ":";
    for (const auto& k : bad) msg += " \"" + k + "\"";
    fail(ErrorKind::Config, msg);
  }
}

namespace {

double get_double(const Json& j, const char* key, double fallback,
                  const std::string& where) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number())
    fail(ErrorKind::Config, where + "." + key + " must be a number");
  return v.get<double>();
}

int64_t get_int(const Json& j, const char* key, int64_t fallback,
                const std::string& where) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number_integer())
    fail(ErrorKind::Config, where + "." + key + " must be an integer");
  return v.get<int64_t>();
}

uint64_t get_uint(const Json& j, const char* key, uint64_t fallback,
                  const std::string& where) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number_integer() ||
      (!v.is_number_unsigned() && v.get<int64_t>() < 0))
    fail(ErrorKind::Config, where + "." + key + " must be a nonnegative integer");
  return v.get<uint64_t>();
}

bool get_bool(const Json& j, const char* key, bool fallback,
              const std::string& where) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_boolean())
    fail(ErrorKind::Config, where + "." + key + " must be a boolean");
  return v.get<bool>();
}

std::string get_enum(const Json& j, const char* key,
                     const std::string& fallback,
                     std::initializer_list<const char*> options,
                     const std::string& where) {
  std::string v = fallback;
  if (j.contains(key)) {
    if (!j.at(key).is_string())
      fail(ErrorKind::Config, where + "." + key + " must be a string");
    v = j.at(key).get<std::string>();
  }
  for (const char* o : options)
    if (v == o) return v;
  std::string msg = where + "." + key + " must be one of";
  for (const char* o : options) msg += std::string(" \"") + o + "\"";
  fail(ErrorKind::Config, msg + ", got \"" + v + "\"");
}

}  // namespace

Json train_config_to_json(const TrainConfig& cfg) {
  Json j;
  j["lr"] = cfg.lr;
  j["lr_d"] = cfg.lr_d ? Json(*cfg.lr_d) : Json(nullptr);
  j["lr_g"] = cfg.lr_g ? Json(*cfg.lr_g) : Json(nullptr);
  j["beta1"] = cfg.beta1;
  j["beta2"] = cfg.beta2;
  j["eps"] = cfg.eps;
  j["batch_size"] = cfg.batch_size;
  j["latent_dim"] = cfg.latent_dim;
  j["d_steps_per_cycle"] = cfg.d_steps_per_cycle;
  j["g_steps_per_cycle"] = cfg.g_steps_per_cycle;
  j["alternation_granularity"] =
      cfg.alternation_granularity == Granularity::Epoch ? "epoch" : "batch";
  j["total_iterations"] = cfg.total_iterations;
  j["seed"] = cfg.seed;
  j["loss_variant"] = cfg.loss_variant == GenLossVariant::NonSaturating
                          ? "non_saturating"
                          : "minimax";
  j["accuracy_window"] = cfg.accuracy_window;
  j["early_stop_accuracy"] = cfg.early_stop_accuracy;
  return j;
}

TrainConfig train_config_from_json(const Json& j, const std::string& where) {
  check_keys(j,
             {"lr", "lr_d", "lr_g", "beta1", "beta2", "eps", "batch_size",
              "latent_dim", "d_steps_per_cycle", "g_steps_per_cycle",
              "alternation_granularity", "total_iterations", "seed",
              "loss_variant", "accuracy_window", "early_stop_accuracy"},
             where);
  TrainConfig cfg;
  cfg.lr = get_double(j, "lr", cfg.lr, where);
  if (j.contains("lr_d") && !j.at("lr_d").is_null())
    cfg.lr_d = get_double(j, "lr_d", 0.0, where);
  if (j.contains("lr_g") && !j.at("lr_g").is_null())
    cfg.lr_g = get_double(j, "lr_g", 0.0, where);
  cfg.beta1 = get_double(j, "beta1", cfg.beta1, where);
  cfg.beta2 = get_double(j, "beta2", cfg.beta2, where);
  cfg.eps = get_double(j, "eps", cfg.eps, where);
  cfg.batch_size = get_int(j, "batch_size", cfg.batch_size, where);
  cfg.latent_dim = get_int(j, "latent_dim", cfg.latent_dim, where);
  cfg.d_steps_per_cycle =
      get_int(j, "d_steps_per_cycle", cfg.d_steps_per_cycle, where);
  cfg.g_steps_per_cycle =
      get_int(j, "g_steps_per_cycle", cfg.g_steps_per_cycle, where);
  cfg.alternation_granularity =
      get_enum(j, "alternation_granularity", "batch", {"batch", "epoch"},
               where) == "epoch"
          ? Granularity::Epoch
          : Granularity::Batch;
  cfg.total_iterations =
      get_int(j, "total_iterations", cfg.total_iterations, where);
  cfg.seed = get_uint(j, "seed", cfg.seed, where);
  cfg.loss_variant = get_enum(j, "loss_variant", "minimax",
                              {"minimax", "non_saturating"}, where) ==
                             "non_saturating"
                         ? GenLossVariant::NonSaturating
                         : GenLossVariant::Minimax;
  cfg.accuracy_window =
      get_int(j, "accuracy_window", cfg.accuracy_window, where);
  cfg.early_stop_accuracy =
      get_bool(j, "early_stop_accuracy", cfg.early_stop_accuracy, where);
  cfg.validate();
  return cfg;
}

Json init_spec_to_json(const InitSpec& spec) {
  Json j;
  j["conv_weight_mean"] = spec.conv_weight_mean;
  j["conv_weight_std"] = spec.conv_weight_std;
  j["bn_gamma_mean"] = spec.bn_gamma_mean;
  j["bn_gamma_std"] = spec.bn_gamma_std;
  j["bn_beta"] = spec.bn_beta;
  return j;
}

InitSpec init_spec_from_json(const Json& j, const std::string& where) {
  check_keys(j,
             {"conv_weight_mean", "conv_weight_std", "bn_gamma_mean",
              "bn_gamma_std", "bn_beta"},
             where);
  InitSpec spec;
  spec.conv_weight_mean =
      get_double(j, "conv_weight_mean", spec.conv_weight_mean, where);
  spec.conv_weight_std =
      get_double(j, "conv_weight_std", spec.conv_weight_std, where);
  spec.bn_gamma_mean = get_double(j, "bn_gamma_mean", spec.bn_gamma_mean, where);
  spec.bn_gamma_std = get_double(j, "bn_gamma_std", spec.bn_gamma_std, where);
  spec.bn_beta = get_double(j, "bn_beta", spec.bn_beta, where);
  spec.validate();
  return spec;
}

Json augment_spec_to_json(const AugmentSpec& spec) {
  Json j;
  j["width_shift_range"] = spec.width_shift_range;
  j["height_shift_range"] = spec.height_shift_range;
  j["shear_range"] = spec.shear_range;
  j["zoom_range"] = spec.zoom_range;
  j["horizontal_flip"] = spec.horizontal_flip;
  j["vertical_flip"] = spec.vertical_flip;
  j["fill_mode"] = spec.fill_mode == FillMode::Constant ? "constant" : "nearest";
  j["fill_value"] = static_cast<int>(spec.fill_value);
  j["interpolation"] =
      spec.interpolation == Interp::Nearest ? "nearest" : "bilinear";
  return j;
}

AugmentSpec augment_spec_from_json(const Json& j, const std::string& where) {
  check_keys(j,
             {"width_shift_range", "height_shift_range", "shear_range",
              "zoom_range", "horizontal_flip", "vertical_flip", "fill_mode",
              "fill_value", "interpolation"},
             where);
  AugmentSpec spec;
  spec.width_shift_range =
      get_double(j, "width_shift_range", spec.width_shift_range, where);
  spec.height_shift_range =
      get_double(j, "height_shift_range", spec.height_shift_range, where);
  spec.shear_range = get_double(j, "shear_range", spec.shear_range, where);
  spec.zoom_range = get_double(j, "zoom_range", spec.zoom_range, where);
  spec.horizontal_flip =
      get_bool(j, "horizontal_flip", spec.horizontal_flip, where);
  spec.vertical_flip = get_bool(j, "vertical_flip", spec.vertical_flip, where);
  spec.fill_mode = get_enum(j, "fill_mode", "nearest", {"nearest", "constant"},
                            where) == "constant"
                       ? FillMode::Constant
                       : FillMode::Nearest;
  int64_t fill = get_int(j, "fill_value", spec.fill_value, where);
  if (fill < 0 || fill > 255)
    fail(ErrorKind::Config, where + ".fill_value must lie in [0, 255]");
  spec.fill_value = static_cast<uint8_t>(fill);
  spec.interpolation = get_enum(j, "interpolation", "bilinear",
                                {"nearest", "bilinear"}, where) == "nearest"
                           ? Interp::Nearest
                           : Interp::Bilinear;
  spec.validate();
  return spec;
}

Json model_scale_to_json(const ModelScale& scale) {
  Json j;
  j["image_size"] = scale.image_size;
  j["channel_div"] = scale.channel_div;
  return j;
}

ModelScale model_scale_from_json(const Json& j, const std::string& where) {
  check_keys(j, {"image_size", "channel_div"}, where);
  ModelScale scale;
  scale.image_size = get_int(j, "image_size", scale.image_size, where);
  scale.channel_div = get_int(j, "channel_div", scale.channel_div, where);
  try {
    scale.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Config, where + ": " + e.what());
  }
  return scale;
}

}  // namespace microgan
