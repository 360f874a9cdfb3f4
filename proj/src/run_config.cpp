#include "microgan/run_config.hpp"

#include <fstream>

namespace microgan {

RunConfig run_config_from_json(const Json& j) {
  check_keys(j, {"train", "init", "model", "paths", "output"}, "config");
  RunConfig rc;

  if (j.contains("model"))
    rc.model = model_scale_from_json(j.at("model"), "model");

  Json train = j.contains("train") ? j.at("train") : Json::object();
  if (!train.is_object())
    fail(ErrorKind::Config, "config.train must be a JSON object");
  // the latent width is owned by the model scale; an explicit train value
  // must agree with it
  if (!train.contains("latent_dim"))
    train["latent_dim"] = rc.model.latent_channels();
  rc.train = train_config_from_json(train, "train");
  if (rc.train.latent_dim != rc.model.latent_channels())
    fail(ErrorKind::Config,
         "train.latent_dim " + std::to_string(rc.train.latent_dim) +
             " contradicts the model scale's latent width " +
             std::to_string(rc.model.latent_channels()));

  if (j.contains("init")) rc.init = init_spec_from_json(j.at("init"), "init");

  if (j.contains("paths")) {
    const Json& p = j.at("paths");
    check_keys(p, {"data_dir", "out_dir"}, "paths");
    if (p.contains("data_dir")) {
      if (!p.at("data_dir").is_string())
        fail(ErrorKind::Config, "paths.data_dir must be a string");
      rc.data_dir = p.at("data_dir").get<std::string>();
    }
    if (p.contains("out_dir")) {
      if (!p.at("out_dir").is_string())
        fail(ErrorKind::Config, "paths.out_dir must be a string");
      rc.out_dir = p.at("out_dir").get<std::string>();
    }
  }

  if (j.contains("output")) {
    const Json& o = j.at("output");
    check_keys(o, {"checkpoint_every", "snapshot_every", "snapshot_count"},
               "output");
    auto geti = [&](const char* key, int64_t fallback) {
      if (!o.contains(key)) return fallback;
      if (!o.at(key).is_number_integer())
        fail(ErrorKind::Config, std::string("output.") + key +
                                    " must be an integer");
      return o.at(key).get<int64_t>();
    };
    rc.output.checkpoint_every =
        geti("checkpoint_every", rc.output.checkpoint_every);
    rc.output.snapshot_every = geti("snapshot_every", rc.output.snapshot_every);
    rc.output.snapshot_count = geti("snapshot_count", rc.output.snapshot_count);
  }
  rc.output.validate();
  return rc;
}

Json run_config_to_json(const RunConfig& rc) {
  Json j;
  j["train"] = train_config_to_json(rc.train);
  j["init"] = init_spec_to_json(rc.init);
  j["model"] = model_scale_to_json(rc.model);
  j["paths"] = {{"data_dir", rc.data_dir}, {"out_dir", rc.out_dir}};
  j["output"] = {{"checkpoint_every", rc.output.checkpoint_every},
                 {"snapshot_every", rc.output.snapshot_every},
                 {"snapshot_count", rc.output.snapshot_count}};
  return j;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    fail(ErrorKind::Config, path + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace microgan
