#pragma once

#include <string>

#include "microgan/config_json.hpp"

namespace microgan {

// Artifact cadence during training. Zeroes mean "final checkpoint only" and
// "no image snapshots".
struct OutputConfig {
  int64_t checkpoint_every = 0;
  int64_t snapshot_every = 0;
  int64_t snapshot_count = 16;

  void validate() const {
    if (checkpoint_every < 0 || snapshot_every < 0)
      fail(ErrorKind::Config, "output cadences must be >= 0");
    if (snapshot_count < 1)
      fail(ErrorKind::Config, "snapshot_count must be >= 1");
  }
};

// Full description of one training run. Unknown keys anywhere are rejected;
// parsing then re-serializing materializes every default, so the config
// written next to a run is self-describing.
struct RunConfig {
  TrainConfig train;
  InitSpec init;
  ModelScale model;
  std::string data_dir;
  std::string out_dir;
  OutputConfig output;
};

RunConfig run_config_from_json(const Json& j);
Json run_config_to_json(const RunConfig& rc);
RunConfig load_run_config(const std::string& path);

}  // namespace microgan
