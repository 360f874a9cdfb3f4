#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>

#include "microgan/augment.hpp"
#include "microgan/error.hpp"

namespace microgan {

// Exit contract: 0 success, 1 failed check, 2 bad input, 3 I/O failure,
// 4 numeric abort.
int exit_code_for(ErrorKind kind);

// Runs fn, translating thrown errors into the exit contract with a message
// on err.
int run_command(const std::function<int()>& fn, std::ostream& err);

struct AugmentCmdOptions {
  std::string input_dir;
  std::string output_dir;
  int64_t target_count = 0;
  uint64_t seed = 0;
  AugmentSpec spec;
};

// Expands the PNGs in input_dir to target_count images in output_dir
// (originals copied byte for byte, then augmented variants), plus a
// manifest.jsonl recording every item's provenance.
int cmd_augment(const AugmentCmdOptions& opt, std::ostream& out);

// Trains per the JSON config; writes trace.csv incrementally, the
// materialized config, periodic checkpoints/snapshots per the output
// cadence, and a final checkpoint. resume_checkpoint continues that state
// (architecture and train settings come from the checkpoint).
int cmd_train(const std::string& config_path,
              const std::string& resume_checkpoint, std::ostream& out);

// Decodes a checkpoint's generator and writes `count` eval-mode samples.
int cmd_sample(const std::string& checkpoint_path, int64_t count,
               uint64_t seed, const std::string& output_dir,
               std::ostream& out);

// Finite-difference audit of every backward rule plus shrunk
// generator/discriminator models, in double precision. Prints one line per
// audited gradient; exit 1 if any relative error reaches tol.
int cmd_gradcheck(int64_t image_size, int64_t channel_div, double tol,
                  double h, std::ostream& out);

// Renders a trace CSV to a standalone SVG.
int cmd_plot(const std::string& trace_csv, const std::string& out_svg,
             std::ostream& out);

}  // namespace microgan
