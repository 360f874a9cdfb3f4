#include "microgan/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <vector>

#include "microgan/checkpoint.hpp"
#include "microgan/config_json.hpp"
#include "microgan/dataset.hpp"
#include "microgan/gradcheck.hpp"
#include "microgan/run_config.hpp"
#include "microgan/trace_io.hpp"
#include "microgan/trainer.hpp"

namespace fs = std::filesystem;

namespace microgan {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io:
      return 3;
    case ErrorKind::Numeric:
      return 4;
    default:
      return 2;
  }
}

int run_command(const std::function<int()>& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

namespace {

std::vector<std::string> list_pngs(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    fail(ErrorKind::Config, dir + " is not a directory");
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") out.push_back(entry.path().string());
  }
  if (ec) fail(ErrorKind::Io, "cannot list " + dir + ": " + ec.message());
  std::sort(out.begin(), out.end());
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + dir + ": " + ec.message());
}

std::string zero_pad(int64_t value, int width) {
  std::ostringstream os;
  os << std::setw(width) << std::setfill('0') << value;
  return os.str();
}

void copy_bytes(const std::string& from, const std::string& to) {
  std::ifstream in(from, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + from);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  std::ofstream out(to, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + to + " for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) fail(ErrorKind::Io, "short write to " + to);
}

Json params_to_json(const AugmentParams& p) {
  return Json{{"shift_x", p.shift_x}, {"shift_y", p.shift_y},
              {"shear", p.shear},     {"zoom", p.zoom},
              {"flip_h", p.flip_h},   {"flip_v", p.flip_v}};
}

// n generator outputs tiled row-major into a near-square grid
ImageU8 tile_images(const Tensor<float>& batch) {
  const int64_t n = batch.dim(0), side_h = batch.dim(2), side_w = batch.dim(3);
  const int64_t cols =
      static_cast<int64_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  const int64_t rows = (n + cols - 1) / cols;
  ImageU8 grid(cols * side_w, rows * side_h);
  const int64_t item = 3 * side_h * side_w;
  for (int64_t i = 0; i < n; ++i) {
    Tensor<float> one({3, side_h, side_w});
    for (int64_t j = 0; j < item; ++j) one[j] = batch[i * item + j];
    ImageU8 im = from_model_range(one);
    const int64_t gx = (i % cols) * side_w, gy = (i / cols) * side_h;
    for (int64_t y = 0; y < side_h; ++y)
      for (int64_t x = 0; x < side_w; ++x)
        for (int c = 0; c < 3; ++c)
          grid.at(gx + x, gy + y, c) = im.at(x, y, c);
  }
  return grid;
}

}  // namespace

int cmd_augment(const AugmentCmdOptions& opt, std::ostream& out) {
  std::vector<std::string> files = list_pngs(opt.input_dir);
  if (files.empty())
    fail(ErrorKind::Config, "no PNG files in " + opt.input_dir);

  std::vector<ImageU8> sources;
  std::vector<std::string> names;
  sources.reserve(files.size());
  for (const std::string& f : files) {
    sources.push_back(load_png(f));
    names.push_back(fs::path(f).filename().string());
  }

  Dataset ds =
      expand_dataset(sources, names, opt.target_count, opt.spec, opt.seed);
  ensure_dir(opt.output_dir);

  const int width = std::max<int>(
      5, static_cast<int>(std::to_string(opt.target_count - 1).size()));
  std::ofstream manifest(opt.output_dir + "/manifest.jsonl", std::ios::trunc);
  if (!manifest)
    fail(ErrorKind::Io, "cannot open " + opt.output_dir + "/manifest.jsonl");

  for (int64_t k = 0; k < ds.size(); ++k) {
    const ProvenanceRecord& rec = ds.provenance[static_cast<size_t>(k)];
    const std::string name = "item_" + zero_pad(k, width) + ".png";
    const std::string path = opt.output_dir + "/" + name;
    if (rec.augmented)
      save_png(ds.items[static_cast<size_t>(k)], path);
    else
      copy_bytes(files[static_cast<size_t>(k)], path);

    Json line{{"index", k},
              {"source", rec.source},
              {"output", name},
              {"augmented", rec.augmented}};
    if (rec.augmented) line["params"] = params_to_json(rec.params);
    manifest << line.dump() << "\n";
  }
  manifest.flush();
  if (!manifest)
    fail(ErrorKind::Io, "write failed on " + opt.output_dir + "/manifest.jsonl");

  out << "sources: " << files.size() << "\n";
  out << "written: " << ds.size() << "\n";
  return 0;
}

int cmd_train(const std::string& config_path,
              const std::string& resume_checkpoint, std::ostream& out) {
  RunConfig rc = load_run_config(config_path);
  if (rc.data_dir.empty())
    fail(ErrorKind::Config, "config.paths.data_dir is required");
  if (rc.out_dir.empty())
    fail(ErrorKind::Config, "config.paths.out_dir is required");

  Trainer<float> trainer =
      resume_checkpoint.empty()
          ? make_trainer<float>(rc.train, rc.model, rc.init)
          : Trainer<float>::restore(load_checkpoint<float>(resume_checkpoint));
  // on resume, the checkpoint's settings drive training; the config file
  // still supplies the directories and output cadence
  const TrainConfig& cfg = trainer.config();
  const ModelScale& scale = trainer.scale();

  std::vector<std::string> files = list_pngs(rc.data_dir);
  if (files.empty()) fail(ErrorKind::Config, "no PNG files in " + rc.data_dir);
  Dataset ds;
  for (const std::string& f : files) {
    ds.items.push_back(load_image_for_training(f, scale.image_size));
    ProvenanceRecord rec;
    rec.index = ds.size() - 1;
    rec.source = fs::path(f).filename().string();
    ds.provenance.push_back(std::move(rec));
  }
  trainer.set_dataset(&ds);

  ensure_dir(rc.out_dir);
  {
    RunConfig materialized = rc;
    materialized.train = cfg;
    std::ofstream cj(rc.out_dir + "/config.json", std::ios::trunc);
    if (!cj) fail(ErrorKind::Io, "cannot open " + rc.out_dir + "/config.json");
    cj << run_config_to_json(materialized).dump(2) << "\n";
  }

  TraceCsvWriter csv(rc.out_dir + "/trace.csv");
  if (rc.output.snapshot_every > 0) ensure_dir(rc.out_dir + "/samples");

  const int64_t target = cfg.total_iterations;
  trainer.run(target, [&](const LossTraceRow& row) {
    csv.append(row);
    const int64_t done = row.iteration + 1;
    if (rc.output.checkpoint_every > 0 &&
        done % rc.output.checkpoint_every == 0 && done != target) {
      save_checkpoint(trainer.snapshot(),
                      rc.out_dir + "/ckpt_" + zero_pad(done, 6) + ".mgan");
    }
    if (rc.output.snapshot_every > 0 && done % rc.output.snapshot_every == 0) {
      Tensor<float> z = trainer.probe_latent(rc.output.snapshot_count);
      Tensor<float> imgs = trainer.generator().forward(z, BnMode::Eval);
      save_png(tile_images(imgs),
               rc.out_dir + "/samples/iter_" + zero_pad(done, 6) + ".png");
    }
  });

  save_checkpoint(trainer.snapshot(), rc.out_dir + "/final.mgan");
  out << "trained to iteration " << trainer.iteration();
  if (trainer.stopped_early()) out << " (early stop: accuracy plateau)";
  out << "\n";
  out << "final checkpoint: " << rc.out_dir + "/final.mgan" << "\n";
  return 0;
}

int cmd_sample(const std::string& checkpoint_path, int64_t count,
               uint64_t seed, const std::string& output_dir,
               std::ostream& out) {
  if (count < 1) fail(ErrorKind::Config, "sample count must be >= 1");
  TrainerState<float> st = load_checkpoint<float>(checkpoint_path);
  ensure_dir(output_dir);

  Rng rng(splitmix64(seed));
  Tensor<float> z = sample_latent<float>(count, st.config.latent_dim, rng);
  Tensor<float> imgs = st.generator.forward(z, BnMode::Eval);

  const int64_t item = 3 * imgs.dim(2) * imgs.dim(3);
  const int width =
      std::max<int>(4, static_cast<int>(std::to_string(count - 1).size()));
  for (int64_t i = 0; i < count; ++i) {
    Tensor<float> one({3, imgs.dim(2), imgs.dim(3)});
    for (int64_t j = 0; j < item; ++j) one[j] = imgs[i * item + j];
    save_png(from_model_range(one),
             output_dir + "/sample_" + zero_pad(i, width) + ".png");
  }
  out << "wrote " << count << " samples to " << output_dir << "\n";
  return 0;
}

int cmd_plot(const std::string& trace_csv, const std::string& out_svg,
             std::ostream& out) {
  LossTrace trace = read_trace_csv(trace_csv);
  write_loss_svg(trace, out_svg);
  out << "plotted " << trace.size() << " rows to " << out_svg << "\n";
  return 0;
}

}  // namespace microgan
