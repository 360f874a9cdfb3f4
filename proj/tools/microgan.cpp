#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "microgan/commands.hpp"

namespace {

microgan::FillMode parse_fill_mode(const std::string& s) {
  if (s == "nearest") return microgan::FillMode::Nearest;
  if (s == "constant") return microgan::FillMode::Constant;
  microgan::fail(microgan::ErrorKind::Config,
                 "fill mode must be nearest or constant, got " + s);
}

microgan::Interp parse_interp(const std::string& s) {
  if (s == "nearest") return microgan::Interp::Nearest;
  if (s == "bilinear") return microgan::Interp::Bilinear;
  microgan::fail(microgan::ErrorKind::Config,
                 "interpolation must be nearest or bilinear, got " + s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"microgan: adversarial image synthesis on a deterministic "
               "convolutional engine"};
  app.require_subcommand(1);

  // augment
  auto* aug = app.add_subcommand(
      "augment", "expand a PNG directory with random transforms");
  microgan::AugmentCmdOptions aug_opt;
  std::string fill_mode = "nearest";
  std::string interp = "bilinear";
  int64_t fill_value = 0;
  aug->add_option("-i,--input", aug_opt.input_dir, "source PNG directory")
      ->required();
  aug->add_option("-o,--output", aug_opt.output_dir, "destination directory")
      ->required();
  aug->add_option("-n,--count", aug_opt.target_count,
                  "total images to end up with (originals included)")
      ->required();
  aug->add_option("--seed", aug_opt.seed, "random seed")
      ->default_val(uint64_t{0});
  aug->add_option("--width-shift", aug_opt.spec.width_shift_range,
                  "max horizontal shift as a fraction of width")
      ->capture_default_str();
  aug->add_option("--height-shift", aug_opt.spec.height_shift_range,
                  "max vertical shift as a fraction of height")
      ->capture_default_str();
  aug->add_option("--shear", aug_opt.spec.shear_range,
                  "max shear angle in radians")
      ->capture_default_str();
  aug->add_option("--zoom", aug_opt.spec.zoom_range,
                  "max zoom deviation from 1")
      ->capture_default_str();
  aug->add_flag("--horizontal-flip,!--no-horizontal-flip",
                aug_opt.spec.horizontal_flip, "allow horizontal flips")
      ->capture_default_str();
  aug->add_flag("--vertical-flip,!--no-vertical-flip",
                aug_opt.spec.vertical_flip, "allow vertical flips")
      ->capture_default_str();
  aug->add_option("--fill-mode", fill_mode, "nearest or constant")
      ->capture_default_str();
  aug->add_option("--fill-value", fill_value,
                  "gray level for constant fill (0-255)")
      ->capture_default_str();
  aug->add_option("--interpolation", interp, "bilinear or nearest")
      ->capture_default_str();

  // train
  auto* trn = app.add_subcommand("train", "train a model from a JSON config");
  std::string config_path;
  std::string resume_path;
  trn->add_option("config", config_path, "run configuration JSON")->required();
  trn->add_option("--resume", resume_path,
                  "checkpoint to continue from (settings come from it)");

  // sample
  auto* smp = app.add_subcommand("sample",
                                 "decode images from a trained checkpoint");
  std::string ckpt_path;
  std::string sample_dir = ".";
  int64_t sample_count = 16;
  uint64_t sample_seed = 0;
  smp->add_option("checkpoint", ckpt_path, "checkpoint file")->required();
  smp->add_option("-n,--count", sample_count, "number of images")
      ->capture_default_str();
  smp->add_option("--seed", sample_seed, "latent seed")->capture_default_str();
  smp->add_option("-o,--output", sample_dir, "output directory")
      ->capture_default_str();

  // gradcheck
  auto* grd = app.add_subcommand(
      "gradcheck", "audit analytic gradients against finite differences");
  int64_t gc_image = 16;
  int64_t gc_div = 4;
  double gc_tol = 1e-4;
  double gc_h = 1e-5;
  grd->add_option("--image-size", gc_image, "model image size (8/16/32/64)")
      ->capture_default_str();
  grd->add_option("--channel-div", gc_div, "channel width divisor")
      ->capture_default_str();
  grd->add_option("--tol", gc_tol, "max acceptable relative error")
      ->capture_default_str();
  grd->add_option("--step", gc_h, "finite-difference step")
      ->capture_default_str();

  // plot
  auto* plt = app.add_subcommand("plot", "render a loss trace CSV as SVG");
  std::string trace_path;
  std::string svg_path;
  plt->add_option("trace", trace_path, "trace CSV written by train")
      ->required();
  plt->add_option("-o,--output", svg_path, "output SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  return microgan::run_command(
      [&]() -> int {
        if (aug->parsed()) {
          aug_opt.spec.fill_mode = parse_fill_mode(fill_mode);
          aug_opt.spec.interpolation = parse_interp(interp);
          if (fill_value < 0 || fill_value > 255)
            microgan::fail(microgan::ErrorKind::Config,
                           "fill value must lie in [0, 255]");
          aug_opt.spec.fill_value = static_cast<uint8_t>(fill_value);
          return microgan::cmd_augment(aug_opt, std::cout);
        }
        if (trn->parsed())
          return microgan::cmd_train(config_path, resume_path, std::cout);
        if (smp->parsed())
          return microgan::cmd_sample(ckpt_path, sample_count, sample_seed,
                                      sample_dir, std::cout);
        if (grd->parsed())
          return microgan::cmd_gradcheck(gc_image, gc_div, gc_tol, gc_h,
                                         std::cout);
        if (plt->parsed())
          return microgan::cmd_plot(trace_path, svg_path, std::cout);
        return 2;
      },
      std::cerr);
}
