#pragma once

#include <cstdint>

#include "microgan/image.hpp"
#include "microgan/rng.hpp"

namespace microgan {

enum class FillMode { Nearest, Constant };
enum class Interp { Nearest, Bilinear };

// Random-augmentation policy. Shifts and zoom are fractions of the image
// extent; shear is in radians. Ranges are symmetric around the identity.
struct AugmentSpec {
  double width_shift_range = 0.1;
  double height_shift_range = 0.1;
  double shear_range = 0.2;
  double zoom_range = 0.2;
  bool horizontal_flip = true;
  bool vertical_flip = true;
  FillMode fill_mode = FillMode::Nearest;
  uint8_t fill_value = 0;  // used only by FillMode::Constant
  Interp interpolation = Interp::Bilinear;

  void validate() const {
    if (width_shift_range < 0 || width_shift_range > 1 ||
        height_shift_range < 0 || height_shift_range > 1)
      fail(ErrorKind::Config, "shift ranges must lie in [0, 1]");
    if (shear_range < 0 || shear_range > 1.5)
      fail(ErrorKind::Config, "shear range must lie in [0, 1.5] radians");
    if (zoom_range < 0 || zoom_range >= 1)
      fail(ErrorKind::Config, "zoom range must lie in [0, 1)");
  }
};

// One concrete draw from an AugmentSpec. Shifts are fractions; zoom is the
// final scale factor (1 = unchanged, > 1 zooms out).
struct AugmentParams {
  double shift_x = 0.0;
  double shift_y = 0.0;
  double shear = 0.0;
  double zoom = 1.0;
  bool flip_h = false;
  bool flip_v = false;
};

// Consumes exactly six uniform draws in a fixed order (shift x, shift y,
// shear, zoom, flip h, flip v) regardless of which knobs are enabled, so a
// stream position never depends on the spec.
AugmentParams draw_augment_params(const AugmentSpec& spec, Rng& rng);

// Applies the affine transform (flips, then zoom, then shear, then shift,
// composed about the image center) by inverse-mapping output pixels,
// sampling with the spec's interpolation and out-of-frame fill policy.
// Identity params return the image unchanged, pixel for pixel.
ImageU8 apply_augment(const ImageU8& image, const AugmentParams& params,
                      const AugmentSpec& spec);

inline ImageU8 augment(const ImageU8& image, const AugmentSpec& spec,
                       Rng& rng) {
  return apply_augment(image, draw_augment_params(spec, rng), spec);
}

}  // namespace microgan
