#include <algorithm>
#include <cmath>

#include "microgan/augment.hpp"

namespace microgan {

AugmentParams draw_augment_params(const AugmentSpec& spec, Rng& rng) {
  spec.validate();
  AugmentParams p;
  p.shift_x = rng.uniform_in(-spec.width_shift_range, spec.width_shift_range);
  p.shift_y =
      rng.uniform_in(-spec.height_shift_range, spec.height_shift_range);
  p.shear = rng.uniform_in(-spec.shear_range, spec.shear_range);
  p.zoom = 1.0 + rng.uniform_in(-spec.zoom_range, spec.zoom_range);
  const double uh = rng.uniform();
  const double uv = rng.uniform();
  p.flip_h = spec.horizontal_flip && uh < 0.5;
  p.flip_v = spec.vertical_flip && uv < 0.5;
  return p;
}

ImageU8 apply_augment(const ImageU8& image, const AugmentParams& p,
                      const AugmentSpec& spec) {
  spec.validate();
  if (!(p.zoom > 0))
    fail(ErrorKind::Domain, "augment zoom factor must be > 0");
  const int64_t w = image.width, h = image.height;
  if (w < 1 || h < 1) fail(ErrorKind::Size, "cannot augment an empty image");

  const double cx = static_cast<double>(w - 1) / 2.0;
  const double cy = static_cast<double>(h - 1) / 2.0;
  const double sin_s = std::sin(p.shear);
  const double cos_s = std::cos(p.shear);
  const double tx = p.shift_x * static_cast<double>(w);
  const double ty = p.shift_y * static_cast<double>(h);

  ImageU8 out(w, h);
  for (int64_t yo = 0; yo < h; ++yo) {
    for (int64_t xo = 0; xo < w; ++xo) {
      // inverse map: flips, then zoom, then shear, then translation, all
      // about the image center
      double u = static_cast<double>(xo) - cx;
      double v = static_cast<double>(yo) - cy;
      if (p.flip_h) u = -u;
      if (p.flip_v) v = -v;
      u *= p.zoom;
      v *= p.zoom;
      const double us = u - sin_s * v;
      const double vs = cos_s * v;
      const double sx = us + tx + cx;
      const double sy = vs + ty + cy;

      const bool outside = sx < 0.0 || sx > static_cast<double>(w - 1) ||
                           sy < 0.0 || sy > static_cast<double>(h - 1);
      if (outside && spec.fill_mode == FillMode::Constant) {
        for (int c = 0; c < 3; ++c) out.at(xo, yo, c) = spec.fill_value;
        continue;
      }

      if (spec.interpolation == Interp::Nearest) {
        // nearest fill: clamp onto the frame, which repeats the edge pixel
        const int64_t ix = std::clamp<int64_t>(std::llround(sx), 0, w - 1);
        const int64_t iy = std::clamp<int64_t>(std::llround(sy), 0, h - 1);
        for (int c = 0; c < 3; ++c) out.at(xo, yo, c) = image.at(ix, iy, c);
      } else {
        const double bx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
        const double by = std::clamp(sy, 0.0, static_cast<double>(h - 1));
        const int64_t x0 = static_cast<int64_t>(std::floor(bx));
        const int64_t y0 = static_cast<int64_t>(std::floor(by));
        const int64_t x1 = std::min(x0 + 1, w - 1);
        const int64_t y1 = std::min(y0 + 1, h - 1);
        const double fx = bx - static_cast<double>(x0);
        const double fy = by - static_cast<double>(y0);
        for (int c = 0; c < 3; ++c) {
          const double val =
              (1.0 - fx) * (1.0 - fy) * image.at(x0, y0, c) +
              fx * (1.0 - fy) * image.at(x1, y0, c) +
              (1.0 - fx) * fy * image.at(x0, y1, c) +
              fx * fy * image.at(x1, y1, c);
          out.at(xo, yo, c) = static_cast<uint8_t>(
              std::clamp<long>(std::lround(val), 0, 255));
        }
      }
    }
  }
  return out;
}

}  // namespace microgan
