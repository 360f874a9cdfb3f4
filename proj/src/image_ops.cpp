#include <algorithm>
#include <cmath>

#include "microgan/image.hpp"

namespace microgan {

ImageU8 center_crop_square(const ImageU8& image) {
  const int64_t side = std::min(image.width, image.height);
  if (side < 1) fail(ErrorKind::Size, "cannot crop an empty image");
  const int64_t x0 = (image.width - side) / 2;
  const int64_t y0 = (image.height - side) / 2;
  ImageU8 out(side, side);
  for (int64_t y = 0; y < side; ++y)
    for (int64_t x = 0; x < side; ++x)
      for (int c = 0; c < 3; ++c)
        out.at(x, y, c) = image.at(x0 + x, y0 + y, c);
  return out;
}

// Box-filter resize: each output pixel averages the source rectangle it
// covers, weighted by overlap, rounded once at the end. Exact for identity
// scales and integral downscales of constant regions.
ImageU8 resize_area(const ImageU8& image, int64_t out_w, int64_t out_h) {
  if (out_w < 1 || out_h < 1)
    fail(ErrorKind::Size, "resize target must be at least 1x1");
  if (out_w == image.width && out_h == image.height) return image;

  const double sx = static_cast<double>(image.width) / static_cast<double>(out_w);
  const double sy =
      static_cast<double>(image.height) / static_cast<double>(out_h);

  ImageU8 out(out_w, out_h);
  for (int64_t oy = 0; oy < out_h; ++oy) {
    const double y0 = static_cast<double>(oy) * sy;
    const double y1 = static_cast<double>(oy + 1) * sy;
    const int64_t iy0 = static_cast<int64_t>(std::floor(y0));
    const int64_t iy1 =
        std::min<int64_t>(image.height - 1, static_cast<int64_t>(std::ceil(y1)) - 1);
    for (int64_t ox = 0; ox < out_w; ++ox) {
      const double x0 = static_cast<double>(ox) * sx;
      const double x1 = static_cast<double>(ox + 1) * sx;
      const int64_t ix0 = static_cast<int64_t>(std::floor(x0));
      const int64_t ix1 =
          std::min<int64_t>(image.width - 1, static_cast<int64_t>(std::ceil(x1)) - 1);

      double acc[3] = {0, 0, 0};
      double area = 0;
      for (int64_t iy = iy0; iy <= iy1; ++iy) {
        const double wy = std::min(y1, static_cast<double>(iy + 1)) -
                          std::max(y0, static_cast<double>(iy));
        if (wy <= 0) continue;
        for (int64_t ix = ix0; ix <= ix1; ++ix) {
          const double wx = std::min(x1, static_cast<double>(ix + 1)) -
                            std::max(x0, static_cast<double>(ix));
          if (wx <= 0) continue;
          const double w = wx * wy;
          area += w;
          for (int c = 0; c < 3; ++c)
            acc[c] += w * static_cast<double>(image.at(ix, iy, c));
        }
      }
      for (int c = 0; c < 3; ++c)
        out.at(ox, oy, c) =
            static_cast<uint8_t>(std::lround(acc[c] / area));
    }
  }
  return out;
}

ImageU8 load_image_for_training(const std::string& path, int64_t side) {
  return resize_area(center_crop_square(load_png(path)), side, side);
}

}  // namespace microgan
