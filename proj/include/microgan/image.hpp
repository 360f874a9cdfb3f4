#pragma once

#include <cfenv>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "microgan/tensor.hpp"

namespace microgan {

// 8-bit RGB image, row-major, channels interleaved.
struct ImageU8 {
  int64_t width = 0;
  int64_t height = 0;
  std::vector<uint8_t> pixels;  // height * width * 3

  ImageU8() = default;
  ImageU8(int64_t w, int64_t h, uint8_t fill = 0)
      : width(w), height(h),
        pixels(static_cast<size_t>(w * h * 3), fill) {}

  uint8_t& at(int64_t x, int64_t y, int c) {
    return pixels[static_cast<size_t>((y * width + x) * 3 + c)];
  }
  uint8_t at(int64_t x, int64_t y, int c) const {
    return pixels[static_cast<size_t>((y * width + x) * 3 + c)];
  }
};

// PNG only. Grayscale files are promoted to three identical channels on
// load; alpha is dropped. Implemented over libpng's simplified API.
ImageU8 load_png(const std::string& path);
void save_png(const ImageU8& image, const std::string& path);

// crop the longer axis to a centered square
ImageU8 center_crop_square(const ImageU8& image);

// area-averaging resize (box filter), rounding at the very end
ImageU8 resize_area(const ImageU8& image, int64_t out_w, int64_t out_h);

// load -> center crop -> resize to side x side
ImageU8 load_image_for_training(const std::string& path, int64_t side);

// byte -> model range: v / 127.5 - 1, so 0 -> -1 and 255 -> +1 exactly.
// Result is 3 x H x W.
template <typename S>
Tensor<S> to_model_range(const ImageU8& image) {
  Tensor<S> t({3, image.height, image.width});
  S* p = t.data();
  const int64_t plane = image.height * image.width;
  for (int c = 0; c < 3; ++c)
    for (int64_t y = 0; y < image.height; ++y)
      for (int64_t x = 0; x < image.width; ++x)
        p[c * plane + y * image.width + x] =
            static_cast<S>(image.at(x, y, c)) / S(127.5) - S(1);
  return t;
}

// model range -> byte: clamp to [-1, 1], map back, round half to even
template <typename S>
ImageU8 from_model_range(const Tensor<S>& t) {
  if (t.rank() != 3 || t.dim(0) != 3)
    fail(ErrorKind::Shape,
         "from_model_range wants a 3 x H x W tensor, got " +
             shape_str(t.shape()));
  ImageU8 im(t.dim(2), t.dim(1));
  const S* p = t.data();
  const int64_t plane = im.height * im.width;
  for (int c = 0; c < 3; ++c)
    for (int64_t y = 0; y < im.height; ++y)
      for (int64_t x = 0; x < im.width; ++x) {
        S v = p[c * plane + y * im.width + x];
        if (v < S(-1)) v = S(-1);
        if (v > S(1)) v = S(1);
        im.at(x, y, c) = static_cast<uint8_t>(
            std::nearbyint((static_cast<double>(v) + 1.0) * 127.5));
      }
  return im;
}

}  // namespace microgan
