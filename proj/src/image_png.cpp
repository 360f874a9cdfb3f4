#include <png.h>

#include <cstring>

#include "microgan/image.hpp"

namespace microgan {

ImageU8 load_png(const std::string& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;

  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    std::string msg = png.message;
    png_image_free(&png);
    fail(ErrorKind::Io, "cannot read PNG " + path + ": " + msg);
  }
  // RGB8 regardless of the file's own layout: grayscale spreads to three
  // identical channels, alpha is composited away against black
  png.format = PNG_FORMAT_RGB;

  ImageU8 out(png.width, png.height);
  if (!png_image_finish_read(&png, nullptr, out.pixels.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    fail(ErrorKind::Io, "cannot decode PNG " + path + ": " + msg);
  }
  return out;
}

void save_png(const ImageU8& image, const std::string& path) {
  if (image.width < 1 || image.height < 1)
    fail(ErrorKind::Size, "cannot save an empty image");

  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;

  if (!png_image_write_to_file(&png, path.c_str(), 0, image.pixels.data(), 0,
                               nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    fail(ErrorKind::Io, "cannot write PNG " + path + ": " + msg);
  }
}

}  // namespace microgan
