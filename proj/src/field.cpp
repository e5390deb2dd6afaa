#include "cosparse/field.hpp"

namespace cosparse {

ColorImage::ColorImage(int width, int height, int channels)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0) throw DimensionError("negative image dimensions");
  if (channels != 1 && channels != 3)
    throw ParameterError("images must have 1 or 3 channels");
  data_.assign(static_cast<std::size_t>(width) * height * channels, 0.0);
}

GrayImage to_gray255(const ColorImage& image) {
  GrayImage gray(image.width(), image.height());
  for (std::size_t p = 0; p < image.pixel_count(); ++p) {
    const auto c = image.at(p);
    const double luma = image.channels() == 3
                            ? 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]
                            : c[0];
    gray[p] = 255.0 * luma;
  }
  return gray;
}

}  // namespace cosparse
