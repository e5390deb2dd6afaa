#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cosparse/error.hpp"

namespace cosparse {

struct Pixel {
  int x = 0;
  int y = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Dense row-major 2-D field.
template <typename T>
class Field {
 public:
  Field() = default;
  Field(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(checked(width, height)), fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool contains(Pixel p) const noexcept {
    return p.x >= 0 && p.y >= 0 && p.x < width_ && p.y < height_;
  }
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  friend bool operator==(const Field&, const Field&) = default;

 private:
  static long checked(int w, int h) {
    if (w < 0 || h < 0) throw DimensionError("negative field dimensions");
    return static_cast<long>(w) * h;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using GrayImage = Field<double>;

/// Interleaved multi-channel image with values in [0,1].
class ColorImage {
 public:
  ColorImage() = default;
  ColorImage(int width, int height, int channels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * height_;
  }

  std::size_t index_of(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * width_ + x;
  }
  std::span<double> at(int x, int y) {
    return {data_.data() + offset(x, y), static_cast<std::size_t>(channels_)};
  }
  std::span<const double> at(int x, int y) const {
    return {data_.data() + offset(x, y), static_cast<std::size_t>(channels_)};
  }
  std::span<const double> at(std::size_t pixel) const {
    return {data_.data() + pixel * channels_, static_cast<std::size_t>(channels_)};
  }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  friend bool operator==(const ColorImage&, const ColorImage&) = default;

 private:
  std::size_t offset(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Luma on the 0..255 scale (Rec. 601 weights for RGB, identity for one channel).
GrayImage to_gray255(const ColorImage& image);

}  // namespace cosparse
