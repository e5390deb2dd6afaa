#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cosparse/field.hpp"
#include "cosparse/segmentation.hpp"

namespace cosparse {

using Bytes = std::vector<std::uint8_t>;

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// PNG (any bit depth, palette expanded, alpha dropped) or binary PGM/PPM.
/// Gray inputs give one channel, everything else three.
ColorImage decode_image(std::span<const std::uint8_t> bytes);
ColorImage read_image(const std::filesystem::path& path);

/// Raw sample values of an indexed or 8-bit gray PNG, or a PGM. RGB inputs
/// are accepted only when every pixel is gray.
Field<int> decode_index_map(std::span<const std::uint8_t> bytes);
Field<int> read_index_map(const std::filesystem::path& path);

/// 8-bit RGB (3 channels) or gray (1 channel) PNG.
Bytes encode_png(const ColorImage& image);

/// Indexed PNG with value = label + 1 (0 for void) and a fixed palette.
Bytes encode_label_png(const Segmentation& seg);
/// Inverse of encode_label_png: value v >= 1 is label v - 1, 0 is void.
Segmentation decode_label_png(std::span<const std::uint8_t> bytes);
Segmentation read_label_map(const std::filesystem::path& path);

/// Palette colour of a zero-based label.
std::array<std::uint8_t, 3> label_color(int label);

/// Blend of the image with per-label colours.
ColorImage label_overlay(const ColorImage& image, const Segmentation& seg, double alpha = 0.5);

}  // namespace cosparse
