#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cosparse/analysis_operator.hpp"
#include "cosparse/field.hpp"

namespace cosparse {

/// Zero-mean, unit-norm gray patch (row-major, side*side values).
struct Patch {
  std::vector<double> values;
  Pixel center;
};

/// Soft co-support indicator exp(-a_j^2 / sigma), entries in (0,1].
struct CoSupportSignature {
  std::vector<double> values;
  std::size_t size() const noexcept { return values.size(); }
};

/// Component-wise median of a set of signatures.
struct TexturalRepresentative {
  CoSupportSignature signature;
  std::size_t member_count = 0;
};

struct PatchOptions {
  int side = 9;
  /// Gaussian mask standard deviation in pixels; infinity means a uniform mask.
  double mask_std = 9 / 4.0;
};

/// Window around `center` (mirror-padded), Gaussian-weighted, then shifted to
/// zero mean and scaled to unit norm. The raw window mean is removed before
/// masking so the result is invariant to gray-level bias and gain.
/// Returns std::nullopt (the flat marker) when the masked variance is below 1e-12.
std::optional<Patch> extract_patch(const GrayImage& gray, Pixel center, const PatchOptions& opts);

CoSupportSignature smooth_cosupport(std::span<const double> analyzed, double sigma);

/// Textural similarity: l1 distance between two signatures.
double tsm(const CoSupportSignature& a, const CoSupportSignature& b);
double l1_distance(std::span<const double> a, std::span<const double> b);

/// Component-wise median; even counts take the midpoint of the middle pair.
TexturalRepresentative textural_representative(std::span<const CoSupportSignature> signatures);

/// Signature of every pixel of an image, stored in single precision.
/// Pixels whose patch is flat carry no signature.
class SignatureField {
 public:
  SignatureField() = default;
  SignatureField(int width, int height, int rows);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int rows() const noexcept { return rows_; }
  std::size_t pixel_count() const noexcept { return flat_.size(); }

  bool is_flat(std::size_t pixel) const { return flat_[pixel] != 0; }
  std::span<const float> raw(std::size_t pixel) const {
    return {values_.data() + pixel * rows_, static_cast<std::size_t>(rows_)};
  }
  /// Signature at a pixel; flat pixels yield the all-ones signature of a zero response.
  CoSupportSignature signature(std::size_t pixel) const;
  /// l1 distance between the pixel's signature and `values`.
  double distance(std::size_t pixel, std::span<const double> values) const;

  std::span<float> mutable_raw(std::size_t pixel) {
    return {values_.data() + pixel * rows_, static_cast<std::size_t>(rows_)};
  }
  void set_flat(std::size_t pixel, bool flat) { flat_[pixel] = flat ? 1 : 0; }

 private:
  int width_ = 0;
  int height_ = 0;
  int rows_ = 0;
  std::vector<float> values_;
  std::vector<std::uint8_t> flat_;
};

/// Patches for every pixel of `gray`, analyzed in batches and mapped through
/// smooth_cosupport.
SignatureField compute_signatures(const GrayImage& gray, const AnalysisOperator& op,
                                  double sigma, const PatchOptions& opts);

}  // namespace cosparse
