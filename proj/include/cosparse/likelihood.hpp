#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cosparse/field.hpp"
#include "cosparse/texture.hpp"

namespace cosparse {

struct ScribbleSample {
  Pixel location;
  std::vector<double> color;
  /// std::nullopt for samples whose patch is flat.
  std::optional<CoSupportSignature> signature;
};

/// User-provided samples of one class (label is zero-based).
struct ScribbleSet {
  int label = 0;
  std::vector<ScribbleSample> samples;
};

struct LikelihoodParams {
  double alpha = 1.3;
  double sigma_color = 1.3 / 255.0;
  double beta0 = 0.05;
  double rho_floor = 1.0;
  double color_floor = 1e-12;
  bool use_color = true;
  bool use_texture = true;
};

struct UnsupervisedParams {
  double beta_color = 0.1;
  /// Non-positive selects rows / 20 for the operator in use.
  double beta_texture = 0.0;
  int max_classes = 64;
};

/// Per-pixel, per-class negative log-likelihood, class-major.
class DataTerm {
 public:
  DataTerm() = default;
  DataTerm(int labels, int width, int height);

  int labels() const noexcept { return labels_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }

  double& at(int label, std::size_t pixel) { return f_[label * pixel_count() + pixel]; }
  double at(int label, std::size_t pixel) const { return f_[label * pixel_count() + pixel]; }
  std::span<const double> label_slice(int label) const {
    return {f_.data() + label * pixel_count(), pixel_count()};
  }
  std::span<const double> values() const noexcept { return f_; }

 private:
  int labels_ = 0;
  int width_ = 0;
  int height_ = 0;
  std::vector<double> f_;
};

/// Exact Euclidean distance from every pixel to the nearest pixel with mask != 0.
/// Pixels are at infinite distance when the mask is empty.
Field<double> distance_to_mask(const Field<unsigned char>& mask);

/// Spatial kernel width max(alpha * distance to the nearest sample, rho_floor).
Field<double> spatial_bandwidth(const ScribbleSet& scribbles, int width, int height,
                                double alpha, double rho_floor);

/// Parzen estimate with a normalized 2-D Gaussian in location (std rho) and a
/// normalized d-dimensional Gaussian in color (std sigma_color).
double color_likelihood(Pixel x, std::span<const double> color, const ScribbleSet& scribbles,
                        double rho, double sigma_color);
/// Same, deriving rho from the nearest sample: max(alpha * |x - nearest|, rho_floor).
double color_likelihood(Pixel x, std::span<const double> color, const ScribbleSet& scribbles,
                        double alpha, double sigma_color, double rho_floor);

/// Softmin over l1 distances to the class representatives with per-class
/// temperatures. A flat patch (std::nullopt) gives the uniform distribution.
std::vector<double> texture_posterior(const std::optional<CoSupportSignature>& signature,
                                      std::span<const TexturalRepresentative> representatives,
                                      std::span<const double> betas);

/// Median signature of the non-flat samples, or the all-ones signature when
/// every sample is flat.
TexturalRepresentative scribble_representative(const ScribbleSet& scribbles, int rows);

/// Collects samples from an indexed scribble mask (0 unlabeled, v >= 1 label v).
/// Labels present must be exactly 1..n.
std::vector<ScribbleSet> scribble_sets_from_mask(const ColorImage& image,
                                                 const SignatureField& signatures,
                                                 const Field<int>& mask);

DataTerm build_data_term_supervised(const ColorImage& image, const SignatureField& signatures,
                                    std::span<const ScribbleSet> scribbles,
                                    const LikelihoodParams& params);

/// Class (c, t) has index c * texture_count + t.
DataTerm build_data_term_unsupervised(const ColorImage& image, const SignatureField& signatures,
                                      std::span<const std::vector<double>> color_centroids,
                                      std::span<const TexturalRepresentative> representatives,
                                      const UnsupervisedParams& params);

}  // namespace cosparse
