#include "cosparse/texture.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace cosparse {

namespace {

// Reflect without repeating the border sample: -1 -> 1, n -> n-2.
int mirror(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

std::vector<double> gaussian_mask(const PatchOptions& opts) {
  const int side = opts.side;
  const int half = side / 2;
  std::vector<double> mask(static_cast<std::size_t>(side) * side, 1.0);
  if (std::isinf(opts.mask_std)) return mask;
  const double inv = 1.0 / (2.0 * opts.mask_std * opts.mask_std);
  for (int dy = -half; dy <= half; ++dy)
    for (int dx = -half; dx <= half; ++dx)
      mask[(dy + half) * side + dx + half] = std::exp(-(dx * dx + dy * dy) * inv);
  return mask;
}

void check_options(const PatchOptions& opts) {
  if (opts.side < 1 || opts.side % 2 == 0) throw ParameterError("patch side must be odd");
  if (!(opts.mask_std > 0.0)) throw ParameterError("mask std must be positive");
}

// Fills `out` with the normalized patch; false when flat.
bool normalized_window(const GrayImage& gray, Pixel c, int side, std::span<const double> mask,
                       std::span<double> out) {
  const int half = side / 2;
  const std::size_t n = out.size();
  double mean = 0.0;
  for (int dy = -half; dy <= half; ++dy)
    for (int dx = -half; dx <= half; ++dx) {
      const double v = gray(mirror(c.x + dx, gray.width()), mirror(c.y + dy, gray.height()));
      out[(dy + half) * side + dx + half] = v;
      mean += v;
    }
  mean /= static_cast<double>(n);
  double masked_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = (out[i] - mean) * mask[i];
    masked_mean += out[i];
  }
  masked_mean /= static_cast<double>(n);
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] -= masked_mean;
    sq += out[i] * out[i];
  }
  if (sq / static_cast<double>(n) < 1e-12) return false;
  const double inv = 1.0 / std::sqrt(sq);
  for (auto& v : out) v *= inv;
  return true;
}

}  // namespace

std::optional<Patch> extract_patch(const GrayImage& gray, Pixel center, const PatchOptions& opts) {
  check_options(opts);
  if (!gray.contains(center))
    throw ParameterError(fmt::format("patch center ({}, {}) outside image", center.x, center.y));
  const auto mask = gaussian_mask(opts);
  Patch patch{std::vector<double>(mask.size()), center};
  if (!normalized_window(gray, center, opts.side, mask, patch.values)) return std::nullopt;
  return patch;
}

CoSupportSignature smooth_cosupport(std::span<const double> analyzed, double sigma) {
  if (!(sigma > 0.0)) throw ParameterError("sigma must be positive");
  CoSupportSignature sig{std::vector<double>(analyzed.size())};
  for (std::size_t j = 0; j < analyzed.size(); ++j)
    sig.values[j] = std::exp(-analyzed[j] * analyzed[j] / sigma);
  return sig;
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw DimensionError(fmt::format("signature lengths differ ({} vs {})", a.size(), b.size()));
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) d += std::abs(a[j] - b[j]);
  return d;
}

double tsm(const CoSupportSignature& a, const CoSupportSignature& b) {
  return l1_distance(a.values, b.values);
}

TexturalRepresentative textural_representative(std::span<const CoSupportSignature> signatures) {
  if (signatures.empty()) throw ParameterError("textural representative of an empty set");
  const std::size_t k = signatures.front().size();
  for (const auto& s : signatures)
    if (s.size() != k) throw DimensionError("signatures of unequal length");

  const std::size_t m = signatures.size();
  TexturalRepresentative rep{{std::vector<double>(k)}, m};
  std::vector<double> column(m);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < m; ++i) column[i] = signatures[i].values[j];
    const auto mid = column.begin() + static_cast<std::ptrdiff_t>(m / 2);
    std::nth_element(column.begin(), mid, column.end());
    double value = *mid;
    if (m % 2 == 0) value = 0.5 * (value + *std::max_element(column.begin(), mid));
    rep.signature.values[j] = value;
  }
  return rep;
}

SignatureField::SignatureField(int width, int height, int rows)
    : width_(width), height_(height), rows_(rows),
      values_(static_cast<std::size_t>(width) * height * rows, 1.0f),
      flat_(static_cast<std::size_t>(width) * height, 0) {}

CoSupportSignature SignatureField::signature(std::size_t pixel) const {
  const auto r = raw(pixel);
  return {std::vector<double>(r.begin(), r.end())};
}

double SignatureField::distance(std::size_t pixel, std::span<const double> values) const {
  const auto r = raw(pixel);
  if (values.size() != r.size()) throw DimensionError("signature length mismatch");
  double d = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) d += std::abs(static_cast<double>(r[j]) - values[j]);
  return d;
}

SignatureField compute_signatures(const GrayImage& gray, const AnalysisOperator& op,
                                  double sigma, const PatchOptions& opts) {
  check_options(opts);
  if (!(sigma > 0.0)) throw ParameterError("sigma must be positive");
  if (opts.side * opts.side != op.patch_len())
    throw DimensionError(fmt::format("patch side {} does not match operator width {}",
                                     opts.side, op.patch_len()));

  const int w = gray.width();
  const int h = gray.height();
  const int k = op.rows();
  const int n = op.patch_len();
  SignatureField field(w, h, k);
  const auto mask = gaussian_mask(opts);

  // One image row per batch: patches as columns, analyzed with a single product.
#pragma omp parallel
  {
    Eigen::MatrixXd patches(n, w);
    Eigen::MatrixXd analyzed(k, w);
    std::vector<char> flat(static_cast<std::size_t>(w));
#pragma omp for schedule(static)
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        std::span<double> col(patches.col(x).data(), static_cast<std::size_t>(n));
        flat[x] = !normalized_window(gray, {x, y}, opts.side, mask, col);
        if (flat[x]) patches.col(x).setZero();
      }
      analyzed.noalias() = op.weights() * patches;
      for (int x = 0; x < w; ++x) {
        const std::size_t p = gray.index(x, y);
        field.set_flat(p, flat[x] != 0);
        auto out = field.mutable_raw(p);
        for (int j = 0; j < k; ++j) {
          const double a = analyzed(j, x);
          out[j] = static_cast<float>(std::exp(-a * a / sigma));
        }
      }
    }
  }
  return field;
}

}  // namespace cosparse
