#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cosparse::testing {

namespace {

void paint_disk(Field<int>& mask, double cx, double cy, double r, int label) {
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) mask(x, y) = label;
}

void paint_line(Field<int>& mask, int x0, int y0, int x1, int y1, double r, int label) {
  const int steps = std::max(std::abs(x1 - x0), std::abs(y1 - y0));
  for (int s = 0; s <= steps; ++s) {
    const double t = steps ? static_cast<double>(s) / steps : 0.0;
    paint_disk(mask, x0 + t * (x1 - x0), y0 + t * (y1 - y0), r, label);
  }
}

}  // namespace

SyntheticCase stripe_disk(int size, double radius, int period) {
  SyntheticCase c{ColorImage(size, size, 3), {Field<int>(size, size, 1), 2},
                  Field<int>(size, size, 0)};
  const double centre = (size - 1) / 2.0;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const bool inside = (x - centre) * (x - centre) + (y - centre) * (y - centre) <= radius * radius;
      const int phase = inside ? x : y;
      const double v = ((phase % period) < period / 2 ? 64.0 : 192.0) / 255.0;
      for (auto& ch : c.image.at(x, y)) ch = v;
      c.truth.labels(x, y) = inside ? 0 : 1;
    }
  const int mid = size / 2;
  paint_line(c.scribbles, mid - 6, mid, mid + 6, mid, 2.0, 1);
  paint_line(c.scribbles, 3, 4, 12, 4, 2.0, 2);
  return c;
}

SyntheticCase color_texture_quadrants(int size, double noise, double modulation,
                                      std::uint64_t seed) {
  SyntheticCase c{ColorImage(size, size, 3), {Field<int>(size, size, 0), 4},
                  Field<int>(size, size, 0)};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, noise);
  const double colors[2][3] = {{0.75, 0.25, 0.2}, {0.2, 0.3, 0.75}};
  const double luma[3] = {0.299, 0.587, 0.114};
  const double luma_sq = luma[0] * luma[0] + luma[1] * luma[1] + luma[2] * luma[2];
  const int half = size / 2;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const int right = x >= half;
      const int bottom = y >= half;
      const int phase = bottom ? x : y;
      const double mod = phase % 2 == 0 ? -modulation : modulation;
      // Noise confined to the chroma plane leaves the gray image untouched.
      double n[3] = {gauss(rng), gauss(rng), gauss(rng)};
      const double along = (n[0] * luma[0] + n[1] * luma[1] + n[2] * luma[2]) / luma_sq;
      auto px = c.image.at(x, y);
      for (int ch = 0; ch < 3; ++ch) px[ch] = colors[right][ch] + mod + n[ch] - along * luma[ch];
      c.truth.labels(x, y) = bottom * 2 + right;
    }
  return c;
}

TwoRegionInstance two_region_instance(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double amp = 3.0 + 4.0 * uni(rng);
  const double freq = 1.0 + 2.0 * uni(rng);
  const double phase = 6.28 * uni(rng);
  const double offset = size * (0.35 + 0.3 * uni(rng));

  TwoRegionInstance inst{DataTerm(2, size, size), {}, {Field<int>(size, size), 2}};
  GrayImage gray(size, size);
  for (int y = 0; y < size; ++y) {
    const double boundary = offset + amp * std::sin(freq * 6.28 * y / size + phase);
    for (int x = 0; x < size; ++x) {
      const int label = x < boundary ? 0 : 1;
      inst.truth.labels(x, y) = label;
      gray(x, y) = (label == 0 ? 80.0 : 170.0) + 15.0 * gauss(rng);
      const std::size_t p = gray.index(x, y);
      // Negative log of a noisy two-class likelihood.
      const double margin = 1.0 + 1.5 * gauss(rng);
      inst.data.at(label, p) = 2.0;
      inst.data.at(1 - label, p) = 2.0 + margin;
    }
  }
  inst.metric = edge_metric(gray, 5.0, true);
  return inst;
}

DataTerm random_data_term(int labels, int width, int height, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, scale);
  DataTerm d(labels, width, height);
  for (int i = 0; i < labels; ++i)
    for (std::size_t p = 0; p < d.pixel_count(); ++p) d.at(i, p) = uni(rng);
  return d;
}

std::vector<double> simplex_projection_oracle(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<double> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    // Minimize |x - v|^2 with x_i = 0 off the support and sum x = 1 on it.
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        sum += v[i];
        ++count;
      }
    const double lagrange = (1.0 - sum) / count;
    std::vector<double> x(n, 0.0);
    bool feasible = true;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        x[i] = v[i] + lagrange;
        if (x[i] < -1e-15) feasible = false;
      }
    if (!feasible) continue;
    double dist = 0.0;
    for (std::size_t i = 0; i < n; ++i) dist += (x[i] - v[i]) * (x[i] - v[i]);
    if (dist < best_dist) {
      best_dist = dist;
      best = x;
    }
  }
  return best;
}

double potts_energy_oracle(const std::vector<int>& labels, const DataTerm& data,
                           const Field<double>& g, double lambda, double nu) {
  const int w = data.width();
  const int h = data.height();
  double e = 0.0;
  std::vector<bool> used(static_cast<std::size_t>(data.labels()), false);
  for (std::size_t p = 0; p < labels.size(); ++p) {
    e += data.at(labels[p], p);
    used[labels[p]] = true;
  }
  for (int i = 0; i < data.labels(); ++i) {
    // Indicator of label i, isotropic forward-difference TV weighted by g.
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        auto ind = [&](int xx, int yy) { return labels[yy * w + xx] == i ? 1.0 : 0.0; };
        const double dx = x + 1 < w ? ind(x + 1, y) - ind(x, y) : 0.0;
        const double dy = y + 1 < h ? ind(x, y + 1) - ind(x, y) : 0.0;
        e += 0.5 * lambda * g(x, y) * std::sqrt(dx * dx + dy * dy);
      }
    if (used[i]) e += nu;
  }
  return e;
}

double exhaustive_potts_minimum(const DataTerm& data, const Field<double>& g, double lambda,
                                double nu) {
  const std::size_t np = data.pixel_count();
  const int n = data.labels();
  std::vector<int> labels(np, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    best = std::min(best, potts_energy_oracle(labels, data, g, lambda, nu));
    std::size_t k = 0;
    while (k < np && ++labels[k] == n) labels[k++] = 0;
    if (k == np) break;
  }
  return best;
}

}  // namespace cosparse::testing
