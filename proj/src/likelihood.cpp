#include "cosparse/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include <fmt/format.h>

namespace cosparse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// exp() of anything below this is exactly zero in double precision.
constexpr double kExpUnderflow = -746.0;

// Felzenszwalb-Huttenlocher lower envelope of parabolas on one line.
void squared_distance_1d(std::span<const double> f, std::span<double> d, std::vector<int>& v,
                         std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    while (k >= 0) {
      const int p = v[k];
      const double s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -kInf : ((f[q] + double(q) * q) - (f[v[k - 1]] + double(v[k - 1]) * v[k - 1])) /
                                (2.0 * (q - v[k - 1]));
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double diff = q - v[j];
    d[q] = diff * diff + f[v[j]];
  }
}

double log_sum_exp(std::span<const double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

void check_betas(std::span<const double> betas) {
  for (double b : betas)
    if (!(b > 0.0)) throw ParameterError("texture temperatures must be positive");
}

struct SampleTable {
  std::vector<double> x, y, color;
  int channels = 0;
};

SampleTable table_of(const ScribbleSet& s) {
  SampleTable t;
  t.channels = s.samples.empty() ? 0 : static_cast<int>(s.samples.front().color.size());
  for (const auto& sample : s.samples) {
    t.x.push_back(sample.location.x);
    t.y.push_back(sample.location.y);
    t.color.insert(t.color.end(), sample.color.begin(), sample.color.end());
  }
  return t;
}

double parzen(const SampleTable& t, double px, double py, std::span<const double> color,
              double rho, double sigma_color) {
  const double inv_rho = 1.0 / (2.0 * rho * rho);
  const double inv_col = 1.0 / (2.0 * sigma_color * sigma_color);
  const int d = t.channels;
  double sum = 0.0;
  for (std::size_t j = 0; j < t.x.size(); ++j) {
    double dc = 0.0;
    for (int c = 0; c < d; ++c) {
      const double diff = color[c] - t.color[j * d + c];
      dc += diff * diff;
    }
    const double dx = px - t.x[j];
    const double dy = py - t.y[j];
    const double exponent = -(dx * dx + dy * dy) * inv_rho - dc * inv_col;
    if (exponent > kExpUnderflow) sum += std::exp(exponent);
  }
  const double norm = 1.0 / (2.0 * std::numbers::pi * rho * rho) *
                      std::pow(2.0 * std::numbers::pi * sigma_color * sigma_color, -0.5 * d);
  return norm * sum / static_cast<double>(t.x.size());
}

void check_color_args(const ScribbleSet& s, std::span<const double> color, double sigma_color) {
  if (s.samples.empty()) throw ParameterError("color likelihood needs at least one sample");
  if (!(sigma_color > 0.0)) throw ParameterError("sigma_color must be positive");
  for (const auto& sample : s.samples)
    if (sample.color.size() != color.size())
      throw DimensionError("sample color dimension differs from query color");
}

}  // namespace

DataTerm::DataTerm(int labels, int width, int height)
    : labels_(labels), width_(width), height_(height),
      f_(static_cast<std::size_t>(labels) * width * height, 0.0) {
  if (labels < 1) throw ParameterError("data term needs at least one label");
}

Field<double> distance_to_mask(const Field<unsigned char>& mask) {
  const int w = mask.width();
  const int h = mask.height();
  Field<double> sq(w, h);
  for (std::size_t i = 0; i < mask.size(); ++i) sq[i] = mask[i] ? 0.0 : kInf;

  const int n = std::max(w, h);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = sq(x, y);
    squared_distance_1d(std::span(f).first(h), std::span(d).first(h), v, z);
    for (int y = 0; y < h; ++y) sq(x, y) = d[y];
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[x] = sq(x, y);
    squared_distance_1d(std::span(f).first(w), std::span(d).first(w), v, z);
    for (int x = 0; x < w; ++x) sq(x, y) = std::sqrt(d[x]);
  }
  return sq;
}

Field<double> spatial_bandwidth(const ScribbleSet& scribbles, int width, int height,
                                double alpha, double rho_floor) {
  if (!(alpha > 0.0)) throw ParameterError("alpha must be positive");
  if (!(rho_floor > 0.0)) throw ParameterError("rho floor must be positive");
  Field<unsigned char> mask(width, height, 0);
  for (const auto& s : scribbles.samples) {
    if (!mask.contains(s.location)) throw ParameterError("scribble sample outside the image");
    mask(s.location.x, s.location.y) = 1;
  }
  auto rho = distance_to_mask(mask);
  for (auto& r : rho.values()) r = std::max(alpha * r, rho_floor);
  return rho;
}

double color_likelihood(Pixel x, std::span<const double> color, const ScribbleSet& scribbles,
                        double rho, double sigma_color) {
  check_color_args(scribbles, color, sigma_color);
  if (!(rho > 0.0)) throw ParameterError("spatial kernel width must be positive");
  return parzen(table_of(scribbles), x.x, x.y, color, rho, sigma_color);
}

double color_likelihood(Pixel x, std::span<const double> color, const ScribbleSet& scribbles,
                        double alpha, double sigma_color, double rho_floor) {
  check_color_args(scribbles, color, sigma_color);
  if (!(alpha > 0.0)) throw ParameterError("alpha must be positive");
  double nearest_sq = kInf;
  for (const auto& s : scribbles.samples) {
    const double dx = x.x - s.location.x;
    const double dy = x.y - s.location.y;
    nearest_sq = std::min(nearest_sq, dx * dx + dy * dy);
  }
  const double rho = std::max(alpha * std::sqrt(nearest_sq), rho_floor);
  return color_likelihood(x, color, scribbles, rho, sigma_color);
}

std::vector<double> texture_posterior(const std::optional<CoSupportSignature>& signature,
                                      std::span<const TexturalRepresentative> representatives,
                                      std::span<const double> betas) {
  const std::size_t n = representatives.size();
  if (n < 1) throw ParameterError("texture posterior needs at least one class");
  if (betas.size() != n) throw DimensionError("one temperature per class required");
  check_betas(betas);
  if (!signature) return std::vector<double>(n, 1.0 / static_cast<double>(n));

  std::vector<double> logits(n);
  for (std::size_t i = 0; i < n; ++i)
    logits[i] = -tsm(representatives[i].signature, *signature) / betas[i];
  const double lse = log_sum_exp(logits);
  for (auto& l : logits) l = std::exp(l - lse);
  return logits;
}

TexturalRepresentative scribble_representative(const ScribbleSet& scribbles, int rows) {
  std::vector<CoSupportSignature> textured;
  for (const auto& s : scribbles.samples)
    if (s.signature) textured.push_back(*s.signature);
  if (textured.empty())
    return {{std::vector<double>(static_cast<std::size_t>(rows), 1.0)}, 0};
  return textural_representative(textured);
}

std::vector<ScribbleSet> scribble_sets_from_mask(const ColorImage& image,
                                                 const SignatureField& signatures,
                                                 const Field<int>& mask) {
  if (mask.width() != image.width() || mask.height() != image.height())
    throw DimensionError(fmt::format("scribble mask is {}x{} but image is {}x{}", mask.width(),
                                     mask.height(), image.width(), image.height()));
  if (signatures.pixel_count() != image.pixel_count())
    throw DimensionError("signature field does not match image");

  std::set<int> present;
  for (int v : mask.values()) {
    if (v < 0) throw ConfigError(fmt::format("negative scribble label {}", v));
    if (v > 0) present.insert(v);
  }
  if (present.empty()) throw ConfigError("scribble mask contains no labels");
  const int n = *present.rbegin();
  for (int l = 1; l <= n; ++l)
    if (!present.contains(l))
      throw ConfigError(fmt::format("scribble labels must be contiguous from 1: label {} missing", l));

  std::vector<ScribbleSet> sets(static_cast<std::size_t>(n));
  for (int l = 0; l < n; ++l) sets[l].label = l;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) {
      const int v = mask(x, y);
      if (v == 0) continue;
      const std::size_t p = mask.index(x, y);
      const auto c = image.at(p);
      ScribbleSample sample{{x, y}, std::vector<double>(c.begin(), c.end()), std::nullopt};
      if (!signatures.is_flat(p)) sample.signature = signatures.signature(p);
      sets[v - 1].samples.push_back(std::move(sample));
    }
  return sets;
}

DataTerm build_data_term_supervised(const ColorImage& image, const SignatureField& signatures,
                                    std::span<const ScribbleSet> scribbles,
                                    const LikelihoodParams& params) {
  const int n = static_cast<int>(scribbles.size());
  if (n < 1) throw ConfigError("supervised data term needs at least one label");
  for (int i = 0; i < n; ++i)
    if (scribbles[i].samples.empty())
      throw ConfigError(fmt::format("label {} has no scribble samples", i + 1));
  if (signatures.pixel_count() != image.pixel_count())
    throw DimensionError("signature field does not match image");
  if (!(params.sigma_color > 0.0)) throw ParameterError("sigma_color must be positive");
  if (!(params.beta0 > 0.0)) throw ParameterError("beta0 must be positive");

  const int w = image.width();
  const int h = image.height();
  std::vector<Field<double>> rho;
  std::vector<SampleTable> tables;
  std::vector<TexturalRepresentative> reps;
  for (const auto& s : scribbles) {
    rho.push_back(spatial_bandwidth(s, w, h, params.alpha, params.rho_floor));
    tables.push_back(table_of(s));
    if (tables.back().channels != image.channels())
      throw DimensionError("scribble colors do not match image channels");
    reps.push_back(scribble_representative(s, signatures.rows()));
  }

  DataTerm term(n, w, h);
#pragma omp parallel
  {
    std::vector<double> logits(static_cast<std::size_t>(n));
#pragma omp for schedule(dynamic, 1)
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t p = image.index_of(x, y);
        const auto color = image.at(p);
        const bool textured = params.use_texture && !signatures.is_flat(p);
        if (textured) {
          for (int i = 0; i < n; ++i)
            logits[i] = -signatures.distance(p, reps[i].signature.values) /
                        (params.beta0 * rho[i][p]);
        }
        const double lse = textured ? log_sum_exp(logits) : 0.0;
        for (int i = 0; i < n; ++i) {
          double f = 0.0;
          if (params.use_color) {
            const double lik = parzen(tables[i], x, y, color, rho[i][p], params.sigma_color);
            f -= std::log(std::max(lik, params.color_floor));
          }
          if (textured) f -= logits[i] - lse;
          else if (params.use_texture) f += std::log(static_cast<double>(n));
          term.at(i, p) = f;
        }
      }
    }
  }
  return term;
}

DataTerm build_data_term_unsupervised(const ColorImage& image, const SignatureField& signatures,
                                      std::span<const std::vector<double>> color_centroids,
                                      std::span<const TexturalRepresentative> representatives,
                                      const UnsupervisedParams& params) {
  const int kc = static_cast<int>(color_centroids.size());
  const int kt = static_cast<int>(representatives.size());
  if (kc < 1 || kt < 1) throw ConfigError("need at least one color and one texture class");
  const int n = kc * kt;
  if (n > params.max_classes)
    throw ConfigError(fmt::format("{} classes exceed the configured maximum of {}", n,
                                  params.max_classes));
  if (signatures.pixel_count() != image.pixel_count())
    throw DimensionError("signature field does not match image");
  for (const auto& c : color_centroids)
    if (static_cast<int>(c.size()) != image.channels())
      throw DimensionError("color centroid dimension differs from image channels");
  const double beta_c = params.beta_color;
  const double beta_t = params.beta_texture > 0.0 ? params.beta_texture : signatures.rows() / 20.0;
  if (!(beta_c > 0.0)) throw ParameterError("beta_color must be positive");

  const int w = image.width();
  const int h = image.height();
  DataTerm term(n, w, h);
#pragma omp parallel
  {
    std::vector<double> color_logits(static_cast<std::size_t>(kc));
    std::vector<double> tex_logits(static_cast<std::size_t>(kt));
#pragma omp for schedule(static)
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t p = image.index_of(x, y);
        const auto color = image.at(p);
        for (int c = 0; c < kc; ++c) {
          double sq = 0.0;
          for (int ch = 0; ch < image.channels(); ++ch) {
            const double diff = color[ch] - color_centroids[c][ch];
            sq += diff * diff;
          }
          color_logits[c] = -std::sqrt(sq) / beta_c;
        }
        const double color_lse = log_sum_exp(color_logits);
        const bool flat = signatures.is_flat(p);
        for (int t = 0; t < kt; ++t)
          tex_logits[t] =
              flat ? 0.0 : -signatures.distance(p, representatives[t].signature.values) / beta_t;
        const double tex_lse = log_sum_exp(tex_logits);
        for (int c = 0; c < kc; ++c)
          for (int t = 0; t < kt; ++t)
            term.at(c * kt + t, p) = -(color_logits[c] - color_lse) - (tex_logits[t] - tex_lse);
      }
    }
  }
  return term;
}

}  // namespace cosparse
