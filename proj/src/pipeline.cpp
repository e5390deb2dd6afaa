#include "cosparse/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>
#include <tuple>

#include <fmt/format.h>

#include "cosparse/clustering.hpp"
#include "cosparse/image_io.hpp"
#include "cosparse/texture.hpp"

namespace cosparse {

namespace {

using Clock = std::chrono::steady_clock;

double millis_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

SignatureField signatures_for(const ColorImage& image, const AnalysisOperator& op,
                              const SegConfig& config) {
  const PatchOptions opts{config.patch_side, config.effective_mask_std()};
  return compute_signatures(to_gray255(image), op, config.sigma_texture, opts);
}

SegmentationResult finish(const SolveResult& solved, const DataTerm& data,
                          const EdgeMetric& metric, const SegConfig& config,
                          Clock::time_point start) {
  SegmentationResult out;
  out.segmentation = binarize(solved.state);
  auto& d = out.diagnostics;
  d.energy = energy(out.segmentation, data, metric, config.lambda, config.nu);
  d.gap = optimality_gap(solved.state, out.segmentation, data, metric, config.lambda, config.nu);
  d.iterations = solved.iterations;
  d.converged = solved.converged;
  d.initial_labels = data.labels();
  d.active_labels = out.segmentation.active_labels();
  d.millis = millis_since(start);
  return out;
}

SolverParams solver_params(const SegConfig& c) {
  SolverParams p;
  p.lambda = c.lambda;
  p.nu = c.nu;
  p.max_iterations = c.max_iterations;
  p.tol = c.tol;
  return p;
}

}  // namespace

SegConfig SegConfig::supervised_defaults() { return SegConfig{}; }

SegConfig SegConfig::unsupervised_defaults() {
  SegConfig c;
  c.mode = Mode::unsupervised;
  c.lambda = 6.0;
  c.nu = 1100.0;
  c.color_classes = 4;
  c.texture_classes = 4;
  return c;
}

void SegConfig::validate() const {
  if (patch_side < 3 || patch_side % 2 == 0) throw ParameterError("patch side must be odd and >= 3");
  if (!(overcompleteness >= 1.0)) throw ParameterError("overcompleteness must be >= 1");
  if (!(sigma_texture > 0.0)) throw ParameterError("sigma_texture must be positive");
  if (!(likelihood.sigma_color > 0.0)) throw ParameterError("sigma_color must be positive");
  if (!(likelihood.alpha > 0.0)) throw ParameterError("alpha must be positive");
  if (!(likelihood.beta0 > 0.0)) throw ParameterError("beta0 must be positive");
  if (!(likelihood.rho_floor > 0.0)) throw ParameterError("rho floor must be positive");
  if (!use_mean_gamma && !(gamma > 0.0)) throw ParameterError("gamma must be positive");
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be non-negative");
  if (!(nu >= 0.0)) throw ParameterError("nu must be non-negative");
  if (max_iterations < 1) throw ParameterError("max_iterations must be at least 1");
  if (!(tol > 0.0)) throw ParameterError("tol must be positive");
  if (mode == Mode::unsupervised) {
    if (color_classes < 1 || texture_classes < 1)
      throw ConfigError("unsupervised mode needs color and texture class counts >= 1");
    if (color_classes * texture_classes > max_classes)
      throw ConfigError(fmt::format("{} x {} classes exceed the maximum of {}", color_classes,
                                    texture_classes, max_classes));
    if (!(beta_color > 0.0)) throw ParameterError("beta_color must be positive");
  }
}

AnalysisOperator operator_for(const SegConfig& config) {
  return default_operator(config.patch_side, config.overcompleteness);
}

SegmentationResult segment_supervised(const ColorImage& image, const Field<int>& scribbles,
                                      const SegConfig& config, const AnalysisOperator& op) {
  config.validate();
  const auto start = Clock::now();
  if (scribbles.width() != image.width() || scribbles.height() != image.height())
    throw DimensionError(fmt::format("scribbles are {}x{} but image is {}x{}", scribbles.width(),
                                     scribbles.height(), image.width(), image.height()));
  const auto signatures = signatures_for(image, op, config);
  const auto sets = scribble_sets_from_mask(image, signatures, scribbles);
  const auto data = build_data_term_supervised(image, signatures, sets, config.likelihood);
  const auto metric = edge_metric(to_gray255(image), config.gamma, config.use_mean_gamma);
  const auto solved = solve(data, metric, solver_params(config));
  return finish(solved, data, metric, config, start);
}

SegmentationResult segment_unsupervised(const ColorImage& image, const SegConfig& config,
                                        const AnalysisOperator& op) {
  config.validate();
  const auto start = Clock::now();
  const auto signatures = signatures_for(image, op, config);

  const auto sample = stride_sample(image.pixel_count(), config.cluster_sample_limit);
  std::vector<std::vector<double>> colors;
  std::vector<CoSupportSignature> sigs;
  colors.reserve(sample.size());
  sigs.reserve(sample.size());
  for (auto p : sample) {
    const auto c = image.at(p);
    colors.emplace_back(c.begin(), c.end());
    sigs.push_back(signatures.signature(p));
  }
  const int kc = std::min<int>(config.color_classes, static_cast<int>(colors.size()));
  const int kt = std::min<int>(config.texture_classes, static_cast<int>(sigs.size()));
  ClusterOptions copts;
  copts.seed = config.seed;
  const auto color_model = kmeans_colors(colors, kc, copts);
  const auto texture_model = kmedians_signatures(sigs, kt, copts);

  UnsupervisedParams up;
  up.beta_color = config.beta_color;
  up.beta_texture = config.beta_texture;
  up.max_classes = config.max_classes;
  const auto data = build_data_term_unsupervised(image, signatures, color_model.centroids,
                                                 texture_model.representatives, up);
  const auto metric = edge_metric(to_gray255(image), config.gamma, config.use_mean_gamma);
  const auto solved = solve(data, metric, solver_params(config));
  auto result = finish(solved, data, metric, config, start);

  // Compact surviving classes to 0..k-1.
  const auto& active = result.diagnostics.active_labels;
  std::vector<int> remap(static_cast<std::size_t>(data.labels()), -1);
  for (std::size_t i = 0; i < active.size(); ++i) remap[active[i]] = static_cast<int>(i);
  for (auto& l : result.segmentation.labels.values()) l = remap[l];
  result.segmentation.num_labels = static_cast<int>(active.size());
  return result;
}

double dice_score(const Segmentation& result, const Segmentation& truth) {
  const auto& A = result.labels;
  const auto& B = truth.labels;
  if (A.width() != B.width() || A.height() != B.height())
    throw DimensionError(fmt::format("segmentations differ in size ({}x{} vs {}x{})", A.width(),
                                     A.height(), B.width(), B.height()));
  int n = std::max(result.num_labels, truth.num_labels);
  for (std::size_t p = 0; p < A.size(); ++p) n = std::max({n, A[p] + 1, B[p] + 1});
  if (n == 0) return 1.0;
  std::vector<double> size_a(n, 0.0), size_b(n, 0.0), overlap(n, 0.0);
  for (std::size_t p = 0; p < A.size(); ++p) {
    if (B[p] < 0) continue;
    if (A[p] >= 0) size_a[A[p]] += 1.0;
    size_b[B[p]] += 1.0;
    if (A[p] == B[p]) overlap[A[p]] += 1.0;
  }
  double total = 0.0;
  for (int l = 0; l < n; ++l) {
    const double denom = size_a[l] + size_b[l];
    total += denom == 0.0 ? 1.0 : 2.0 * overlap[l] / denom;
  }
  return total / n;
}

Segmentation match_labels_greedy(const Segmentation& result, const Segmentation& truth) {
  const auto& A = result.labels;
  const auto& B = truth.labels;
  if (A.width() != B.width() || A.height() != B.height())
    throw DimensionError("segmentations differ in size");
  int na = result.num_labels, nb = truth.num_labels;
  for (std::size_t p = 0; p < A.size(); ++p) {
    na = std::max(na, A[p] + 1);
    nb = std::max(nb, B[p] + 1);
  }
  std::vector<long> overlap(static_cast<std::size_t>(na) * nb, 0);
  for (std::size_t p = 0; p < A.size(); ++p)
    if (A[p] >= 0 && B[p] >= 0) ++overlap[static_cast<std::size_t>(A[p]) * nb + B[p]];

  std::vector<std::tuple<long, int, int>> pairs;
  for (int a = 0; a < na; ++a)
    for (int b = 0; b < nb; ++b)
      if (const long o = overlap[static_cast<std::size_t>(a) * nb + b]; o > 0)
        pairs.emplace_back(-o, a, b);
  std::sort(pairs.begin(), pairs.end());
  std::vector<int> remap(static_cast<std::size_t>(na), -1);
  std::vector<bool> taken(static_cast<std::size_t>(nb), false);
  for (const auto& [neg, a, b] : pairs)
    if (remap[a] < 0 && !taken[b]) {
      remap[a] = b;
      taken[b] = true;
    }
  int next = nb;
  for (auto& r : remap)
    if (r < 0) r = next++;

  Segmentation out{Field<int>(A.width(), A.height()), std::max(next, nb)};
  for (std::size_t p = 0; p < A.size(); ++p) out.labels[p] = A[p] < 0 ? A[p] : remap[A[p]];
  return out;
}

std::vector<BenchRow> run_bench(const std::filesystem::path& manifest, const SegConfig& config,
                                const AnalysisOperator& op) {
  std::ifstream in(manifest);
  if (!in) throw ConfigError(fmt::format("cannot open manifest {}", manifest.string()));
  const auto base = manifest.parent_path();
  std::vector<BenchRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string image_path, scribble_path, truth_path, extra;
    if (!(ls >> image_path)) continue;
    if (!(ls >> scribble_path >> truth_path) || (ls >> extra))
      throw ConfigError(fmt::format("manifest line {}: expected 'image scribbles truth'", line_no));
    const auto image = read_image(base / image_path);
    const auto scribbles = read_index_map(base / scribble_path);
    const auto truth = read_label_map(base / truth_path);
    const auto result = segment_supervised(image, scribbles, config, op);
    rows.push_back({image_path, dice_score(result.segmentation, truth),
                    result.diagnostics.energy, result.diagnostics.gap,
                    result.diagnostics.iterations, result.diagnostics.millis});
  }
  return rows;
}

std::string format_bench_tsv(const std::vector<BenchRow>& rows) {
  std::string out = "image\tdice\tenergy\tgap\titerations\tmillis\n";
  double dice = 0.0, millis = 0.0;
  for (const auto& r : rows) {
    out += fmt::format("{}\t{:.6f}\t{:.6g}\t{:.6g}\t{}\t{:.1f}\n", r.image, r.dice, r.energy, r.gap,
                       r.iterations, r.millis);
    dice += r.dice;
    millis += r.millis;
  }
  if (!rows.empty())
    out += fmt::format("mean\t{:.6f}\t\t\t\t{:.1f}\n", dice / rows.size(), millis / rows.size());
  return out;
}

}  // namespace cosparse
