#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cosparse/analysis_operator.hpp"
#include "cosparse/likelihood.hpp"
#include "cosparse/segmentation.hpp"
#include "cosparse/solver.hpp"

namespace cosparse {

enum class Mode { supervised, unsupervised };

struct SegConfig {
  Mode mode = Mode::supervised;
  int patch_side = 9;
  double overcompleteness = 2.0;
  double sigma_texture = 0.01;
  /// Gaussian mask std in pixels; non-positive selects patch_side / 4.
  double mask_std = 0.0;
  LikelihoodParams likelihood;
  double gamma = 5.0;
  bool use_mean_gamma = false;
  double lambda = 2000.0;
  double nu = 0.0;
  int color_classes = 4;
  int texture_classes = 4;
  int max_classes = 64;
  double beta_color = 0.1;
  /// Non-positive selects operator rows / 20.
  double beta_texture = 0.0;
  std::size_t cluster_sample_limit = 50000;
  int max_iterations = 2000;
  double tol = 1e-5;
  std::uint64_t seed = 0;

  static SegConfig supervised_defaults();
  /// lambda = 6, nu = 1100, 4 x 4 initial classes.
  static SegConfig unsupervised_defaults();

  double effective_mask_std() const { return mask_std > 0.0 ? mask_std : patch_side / 4.0; }
  /// Throws ParameterError / ConfigError on inconsistent settings.
  void validate() const;
};

struct Diagnostics {
  double energy = 0.0;
  double gap = 0.0;
  int iterations = 0;
  bool converged = false;
  double millis = 0.0;
  int initial_labels = 0;
  std::vector<int> active_labels;
};

struct SegmentationResult {
  Segmentation segmentation;
  Diagnostics diagnostics;
};

/// Default cosine operator sized by the configuration.
AnalysisOperator operator_for(const SegConfig& config);

/// `scribbles`: 0 unlabeled, v >= 1 label v; labels must be exactly 1..n.
SegmentationResult segment_supervised(const ColorImage& image, const Field<int>& scribbles,
                                      const SegConfig& config, const AnalysisOperator& op);
/// Active labels are renumbered 0..k-1 in the returned segmentation.
SegmentationResult segment_unsupervised(const ColorImage& image, const SegConfig& config,
                                        const AnalysisOperator& op);

/// Mean per-label Dice over labels 0..n-1, n the larger label count of the
/// two maps. Void truth pixels are skipped; a label absent from both counts 1.
double dice_score(const Segmentation& result, const Segmentation& truth);

/// Relabels `result` so each truth label receives the result label with the
/// largest remaining overlap; unmatched result labels get fresh indices.
Segmentation match_labels_greedy(const Segmentation& result, const Segmentation& truth);

struct BenchRow {
  std::string image;
  double dice = 0.0;
  double energy = 0.0;
  double gap = 0.0;
  int iterations = 0;
  double millis = 0.0;
};

/// Manifest: one "image scribbles truth" triple per line, paths relative to
/// the manifest; blank lines and '#' comments are ignored.
std::vector<BenchRow> run_bench(const std::filesystem::path& manifest, const SegConfig& config,
                                const AnalysisOperator& op);
std::string format_bench_tsv(const std::vector<BenchRow>& rows);

}  // namespace cosparse
