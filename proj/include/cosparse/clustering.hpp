#pragma once

#include <cstdint>
#include <vector>

#include "cosparse/texture.hpp"

namespace cosparse {

struct ClusterOptions {
  int max_iterations = 100;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  std::vector<std::vector<double>> centroids;
  std::vector<int> assignments;
  /// Sum of squared distances after seeding and after every iteration.
  std::vector<double> objective_history;
  int iterations = 0;
};

struct KMediansResult {
  std::vector<TexturalRepresentative> representatives;
  std::vector<int> assignments;
  /// Sum of l1 distances after seeding and after every iteration.
  std::vector<double> objective_history;
  int iterations = 0;
};

/// Lloyd iterations from D^2-weighted seeding. Clusters that end up empty are
/// re-seeded at the worst-served point, or dropped when every point coincides
/// with its centroid, so fewer than k centroids may be returned.
KMeansResult kmeans_colors(const std::vector<std::vector<double>>& points, int k,
                           const ClusterOptions& opts = {});

/// Alternating nearest-l1 assignment and component-wise median update.
/// Same seeding and empty-cluster policy as kmeans_colors.
KMediansResult kmedians_signatures(const std::vector<CoSupportSignature>& signatures, int k,
                                   const ClusterOptions& opts = {});

/// Indices of at most `limit` points taken with a fixed stride.
std::vector<std::size_t> stride_sample(std::size_t count, std::size_t limit);

}  // namespace cosparse
