#include "cosparse/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

namespace cosparse {

namespace {

double squared_l2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Shared Lloyd-style driver. `Cost` is the point-to-center cost whose sum is
// minimized, `Update` recomputes a center from its members.
template <typename Cost, typename Update>
struct Alternation {
  const std::vector<std::vector<double>>& points;
  Cost cost;
  Update update;
  // Seeding samples proportionally to the squared distance.
  bool cost_is_squared;

  double seed_weight(double c) const { return cost_is_squared ? c : c * c; }

  std::vector<std::vector<double>> seed_centers(int k, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    const std::size_t n = points.size();
    std::vector<std::vector<double>> centers;
    centers.push_back(points[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) dist[i] = cost(points[i], centers[0]);
    while (static_cast<int>(centers.size()) < k) {
      double total = 0.0;
      for (double d : dist) total += seed_weight(d);
      if (total <= 0.0) break;
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      std::size_t pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        r -= seed_weight(dist[i]);
        if (r < 0.0 && dist[i] > 0.0) {
          pick = i;
          break;
        }
      }
      if (dist[pick] <= 0.0)
        pick = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
      centers.push_back(points[pick]);
      for (std::size_t i = 0; i < n; ++i) dist[i] = std::min(dist[i], cost(points[i], centers.back()));
    }
    return centers;
  }

  double assign(const std::vector<std::vector<double>>& centers, std::vector<int>& labels,
                std::vector<double>& costs) const {
    const std::size_t n = points.size();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_cost = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < centers.size(); ++c) {
        const double d = cost(points[i], centers[c]);
        if (d < best_cost) {
          best_cost = d;
          best = static_cast<int>(c);
        }
      }
      labels[i] = best;
      costs[i] = best_cost;
    }
    double total = 0.0;
    for (double c : costs) total += c;
    return total;
  }

  struct Outcome {
    std::vector<std::vector<double>> centers;
    std::vector<int> labels;
    std::vector<double> history;
    int iterations = 0;
  };

  Outcome run(int k, const ClusterOptions& opts) const {
    Outcome out;
    const std::size_t n = points.size();
    out.centers = seed_centers(k, opts.seed);
    out.labels.assign(n, -1);
    std::vector<double> costs(n);
    std::vector<int> previous;
    out.history.push_back(assign(out.centers, out.labels, costs));

    for (int it = 0; it < opts.max_iterations; ++it) {
      previous = out.labels;
      // Update step; empty clusters take over the worst-served point.
      std::vector<std::vector<std::size_t>> members(out.centers.size());
      for (std::size_t i = 0; i < n; ++i) members[out.labels[i]].push_back(i);
      std::vector<std::vector<double>> next;
      for (std::size_t c = 0; c < out.centers.size(); ++c) {
        if (!members[c].empty()) {
          next.push_back(update(members[c]));
          continue;
        }
        const auto worst = std::max_element(costs.begin(), costs.end()) - costs.begin();
        if (costs[worst] <= 0.0) continue;
        next.push_back(points[worst]);
        costs[worst] = 0.0;
      }
      out.centers = std::move(next);
      out.history.push_back(assign(out.centers, out.labels, costs));
      out.iterations = it + 1;
      if (out.labels == previous) break;
    }

    // Drop centers that lost every member in the final assignment.
    std::vector<int> remap(out.centers.size(), -1);
    std::vector<std::vector<double>> kept;
    std::vector<bool> used(out.centers.size(), false);
    for (int l : out.labels) used[l] = true;
    for (std::size_t c = 0; c < out.centers.size(); ++c)
      if (used[c]) {
        remap[c] = static_cast<int>(kept.size());
        kept.push_back(std::move(out.centers[c]));
      }
    for (int& l : out.labels) l = remap[l];
    out.centers = std::move(kept);
    return out;
  }
};

template <typename Cost, typename Update>
Alternation<Cost, Update> make_alternation(const std::vector<std::vector<double>>& points,
                                           Cost cost, Update update, bool cost_is_squared) {
  return {points, cost, update, cost_is_squared};
}

void check_inputs(std::size_t count, int k, const char* what) {
  if (k < 1) throw ParameterError(fmt::format("{}: cluster count must be positive", what));
  if (static_cast<std::size_t>(k) > count)
    throw ParameterError(fmt::format("{}: {} clusters requested for {} points", what, k, count));
}

}  // namespace

KMeansResult kmeans_colors(const std::vector<std::vector<double>>& points, int k,
                           const ClusterOptions& opts) {
  check_inputs(points.size(), k, "k-means");
  const std::size_t d = points.front().size();
  for (const auto& p : points)
    if (p.size() != d) throw DimensionError("k-means points of unequal dimension");

  auto mean_of = [&](const std::vector<std::size_t>& idx) {
    std::vector<double> m(d, 0.0);
    for (auto i : idx)
      for (std::size_t c = 0; c < d; ++c) m[c] += points[i][c];
    for (auto& v : m) v /= static_cast<double>(idx.size());
    return m;
  };
  const auto alt = make_alternation(
      points, [](std::span<const double> a, std::span<const double> b) { return squared_l2(a, b); },
      mean_of, true);
  auto outcome = alt.run(k, opts);
  return {std::move(outcome.centers), std::move(outcome.labels), std::move(outcome.history),
          outcome.iterations};
}

KMediansResult kmedians_signatures(const std::vector<CoSupportSignature>& signatures, int k,
                                   const ClusterOptions& opts) {
  check_inputs(signatures.size(), k, "k-medians");
  const std::size_t d = signatures.front().size();
  std::vector<std::vector<double>> points;
  points.reserve(signatures.size());
  for (const auto& s : signatures) {
    if (s.size() != d) throw DimensionError("k-medians signatures of unequal length");
    points.push_back(s.values);
  }
  auto median_of = [&](const std::vector<std::size_t>& idx) {
    std::vector<CoSupportSignature> members;
    members.reserve(idx.size());
    for (auto i : idx) members.push_back(signatures[i]);
    return textural_representative(members).signature.values;
  };
  const auto alt = make_alternation(
      points, [](std::span<const double> a, std::span<const double> b) { return l1_distance(a, b); },
      median_of, false);
  auto outcome = alt.run(k, opts);

  KMediansResult result;
  result.assignments = std::move(outcome.labels);
  std::vector<std::size_t> counts(outcome.centers.size(), 0);
  for (int l : result.assignments) ++counts[l];
  for (std::size_t c = 0; c < outcome.centers.size(); ++c)
    result.representatives.push_back({{std::move(outcome.centers[c])}, counts[c]});
  result.objective_history = std::move(outcome.history);
  result.iterations = outcome.iterations;
  return result;
}

std::vector<std::size_t> stride_sample(std::size_t count, std::size_t limit) {
  std::vector<std::size_t> idx;
  if (count == 0 || limit == 0) return idx;
  const std::size_t stride = (count + limit - 1) / limit;
  for (std::size_t i = 0; i < count; i += stride) idx.push_back(i);
  return idx;
}

}  // namespace cosparse
