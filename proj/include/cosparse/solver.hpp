#pragma once

#include <array>
#include <span>
#include <vector>

#include "cosparse/field.hpp"
#include "cosparse/likelihood.hpp"
#include "cosparse/segmentation.hpp"

namespace cosparse {

/// Boundary weight g = exp(-|grad I| / gamma) / (2 gamma).
struct EdgeMetric {
  Field<double> g;
  double gamma = 5.0;
};

/// Forward-difference gradient magnitude of a gray image (0..255 scale).
/// With use_mean_gamma the mean gradient magnitude replaces `gamma`, unless
/// the image is constant, in which case `gamma` is kept.
EdgeMetric edge_metric(const GrayImage& gray255, double gamma, bool use_mean_gamma = false);

/// Constant metric, mostly for tests.
EdgeMetric uniform_edge_metric(int width, int height, double gamma);

/// Forward differences with Neumann boundary (zero difference on the last column/row).
void gradient(std::span<const double> u, int width, int height, std::span<double> gx,
              std::span<double> gy);
/// Negative adjoint of `gradient`.
void divergence(std::span<const double> px, std::span<const double> py, int width, int height,
                std::span<double> out);

/// Euclidean projection onto {u >= 0, sum u = 1} by Michelot's active-set iteration.
void project_simplex_inplace(std::span<double> v);
std::vector<double> project_simplex(std::span<const double> v);

std::array<double, 2> project_ball(std::array<double, 2> xi, double radius);

struct SolverParams {
  double lambda = 2000.0;
  double nu = 0.0;
  int max_iterations = 2000;
  /// Stop once the mean per-pixel l1 change of u plus the change of m stays
  /// below tol for `patience` consecutive iterations.
  double tol = 1e-5;
  int patience = 5;
};

/// Primal (u, m), over-relaxed primal (u_bar, m_bar) and dual (xi, mu)
/// variables of the relaxed program together with their step sizes.
/// Planes are label-major: entry (i, p) sits at i * pixels + p.
struct RelaxationState {
  int labels = 0;
  int width = 0;
  int height = 0;
  std::vector<double> u, u_bar;
  std::vector<double> m, m_bar;
  std::vector<double> xi_x, xi_y;
  std::vector<double> mu;
  std::vector<double> tau_u;  // per pixel
  double tau_m = 0.0;
  double sigma_xi = 0.5;
  double sigma_mu = 0.5;
  int iteration = 0;

  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width) * height; }
  std::span<const double> u_plane(int label) const {
    return {u.data() + label * pixel_count(), pixel_count()};
  }
};

/// u at the per-pixel argmin of f, m = 1, duals zero, preconditioned steps.
RelaxationState initial_state(const DataTerm& data);

/// One sweep of the dual ascent, MDL and primal descent updates followed by
/// over-relaxation. Returns the change measure used for stopping.
double primal_dual_step(RelaxationState& state, const DataTerm& data, const EdgeMetric& metric,
                        double lambda, double nu);

struct SolveResult {
  RelaxationState state;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

SolveResult solve(const DataTerm& data, const EdgeMetric& metric, const SolverParams& params);
/// Continues from a given state.
SolveResult solve(RelaxationState state, const DataTerm& data, const EdgeMetric& metric,
                  const SolverParams& params);

/// Per-pixel argmax of u, ties to the lowest label.
Segmentation binarize(const RelaxationState& state);

/// Discrete Potts energy: data cost, weighted boundary length (isotropic
/// forward-difference TV under g, scaled by lambda/2) and nu per used label.
double energy(const Segmentation& labels, const DataTerm& data, const EdgeMetric& metric,
              double lambda, double nu);

/// Same energy evaluated on fractional u, with max_x u_i(x) standing in for
/// the label indicator.
double relaxed_energy(const RelaxationState& state, const DataTerm& data,
                      const EdgeMetric& metric, double lambda, double nu);

/// (energy(labels) - relaxed_energy(state)) / max(|relaxed_energy(state)|, 1e-9).
double optimality_gap(const RelaxationState& state, const Segmentation& labels,
                      const DataTerm& data, const EdgeMetric& metric, double lambda, double nu);

}  // namespace cosparse
