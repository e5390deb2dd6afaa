#include "cosparse/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace cosparse {

namespace {

void check_shapes(const DataTerm& data, const EdgeMetric& metric) {
  if (data.width() != metric.g.width() || data.height() != metric.g.height())
    throw DimensionError(fmt::format("data term is {}x{} but edge metric is {}x{}", data.width(),
                                     data.height(), metric.g.width(), metric.g.height()));
}

void check_state(const RelaxationState& s, const DataTerm& data) {
  if (s.labels != data.labels() || s.width != data.width() || s.height != data.height())
    throw DimensionError("relaxation state does not match the data term");
}

double weighted_tv(std::span<const double> plane, const Field<double>& g) {
  const int w = g.width();
  const int h = g.height();
  std::vector<double> rows(static_cast<std::size_t>(h), 0.0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    double acc = 0.0;
    for (int x = 0; x < w; ++x) {
      const std::size_t p = g.index(x, y);
      const double dx = x + 1 < w ? plane[p + 1] - plane[p] : 0.0;
      const double dy = y + 1 < h ? plane[p + w] - plane[p] : 0.0;
      acc += g[p] * std::sqrt(dx * dx + dy * dy);
    }
    rows[y] = acc;
  }
  double total = 0.0;
  for (double r : rows) total += r;
  return total;
}

}  // namespace

EdgeMetric edge_metric(const GrayImage& gray255, double gamma, bool use_mean_gamma) {
  if (!use_mean_gamma && !(gamma > 0.0)) throw ParameterError("gamma must be positive");
  const int w = gray255.width();
  const int h = gray255.height();
  Field<double> mag(w, h);
  double total = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double dx = x + 1 < w ? gray255(x + 1, y) - gray255(x, y) : 0.0;
      const double dy = y + 1 < h ? gray255(x, y + 1) - gray255(x, y) : 0.0;
      mag(x, y) = std::sqrt(dx * dx + dy * dy);
      total += mag(x, y);
    }
  if (use_mean_gamma && mag.size() > 0 && total > 0.0) gamma = total / static_cast<double>(mag.size());
  if (!(gamma > 0.0)) throw ParameterError("gamma must be positive");
  for (auto& v : mag.values()) v = std::exp(-v / gamma) / (2.0 * gamma);
  return {std::move(mag), gamma};
}

EdgeMetric uniform_edge_metric(int width, int height, double gamma) {
  if (!(gamma > 0.0)) throw ParameterError("gamma must be positive");
  return {Field<double>(width, height, 1.0 / (2.0 * gamma)), gamma};
}

void gradient(std::span<const double> u, int width, int height, std::span<double> gx,
              std::span<double> gy) {
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * width + x;
      gx[p] = x + 1 < width ? u[p + 1] - u[p] : 0.0;
      gy[p] = y + 1 < height ? u[p + width] - u[p] : 0.0;
    }
}

void divergence(std::span<const double> px, std::span<const double> py, int width, int height,
                std::span<double> out) {
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * width + x;
      double d = 0.0;
      if (x + 1 < width) d += px[p];
      if (x > 0) d -= px[p - 1];
      if (y + 1 < height) d += py[p];
      if (y > 0) d -= py[p - width];
      out[p] = d;
    }
}

void project_simplex_inplace(std::span<double> v) {
  if (v.empty()) return;
  // Michelot: project onto the hyperplane of the active coordinates, drop the
  // ones that turn negative, repeat. Dropped coordinates are marked -inf.
  constexpr double kDropped = -std::numeric_limits<double>::infinity();
  double shift = 0.0;
  while (true) {
    double sum = 0.0;
    std::size_t active = 0;
    for (double x : v)
      if (x != kDropped) {
        sum += x;
        ++active;
      }
    shift = (sum - 1.0) / static_cast<double>(active);
    bool dropped = false;
    for (double& x : v)
      if (x != kDropped && x - shift < 0.0) {
        x = kDropped;
        dropped = true;
      }
    if (!dropped) break;
  }
  for (double& x : v) x = x == kDropped ? 0.0 : x - shift;
}

std::vector<double> project_simplex(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  project_simplex_inplace(out);
  return out;
}

std::array<double, 2> project_ball(std::array<double, 2> xi, double radius) {
  const double norm = std::hypot(xi[0], xi[1]);
  if (norm <= radius) return xi;
  const double s = radius / norm;
  return {xi[0] * s, xi[1] * s};
}

RelaxationState initial_state(const DataTerm& data) {
  RelaxationState s;
  s.labels = data.labels();
  s.width = data.width();
  s.height = data.height();
  const std::size_t np = s.pixel_count();
  const std::size_t total = np * static_cast<std::size_t>(s.labels);
  s.u.assign(total, 0.0);
  for (std::size_t p = 0; p < np; ++p) {
    int best = 0;
    for (int i = 1; i < s.labels; ++i)
      if (data.at(i, p) < data.at(best, p)) best = i;
    s.u[best * np + p] = 1.0;
  }
  s.u_bar = s.u;
  s.m.assign(static_cast<std::size_t>(s.labels), 1.0);
  s.m_bar = s.m;
  s.xi_x.assign(total, 0.0);
  s.xi_y.assign(total, 0.0);
  s.mu.assign(total, 0.0);

  // Diagonal preconditioning: reciprocal absolute column sums for primal
  // variables, reciprocal absolute row sums (all 2) for dual variables.
  s.tau_u.resize(np);
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      int degree = 1;  // mu coupling
      degree += (x + 1 < s.width) + (x > 0) + (y + 1 < s.height) + (y > 0);
      s.tau_u[static_cast<std::size_t>(y) * s.width + x] = 1.0 / degree;
    }
  s.tau_m = np > 0 ? 1.0 / static_cast<double>(np) : 0.0;
  s.sigma_xi = 0.5;
  s.sigma_mu = 0.5;
  return s;
}

double primal_dual_step(RelaxationState& s, const DataTerm& data, const EdgeMetric& metric,
                        double lambda, double nu) {
  check_state(s, data);
  check_shapes(data, metric);
  const int n = s.labels;
  const int w = s.width;
  const int h = s.height;
  const std::size_t np = s.pixel_count();
  const auto& g = metric.g;

  // Dual ascent on xi (ball of radius lambda*g/2) and mu (non-positive),
  // with per-row partial sums of mu for a deterministic integral.
  std::vector<double> mu_rows(static_cast<std::size_t>(n) * h, 0.0);
#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < n; ++i)
    for (int y = 0; y < h; ++y) {
      const std::size_t base = i * np;
      const double* ub = s.u_bar.data() + base;
      double row_sum = 0.0;
      for (int x = 0; x < w; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        const double gx = x + 1 < w ? ub[p + 1] - ub[p] : 0.0;
        const double gy = y + 1 < h ? ub[p + w] - ub[p] : 0.0;
        const auto xi = project_ball({s.xi_x[base + p] + s.sigma_xi * gx,
                                      s.xi_y[base + p] + s.sigma_xi * gy},
                                     0.5 * lambda * g[p]);
        s.xi_x[base + p] = xi[0];
        s.xi_y[base + p] = xi[1];
        double& mu = s.mu[base + p];
        mu = std::min(0.0, mu + s.sigma_mu * (s.m_bar[i] - ub[p]));
        row_sum += mu;
      }
      mu_rows[static_cast<std::size_t>(i) * h + y] = row_sum;
    }

  // MDL maximum variables.
  const std::vector<double> m_old = s.m;
  double m_change = 0.0;
  for (int i = 0; i < n; ++i) {
    double integral = 0.0;
    for (int y = 0; y < h; ++y) integral += mu_rows[static_cast<std::size_t>(i) * h + y];
    s.m[i] = std::clamp(s.m[i] - s.tau_m * (nu + integral), 0.0, 1.0);
    s.m_bar[i] = 2.0 * s.m[i] - m_old[i];
    m_change += std::abs(s.m[i] - m_old[i]);
  }

  // Primal descent on u with per-pixel simplex projection, then over-relaxation.
  std::vector<double> change_rows(static_cast<std::size_t>(h), 0.0);
#pragma omp parallel
  {
    std::vector<double> v(static_cast<std::size_t>(n));
    std::vector<double> old(static_cast<std::size_t>(n));
#pragma omp for schedule(static)
    for (int y = 0; y < h; ++y) {
      double row_change = 0.0;
      for (int x = 0; x < w; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        for (int i = 0; i < n; ++i) {
          const std::size_t q = i * np + p;
          double div = 0.0;
          if (x + 1 < w) div += s.xi_x[q];
          if (x > 0) div -= s.xi_x[q - 1];
          if (y + 1 < h) div += s.xi_y[q];
          if (y > 0) div -= s.xi_y[q - w];
          old[i] = s.u[q];
          v[i] = old[i] - s.tau_u[p] * (-div + data.at(i, p) - s.mu[q]);
        }
        project_simplex_inplace(v);
        for (int i = 0; i < n; ++i) {
          const std::size_t q = i * np + p;
          s.u[q] = v[i];
          s.u_bar[q] = 2.0 * v[i] - old[i];
          row_change += std::abs(v[i] - old[i]);
        }
      }
      change_rows[y] = row_change;
    }
  }
  double u_change = 0.0;
  for (double c : change_rows) u_change += c;
  ++s.iteration;
  const double residual = (np > 0 ? u_change / static_cast<double>(np) : 0.0) + m_change;
  if (!std::isfinite(residual))
    throw DivergenceError(fmt::format("non-finite value at iteration {}", s.iteration),
                          s.iteration);
  return residual;
}

SolveResult solve(const DataTerm& data, const EdgeMetric& metric, const SolverParams& params) {
  for (double f : data.values())
    if (!std::isfinite(f)) throw DivergenceError("data term has non-finite entries", 0);
  return solve(initial_state(data), data, metric, params);
}

SolveResult solve(RelaxationState state, const DataTerm& data, const EdgeMetric& metric,
                  const SolverParams& params) {
  if (params.max_iterations < 1) throw ParameterError("max_iterations must be at least 1");
  if (!(params.lambda >= 0.0)) throw ParameterError("lambda must be non-negative");
  if (!(params.nu >= 0.0)) throw ParameterError("nu must be non-negative");
  check_state(state, data);
  check_shapes(data, metric);

  SolveResult result;
  int quiet = 0;
  for (int it = 0; it < params.max_iterations; ++it) {
    result.residual = primal_dual_step(state, data, metric, params.lambda, params.nu);
    result.iterations = it + 1;
    quiet = result.residual < params.tol ? quiet + 1 : 0;
    if (quiet >= std::max(params.patience, 1)) {
      result.converged = true;
      break;
    }
  }
  result.state = std::move(state);
  return result;
}

Segmentation binarize(const RelaxationState& state) {
  Segmentation seg{Field<int>(state.width, state.height, 0), state.labels};
  const std::size_t np = state.pixel_count();
  for (std::size_t p = 0; p < np; ++p) {
    int best = 0;
    for (int i = 1; i < state.labels; ++i)
      if (state.u[i * np + p] > state.u[best * np + p]) best = i;
    seg.labels[p] = best;
  }
  return seg;
}

double energy(const Segmentation& seg, const DataTerm& data, const EdgeMetric& metric,
              double lambda, double nu) {
  check_shapes(data, metric);
  const auto& L = seg.labels;
  if (L.width() != data.width() || L.height() != data.height())
    throw DimensionError("segmentation does not match the data term");
  const int w = L.width();
  const int h = L.height();
  std::vector<bool> used(static_cast<std::size_t>(data.labels()), false);
  double data_cost = 0.0;
  double boundary = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t p = L.index(x, y);
      const int c = L[p];
      if (c < 0 || c >= data.labels()) throw ParameterError("label outside the data term range");
      used[c] = true;
      data_cost += data.at(c, p);
      const int right = x + 1 < w ? L[p + 1] : c;
      const int below = y + 1 < h ? L[p + w] : c;
      // Each distinct label among (c, right, below) has indicator differences in {-1, 0, 1}.
      const int candidates[3] = {c, right, below};
      double local = 0.0;
      for (int k = 0; k < 3; ++k) {
        const int l = candidates[k];
        if ((k == 1 && l == c) || (k == 2 && (l == c || l == right))) continue;
        const int dx = (right == l) - (c == l);
        const int dy = (below == l) - (c == l);
        local += std::sqrt(static_cast<double>(dx * dx + dy * dy));
      }
      boundary += metric.g[p] * local;
    }
  const auto active = std::count(used.begin(), used.end(), true);
  return data_cost + 0.5 * lambda * boundary + nu * static_cast<double>(active);
}

double relaxed_energy(const RelaxationState& state, const DataTerm& data,
                      const EdgeMetric& metric, double lambda, double nu) {
  check_state(state, data);
  check_shapes(data, metric);
  const std::size_t np = state.pixel_count();
  double total = 0.0;
  for (int i = 0; i < state.labels; ++i) {
    const auto u = state.u_plane(i);
    const auto f = data.label_slice(i);
    double data_cost = 0.0;
    double peak = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
      data_cost += u[p] * f[p];
      peak = std::max(peak, u[p]);
    }
    total += data_cost + 0.5 * lambda * weighted_tv(u, metric.g) + nu * peak;
  }
  return total;
}

double optimality_gap(const RelaxationState& state, const Segmentation& labels,
                      const DataTerm& data, const EdgeMetric& metric, double lambda, double nu) {
  const double relaxed = relaxed_energy(state, data, metric, lambda, nu);
  const double binary = energy(labels, data, metric, lambda, nu);
  return (binary - relaxed) / std::max(std::abs(relaxed), 1e-9);
}

}  // namespace cosparse
