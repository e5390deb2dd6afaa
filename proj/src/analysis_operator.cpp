#include "cosparse/analysis_operator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>

#include <fmt/format.h>

#include "cosparse/error.hpp"

namespace cosparse {

namespace {

constexpr const char* kMagic = "cosparse-operator";

}  // namespace

AnalysisOperator::AnalysisOperator(Eigen::MatrixXd weights) : weights_(std::move(weights)) {
  const auto k = weights_.rows();
  const auto n = weights_.cols();
  if (n < 1) throw LoadError("operator has no columns");
  if (k <= n)
    throw LoadError(fmt::format("operator is not overcomplete (k={} <= n={})", k, n));
  for (Eigen::Index r = 0; r < k; ++r) {
    auto row = weights_.row(r);
    if (!row.allFinite()) throw LoadError(fmt::format("row {} has non-finite entries", r));
    const double norm = row.norm();
    if (norm == 0.0) throw LoadError(fmt::format("row {} is zero", r));
    // Already-normalized rows are kept verbatim so files round-trip bitwise.
    if (std::abs(norm - 1.0) > 1e-14) row /= norm;
    if (n > 1 && (row.array() - row(0)).abs().maxCoeff() < 1e-12)
      throw LoadError(fmt::format("row {} is constant", r));
  }
}

AnalysisOperator default_operator(int patch_side, double overcompleteness) {
  if (patch_side < 3 || patch_side % 2 == 0)
    throw ParameterError("patch side must be odd and at least 3");
  if (!(overcompleteness >= 1.0) || !std::isfinite(overcompleteness))
    throw ParameterError("overcompleteness must be >= 1");
  const int n = patch_side * patch_side;
  const int k = static_cast<int>(std::ceil(overcompleteness * n - 1e-9));
  if (k <= n) throw ParameterError("overcompleteness too small to give more rows than pixels");

  // 1-D orthonormal DCT-II basis.
  Eigen::MatrixXd dct(patch_side, patch_side);
  for (int f = 0; f < patch_side; ++f) {
    const double scale = std::sqrt((f == 0 ? 1.0 : 2.0) / patch_side);
    for (int i = 0; i < patch_side; ++i)
      dct(f, i) = scale * std::cos(std::numbers::pi * (i + 0.5) * f / patch_side);
  }

  // Non-DC frequency pairs ordered by total frequency, then horizontal frequency.
  std::vector<std::pair<int, int>> freqs;
  for (int fy = 0; fy < patch_side; ++fy)
    for (int fx = 0; fx < patch_side; ++fx)
      if (fx != 0 || fy != 0) freqs.emplace_back(fx, fy);
  std::stable_sort(freqs.begin(), freqs.end(), [](const auto& a, const auto& b) {
    return std::pair(a.first + a.second, a.first) < std::pair(b.first + b.second, b.first);
  });

  const int atoms = static_cast<int>(freqs.size());
  Eigen::MatrixXd weights(k, n);
  for (int r = 0; r < k; ++r) {
    const auto [fx, fy] = freqs[r % atoms];
    const double sign = (r / atoms) % 2 == 0 ? 1.0 : -1.0;
    for (int y = 0; y < patch_side; ++y)
      for (int x = 0; x < patch_side; ++x)
        weights(r, y * patch_side + x) = sign * dct(fy, y) * dct(fx, x);
  }
  return AnalysisOperator(std::move(weights));
}

AnalysisOperator load_operator(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(fmt::format("cannot open operator file {}", path.string()));

  std::string header;
  if (!std::getline(in, header)) throw LoadError("operator file is empty");
  std::istringstream hs(header);
  std::string magic, version, kfield, nfield;
  hs >> magic >> version >> kfield >> nfield;
  if (magic != kMagic || version != "v1")
    throw LoadError("malformed header: expected 'cosparse-operator v1 k=<int> n=<int>'");
  auto parse_dim = [](const std::string& field, const char* key) {
    const std::string prefix = std::string(key) + "=";
    if (field.rfind(prefix, 0) != 0)
      throw LoadError(fmt::format("malformed header: missing field '{}'", key));
    try {
      std::size_t used = 0;
      const int value = std::stoi(field.substr(prefix.size()), &used);
      if (used != field.size() - prefix.size() || value < 1) throw std::invalid_argument(field);
      return value;
    } catch (const std::logic_error&) {
      throw LoadError(fmt::format("malformed header: bad value for '{}'", key));
    }
  };
  const int k = parse_dim(kfield, "k");
  const int n = parse_dim(nfield, "n");
  if (k <= n) throw LoadError(fmt::format("operator is not overcomplete (k={} <= n={})", k, n));

  Eigen::MatrixXd weights(k, n);
  std::string line;
  for (int r = 0; r < k; ++r) {
    if (!std::getline(in, line)) throw LoadError(fmt::format("missing row {}", r));
    std::istringstream ls(line);
    std::string token;
    int c = 0;
    while (ls >> token) {
      if (c >= n) throw LoadError(fmt::format("row {} has more than {} entries", r, n));
      char* end = nullptr;
      const double v = std::strtod(token.c_str(), &end);
      if (end != token.c_str() + token.size() || !std::isfinite(v))
        throw LoadError(fmt::format("row {} entry {} is not a finite number", r, c));
      weights(r, c++) = v;
    }
    if (c != n) throw LoadError(fmt::format("row {} has {} entries, expected {}", r, c, n));
  }
  while (std::getline(in, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos)
      throw LoadError("trailing data after the last row");
  return AnalysisOperator(std::move(weights));
}

void write_operator(const AnalysisOperator& op, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw LoadError(fmt::format("cannot write operator file {}", path.string()));
  out << fmt::format("{} v1 k={} n={}\n", kMagic, op.rows(), op.patch_len());
  const auto& w = op.weights();
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      out << (c ? " " : "") << fmt::format("{:.17g}", w(r, c));
    out << '\n';
  }
  if (!out) throw LoadError(fmt::format("failed writing operator file {}", path.string()));
}

std::vector<double> analyze(const AnalysisOperator& op, std::span<const double> patch) {
  if (static_cast<int>(patch.size()) != op.patch_len())
    throw DimensionError(fmt::format("patch length {} does not match operator width {}",
                                     patch.size(), op.patch_len()));
  const Eigen::Map<const Eigen::VectorXd> s(patch.data(), static_cast<Eigen::Index>(patch.size()));
  std::vector<double> a(static_cast<std::size_t>(op.rows()));
  Eigen::Map<Eigen::VectorXd>(a.data(), op.rows()).noalias() = op.weights() * s;
  return a;
}

}  // namespace cosparse
