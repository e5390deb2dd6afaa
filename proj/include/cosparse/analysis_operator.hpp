#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cosparse {

/// Overcomplete analysis operator: rows x patch_len, rows > patch_len,
/// unit-norm non-constant rows. Immutable once constructed.
class AnalysisOperator {
 public:
  /// Normalizes every row to unit norm and validates the invariants.
  /// Throws LoadError when a row is non-finite, zero, or constant, or when
  /// the matrix is not overcomplete.
  explicit AnalysisOperator(Eigen::MatrixXd weights);

  int rows() const noexcept { return static_cast<int>(weights_.rows()); }
  int patch_len() const noexcept { return static_cast<int>(weights_.cols()); }
  const Eigen::MatrixXd& weights() const noexcept { return weights_; }

  friend bool operator==(const AnalysisOperator& a, const AnalysisOperator& b) {
    return a.weights_.rows() == b.weights_.rows() &&
           a.weights_.cols() == b.weights_.cols() && a.weights_ == b.weights_;
  }

 private:
  Eigen::MatrixXd weights_;
};

/// DC-free 2-D cosine operator for side x side patches with
/// ceil(overcompleteness * side^2) rows.
AnalysisOperator default_operator(int patch_side, double overcompleteness);

AnalysisOperator load_operator(const std::filesystem::path& path);
void write_operator(const AnalysisOperator& op, const std::filesystem::path& path);

/// O * patch.
std::vector<double> analyze(const AnalysisOperator& op, std::span<const double> patch);

}  // namespace cosparse
