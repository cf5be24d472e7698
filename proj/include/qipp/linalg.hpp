#pragma once

#include <vector>

#include <Eigen/Core>

namespace qipp {

/// Greedy diagonal-pivoted Cholesky of a symmetric PSD matrix, stopped once
/// the largest remaining pivot drops to `tolerance` or below.
///
/// `pivots[0..rank)` are the rows kept, in pivot order, and `factor` is the
/// rank x rank lower factor with A[pivots, pivots] = factor * factor^T.
struct PivotedCholesky {
  std::vector<Eigen::Index> pivots;
  Eigen::MatrixXd factor;

  Eigen::Index rank() const { return static_cast<Eigen::Index>(pivots.size()); }
};

PivotedCholesky pivoted_cholesky(const Eigen::MatrixXd& matrix, double tolerance);

/// Jitter ladder tried by every factorization in the library.
inline constexpr double kJitterLadder[] = {0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4};

}  // namespace qipp
