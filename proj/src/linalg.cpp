#include "qipp/linalg.hpp"

#include <cmath>
#include <numeric>

namespace qipp {

PivotedCholesky pivoted_cholesky(const Eigen::MatrixXd& matrix, double tolerance) {
  const Eigen::Index n = matrix.rows();
  Eigen::MatrixXd work = matrix;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  Eigen::Index rank = 0;
  for (; rank < n; ++rank) {
    Eigen::Index best = rank;
    for (Eigen::Index i = rank + 1; i < n; ++i) {
      if (work(i, i) > work(best, best)) best = i;
    }
    if (!(work(best, best) > tolerance)) break;
    if (best != rank) {
      work.row(rank).swap(work.row(best));
      work.col(rank).swap(work.col(best));
      std::swap(order[static_cast<std::size_t>(rank)], order[static_cast<std::size_t>(best)]);
    }
    const double pivot = std::sqrt(work(rank, rank));
    work(rank, rank) = pivot;
    const Eigen::Index tail = n - rank - 1;
    if (tail > 0) {
      work.col(rank).tail(tail) /= pivot;
      work.bottomRightCorner(tail, tail).noalias() -=
          work.col(rank).tail(tail) * work.col(rank).tail(tail).transpose();
    }
  }

  PivotedCholesky out;
  out.pivots.assign(order.begin(), order.begin() + rank);
  out.factor = work.topLeftCorner(rank, rank).triangularView<Eigen::Lower>();
  return out;
}

}  // namespace qipp
