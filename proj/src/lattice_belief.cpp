#include "qipp/lattice_belief.hpp"

#include <algorithm>
#include <stdexcept>

#include "qipp/linalg.hpp"

namespace qipp {

LatticePosterior::LatticePosterior(const GpModel& gp, const Points& lattice)
    : mean_(gp.predict_mean(lattice)), covariance_(gp.predict_covariance(lattice)), noise_(gp.observation_noise()),
      nominal_noise_(gp.hyperparams().noise_variance) {}

LatticeState::LatticeState(const LatticePosterior& root) : root_(&root), mean_(root.mean()) {
  factor_.resize(static_cast<Eigen::Index>(root.size()), 64);
}

void LatticeState::reset() {
  mean_ = root_->mean();
  rank_ = 0;
}

double LatticeState::variance(std::size_t index) const {
  const auto i = static_cast<Eigen::Index>(index);
  double v = root_->covariance()(i, i);
  if (rank_ > 0) v -= factor_.row(i).head(rank_).squaredNorm();
  return std::max(v, 0.0);
}

LatticeUpdate LatticeState::prepare(std::span<const std::size_t> indices, std::span<const double> values) const {
  if (indices.size() != values.size()) throw std::invalid_argument("LatticeState: misaligned update");
  const auto k = static_cast<Eigen::Index>(indices.size());
  const Eigen::Index m = mean_.size();
  const Eigen::MatrixXd& sigma0 = root_->covariance();

  // Sigma[:, I] under the current correction.
  Eigen::MatrixXd cross(m, k);
  for (Eigen::Index j = 0; j < k; ++j) cross.col(j) = sigma0.col(static_cast<Eigen::Index>(indices[j]));
  if (rank_ > 0) {
    Eigen::MatrixXd u_sel(k, rank_);
    for (Eigen::Index j = 0; j < k; ++j) {
      u_sel.row(j) = factor_.row(static_cast<Eigen::Index>(indices[j])).head(rank_);
    }
    cross.noalias() -= factor_.leftCols(rank_) * u_sel.transpose();
  }

  LatticeUpdate up;
  up.candidate_means.resize(indices.size());
  up.candidate_variances.resize(indices.size());
  Eigen::MatrixXd schur(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto idx = static_cast<Eigen::Index>(indices[j]);
    up.candidate_means[j] = mean_(idx);
    up.candidate_variances[j] = std::max(cross(idx, j), 0.0);
    for (Eigen::Index i = 0; i < k; ++i) schur(i, j) = cross(static_cast<Eigen::Index>(indices[i]), j);
  }
  schur = 0.5 * (schur + schur.transpose());
  schur.diagonal().array() += root_->noise();

  const double scale = std::max(sigma0.diagonal().maxCoeff(), 1e-300);
  const PivotedCholesky piv = pivoted_cholesky(schur, 1e-10 * scale);
  const Eigen::Index r = piv.rank();

  up.factor.resize(m, r);
  Eigen::VectorXd residual(r);
  for (Eigen::Index j = 0; j < r; ++j) {
    const Eigen::Index src = piv.pivots[static_cast<std::size_t>(j)];
    up.factor.col(j) = cross.col(src);
    residual(j) = values[src] - mean_(static_cast<Eigen::Index>(indices[src]));
  }
  if (r > 0) {
    piv.factor.transpose().triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(up.factor);
    piv.factor.triangularView<Eigen::Lower>().solveInPlace(residual);
    up.mean_after = mean_ + up.factor * residual;
  } else {
    up.mean_after = mean_;
  }
  return up;
}

void LatticeState::commit(const LatticeUpdate& update) {
  const Eigen::Index r = update.factor.cols();
  if (rank_ + r > factor_.cols()) {
    factor_.conservativeResize(Eigen::NoChange, std::max(factor_.cols() * 2, rank_ + r));
  }
  factor_.middleCols(rank_, r) = update.factor;
  rank_ += r;
  mean_ = update.mean_after;
}

Eigen::MatrixXd LatticeState::covariance() const {
  Eigen::MatrixXd cov = root_->covariance();
  if (rank_ > 0) cov.noalias() -= factor_.leftCols(rank_) * factor_.leftCols(rank_).transpose();
  return cov;
}

}  // namespace qipp
