#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "qipp/gp.hpp"

namespace qipp {

/// GP posterior restricted to a finite lattice (X#).
///
/// Every measurement the planner simulates lands on X#, so the joint Gaussian
/// over X# is exact for planning. The root mean and covariance are computed
/// once per planning step; each simulation then works on a LatticeState that
/// stores its conditioning as a low-rank correction Sigma = Sigma0 - U U^T,
/// which avoids copying Sigma0.
class LatticePosterior {
 public:
  LatticePosterior(const GpModel& gp, const Points& lattice);

  std::size_t size() const { return static_cast<std::size_t>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  /// Observation noise used for conditioning (includes any GP jitter).
  double noise() const { return noise_; }
  /// Noise variance from the hyperparameters.
  double nominal_noise() const { return nominal_noise_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
  double noise_ = 0.0;
  double nominal_noise_ = 0.0;
};

/// Pending conditioning step, prepared before it is committed so rewards can
/// look at the posterior on both sides of it.
struct LatticeUpdate {
  std::vector<double> candidate_means;      // before the update
  std::vector<double> candidate_variances;  // before the update, clamped at 0
  Eigen::VectorXd mean_after;
  Eigen::MatrixXd factor;  // new columns of U
};

class LatticeState {
 public:
  explicit LatticeState(const LatticePosterior& root);

  /// Back to the root posterior.
  void reset();

  const Eigen::VectorXd& mean() const { return mean_; }
  double variance(std::size_t index) const;
  Eigen::Index rank() const { return rank_; }
  const LatticePosterior& root() const { return *root_; }

  /// Conditioning on `values` observed at lattice `indices` with the root's
  /// observation noise. Points whose conditional variance is numerically
  /// zero are skipped.
  LatticeUpdate prepare(std::span<const std::size_t> indices, std::span<const double> values) const;
  void commit(const LatticeUpdate& update);

  /// Posterior covariance as a dense matrix (tests and diagnostics).
  Eigen::MatrixXd covariance() const;

 private:
  const LatticePosterior* root_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd factor_;  // U, first rank_ columns valid
  Eigen::Index rank_ = 0;
};

}  // namespace qipp
