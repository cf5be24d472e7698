#pragma once

#include <cstddef>
#include <stdexcept>

#include <Eigen/Core>

namespace qipp {

/// Gram matrix stayed singular through the whole jitter ladder.
class ConditioningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GpHyperparams {
  double lengthscale = 12.0;  // in X# cells
  double signal_variance = 1.0;
  double noise_variance = 1e-4;
  double prior_mean = 0.0;

  void validate() const;
  friend bool operator==(const GpHyperparams&, const GpHyperparams&) = default;
};

/// One location per row.
using Points = Eigen::MatrixXd;

/// Squared exponential covariance.
double kernel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
              const GpHyperparams& hp);

Eigen::MatrixXd kernel_matrix(const Points& a, const Points& b, const GpHyperparams& hp);

struct Prediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;  // latent function variance, excludes observation noise
};

/// Exact GP posterior with fixed hyperparameters.
///
/// Repeated observations at one location are merged into a single row whose
/// value is their mean and whose noise is divided by the multiplicity; for a
/// Gaussian likelihood this is the same posterior as keeping every copy.
/// Instances are immutable: conditioning returns new models.
class GpModel {
 public:
  /// Prior over `dims`-dimensional inputs.
  GpModel(const GpHyperparams& hp, int dims);

  /// Refactors from scratch, escalating diagonal jitter if the Gram matrix
  /// is not numerically positive definite.
  static GpModel condition(const Points& locations, const Eigen::VectorXd& values, const GpHyperparams& hp);

  Prediction predict(const Points& query) const;
  Eigen::VectorXd predict_mean(const Points& query) const;
  /// Full posterior covariance between query points.
  Eigen::MatrixXd predict_covariance(const Points& query) const;

  /// Adds observations by extending the Cholesky factor. Points whose
  /// conditional variance is numerically zero are dropped when their value
  /// matches the current posterior (they carry no information); otherwise the
  /// model is refactored.
  GpModel extended(const Points& locations, const Eigen::VectorXd& values) const;

  /// GP_i from GP_{i-1}: conditions on `locations` observed at their
  /// current posterior mean.
  GpModel hypothetical_update(const Points& locations) const;

  double log_marginal_likelihood() const;

  const GpHyperparams& hyperparams() const { return hp_; }
  int dims() const { return dims_; }
  /// Per-observation noise actually used: noise_variance plus any jitter.
  double observation_noise() const { return hp_.noise_variance + jitter_; }
  double jitter() const { return jitter_; }
  std::size_t observation_count() const { return observations_; }
  /// Rows in the factorization (unique locations after merging).
  std::size_t support_size() const { return static_cast<std::size_t>(locations_.rows()); }
  const Points& support_locations() const { return locations_; }

 private:
  GpModel() = default;
  void refresh_weights();
  static GpModel factorize(Points locations, Eigen::VectorXd values, Eigen::VectorXd counts,
                           const GpHyperparams& hp, std::size_t observations);

  GpHyperparams hp_;
  int dims_ = 0;
  Points locations_;
  Eigen::VectorXd values_;
  Eigen::VectorXd counts_;  // observation multiplicity per row
  Eigen::MatrixXd chol_;    // lower factor of K + diag(noise / counts)
  Eigen::VectorXd weights_;  // (K + noise)^-1 (y - prior_mean)
  double jitter_ = 0.0;
  std::size_t observations_ = 0;
};

}  // namespace qipp
