#include "qipp/gp.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include <Eigen/Cholesky>

#include "qipp/linalg.hpp"

namespace qipp {
namespace {

// Conditional variances at or below this (relative to the signal variance)
// are treated as already-determined points during extension.
constexpr double kDeterminedTolerance = 1e-10;

}  // namespace

void GpHyperparams::validate() const {
  if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) {
    throw std::invalid_argument("GpHyperparams: lengthscale must be positive");
  }
  if (!(signal_variance > 0.0) || !std::isfinite(signal_variance)) {
    throw std::invalid_argument("GpHyperparams: signal_variance must be positive");
  }
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
    throw std::invalid_argument("GpHyperparams: noise_variance must be non-negative");
  }
  if (!std::isfinite(prior_mean)) throw std::invalid_argument("GpHyperparams: prior_mean must be finite");
}

double kernel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
              const GpHyperparams& hp) {
  if (a.size() != b.size()) throw std::invalid_argument("kernel: dimensionality mismatch");
  const double sq = (a - b).squaredNorm();
  return hp.signal_variance * std::exp(-sq / (2.0 * hp.lengthscale * hp.lengthscale));
}

Eigen::MatrixXd kernel_matrix(const Points& a, const Points& b, const GpHyperparams& hp) {
  if (a.cols() != b.cols()) throw std::invalid_argument("kernel_matrix: dimensionality mismatch");
  const double scale = -1.0 / (2.0 * hp.lengthscale * hp.lengthscale);
  Eigen::MatrixXd out(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      out(i, j) = hp.signal_variance * std::exp(scale * (a.row(i) - b.row(j)).squaredNorm());
    }
  }
  return out;
}

GpModel::GpModel(const GpHyperparams& hp, int dims) : hp_(hp), dims_(dims) {
  hp_.validate();
  if (dims < 1) throw std::invalid_argument("GpModel: dims must be >= 1");
  locations_.resize(0, dims);
}

GpModel GpModel::condition(const Points& locations, const Eigen::VectorXd& values, const GpHyperparams& hp) {
  hp.validate();
  if (locations.rows() != values.size()) {
    throw std::invalid_argument("GpModel::condition: locations and values differ in length");
  }
  if (!locations.allFinite() || !values.allFinite()) {
    throw std::invalid_argument("GpModel::condition: non-finite input");
  }
  return factorize(locations, values, Eigen::VectorXd::Ones(values.size()), hp,
                   static_cast<std::size_t>(values.size()));
}

GpModel GpModel::factorize(Points locations, Eigen::VectorXd values, Eigen::VectorXd counts,
                           const GpHyperparams& hp, std::size_t observations) {
  const int dims = static_cast<int>(locations.cols());
  if (dims < 1) throw std::invalid_argument("GpModel: locations need at least one column");

  // Merge exact duplicates, keeping first-occurrence order.
  std::map<std::vector<double>, Eigen::Index> seen;
  std::vector<Eigen::Index> first_row;
  std::vector<double> sums;
  std::vector<double> weights;
  for (Eigen::Index i = 0; i < locations.rows(); ++i) {
    std::vector<double> key(static_cast<std::size_t>(dims));
    for (int d = 0; d < dims; ++d) key[static_cast<std::size_t>(d)] = locations(i, d);
    auto [it, inserted] = seen.emplace(std::move(key), static_cast<Eigen::Index>(first_row.size()));
    if (inserted) {
      first_row.push_back(i);
      sums.push_back(counts(i) * values(i));
      weights.push_back(counts(i));
    } else {
      sums[static_cast<std::size_t>(it->second)] += counts(i) * values(i);
      weights[static_cast<std::size_t>(it->second)] += counts(i);
    }
  }

  GpModel model;
  model.hp_ = hp;
  model.dims_ = dims;
  model.observations_ = observations;
  const auto unique = static_cast<Eigen::Index>(first_row.size());
  model.locations_.resize(unique, dims);
  model.values_.resize(unique);
  model.counts_.resize(unique);
  for (Eigen::Index r = 0; r < unique; ++r) {
    const auto u = static_cast<std::size_t>(r);
    model.locations_.row(r) = locations.row(first_row[u]);
    model.counts_(r) = weights[u];
    model.values_(r) = sums[u] / weights[u];
  }
  if (unique == 0) {
    model.chol_.resize(0, 0);
    model.weights_.resize(0);
    return model;
  }

  const Eigen::MatrixXd gram = kernel_matrix(model.locations_, model.locations_, hp);
  for (double jitter : kJitterLadder) {
    Eigen::MatrixXd a = gram;
    a.diagonal().array() += (hp.noise_variance + jitter) / model.counts_.array();
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) continue;
    Eigen::MatrixXd l = llt.matrixL();
    if (!l.allFinite() || !(l.diagonal().minCoeff() > 0.0)) continue;
    model.chol_ = std::move(l);
    model.jitter_ = jitter;
    model.refresh_weights();
    return model;
  }
  throw ConditioningError("GpModel: Gram matrix singular after jitter escalation to 1e-4");
}

void GpModel::refresh_weights() {
  if (locations_.rows() == 0) {
    weights_.resize(0);
    return;
  }
  const Eigen::VectorXd centered = values_.array() - hp_.prior_mean;
  weights_ = chol_.triangularView<Eigen::Lower>().solve(centered);
  chol_.transpose().triangularView<Eigen::Upper>().solveInPlace(weights_);
}

Eigen::VectorXd GpModel::predict_mean(const Points& query) const {
  if (query.cols() != dims_) throw std::invalid_argument("GpModel::predict: dimensionality mismatch");
  Eigen::VectorXd mean = Eigen::VectorXd::Constant(query.rows(), hp_.prior_mean);
  if (locations_.rows() == 0) return mean;
  mean.noalias() += kernel_matrix(query, locations_, hp_) * weights_;
  return mean;
}

Prediction GpModel::predict(const Points& query) const {
  if (query.cols() != dims_) throw std::invalid_argument("GpModel::predict: dimensionality mismatch");
  Prediction out;
  out.mean = Eigen::VectorXd::Constant(query.rows(), hp_.prior_mean);
  out.variance = Eigen::VectorXd::Constant(query.rows(), hp_.signal_variance);
  if (locations_.rows() == 0) return out;

  const Eigen::MatrixXd cross = kernel_matrix(locations_, query, hp_);
  out.mean.noalias() += cross.transpose() * weights_;
  const Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(cross);
  out.variance -= v.colwise().squaredNorm().transpose();
  out.variance = out.variance.cwiseMax(0.0).cwiseMin(hp_.signal_variance);
  return out;
}

Eigen::MatrixXd GpModel::predict_covariance(const Points& query) const {
  if (query.cols() != dims_) throw std::invalid_argument("GpModel::predict: dimensionality mismatch");
  Eigen::MatrixXd cov = kernel_matrix(query, query, hp_);
  if (locations_.rows() > 0) {
    const Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(kernel_matrix(locations_, query, hp_));
    cov.noalias() -= v.transpose() * v;
  }
  cov = 0.5 * (cov + cov.transpose());
  cov.diagonal() = cov.diagonal().cwiseMax(0.0);
  return cov;
}

GpModel GpModel::extended(const Points& locations, const Eigen::VectorXd& values) const {
  if (locations.rows() != values.size()) {
    throw std::invalid_argument("GpModel::extended: locations and values differ in length");
  }
  if (locations.cols() != dims_) throw std::invalid_argument("GpModel::extended: dimensionality mismatch");
  if (!locations.allFinite() || !values.allFinite()) {
    throw std::invalid_argument("GpModel::extended: non-finite input");
  }
  const Eigen::Index k = locations.rows();
  if (k == 0) return *this;

  const Eigen::Index n = locations_.rows();
  const double noise = observation_noise();
  const Eigen::MatrixXd cross = kernel_matrix(locations_, locations, hp_);
  Eigen::MatrixXd v(n, k);
  if (n > 0) v = chol_.triangularView<Eigen::Lower>().solve(cross);
  Eigen::MatrixXd schur = kernel_matrix(locations, locations, hp_);
  schur.diagonal().array() += noise;
  if (n > 0) schur.noalias() -= v.transpose() * v;

  const PivotedCholesky piv = pivoted_cholesky(schur, kDeterminedTolerance * hp_.signal_variance);
  const Eigen::Index kept = piv.rank();

  auto refactor = [&]() {
    Points all(n + k, dims_);
    all << locations_, locations;
    Eigen::VectorXd all_values(n + k);
    all_values << values_, values;
    Eigen::VectorXd all_counts(n + k);
    all_counts << counts_, Eigen::VectorXd::Ones(k);
    return factorize(std::move(all), std::move(all_values), std::move(all_counts), hp_,
                     observations_ + static_cast<std::size_t>(k));
  };

  GpModel out;
  out.hp_ = hp_;
  out.dims_ = dims_;
  out.jitter_ = jitter_;
  out.observations_ = observations_ + static_cast<std::size_t>(k);
  out.locations_.resize(n + kept, dims_);
  out.values_.resize(n + kept);
  out.counts_.resize(n + kept);
  out.locations_.topRows(n) = locations_;
  out.values_.head(n) = values_;
  out.counts_.head(n) = counts_;
  out.chol_ = Eigen::MatrixXd::Zero(n + kept, n + kept);
  out.chol_.topLeftCorner(n, n) = chol_;
  for (Eigen::Index j = 0; j < kept; ++j) {
    const Eigen::Index src = piv.pivots[static_cast<std::size_t>(j)];
    out.locations_.row(n + j) = locations.row(src);
    out.values_(n + j) = values(src);
    out.counts_(n + j) = 1.0;
    if (n > 0) out.chol_.block(n + j, 0, 1, n) = v.col(src).transpose();
  }
  out.chol_.bottomRightCorner(kept, kept) = piv.factor;
  out.refresh_weights();

  if (kept < k) {
    // Dropped points must already be explained by the extended posterior.
    std::vector<Eigen::Index> dropped;
    std::vector<bool> is_kept(static_cast<std::size_t>(k), false);
    for (Eigen::Index p : piv.pivots) is_kept[static_cast<std::size_t>(p)] = true;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (!is_kept[static_cast<std::size_t>(i)]) dropped.push_back(i);
    }
    Points dropped_points(static_cast<Eigen::Index>(dropped.size()), dims_);
    for (std::size_t i = 0; i < dropped.size(); ++i) {
      dropped_points.row(static_cast<Eigen::Index>(i)) = locations.row(dropped[i]);
    }
    const Eigen::VectorXd implied = out.predict_mean(dropped_points);
    for (std::size_t i = 0; i < dropped.size(); ++i) {
      const double target = values(dropped[i]);
      if (std::abs(implied(static_cast<Eigen::Index>(i)) - target) > 1e-6 * (1.0 + std::abs(target))) {
        return refactor();
      }
    }
  }
  return out;
}

GpModel GpModel::hypothetical_update(const Points& locations) const {
  if (locations.rows() == 0) throw std::invalid_argument("hypothetical_update: no locations given");
  return extended(locations, predict_mean(locations));
}

double GpModel::log_marginal_likelihood() const {
  const Eigen::Index n = locations_.rows();
  if (n == 0) return 0.0;
  const Eigen::VectorXd centered = values_.array() - hp_.prior_mean;
  return -0.5 * centered.dot(weights_) - chol_.diagonal().array().log().sum() -
         0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

}  // namespace qipp
