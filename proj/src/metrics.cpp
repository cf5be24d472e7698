#include "qipp/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace qipp {
namespace {

double squared_location_error(std::span<const double> truth, const Eigen::MatrixXd& locations,
                              const GroundTruthField& field) {
  if (static_cast<Eigen::Index>(truth.size()) != locations.rows()) {
    throw std::invalid_argument("rmse_locations: one location per quantile required");
  }
  double sum = 0.0;
  std::vector<double> coords(static_cast<std::size_t>(locations.cols()));
  for (Eigen::Index i = 0; i < locations.rows(); ++i) {
    for (Eigen::Index a = 0; a < locations.cols(); ++a) coords[static_cast<std::size_t>(a)] = locations(i, a);
    const double diff = truth[static_cast<std::size_t>(i)] - field.at(field.world.nearest_measure_index(coords));
    sum += diff * diff;
  }
  return sum;
}

}  // namespace

double rmse_quantiles(std::span<const double> truth, std::span<const double> estimate) {
  if (truth.size() != estimate.size() || truth.empty()) {
    throw std::invalid_argument("rmse_quantiles: vectors must be nonempty and the same length");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = truth[i] - estimate[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(truth.size()));
}

double rmse_locations(std::span<const double> truth, const Eigen::MatrixXd& locations, const GroundTruthField& field) {
  return std::sqrt(squared_location_error(truth, locations, field));
}

double rmse_locations_mean(std::span<const double> truth, const Eigen::MatrixXd& locations,
                           const GroundTruthField& field) {
  if (truth.empty()) throw std::invalid_argument("rmse_locations: empty quantile vector");
  return std::sqrt(squared_location_error(truth, locations, field) / static_cast<double>(truth.size()));
}

}  // namespace qipp
