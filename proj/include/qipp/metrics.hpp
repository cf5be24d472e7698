#pragma once

#include <span>

#include <Eigen/Core>

#include "qipp/environment.hpp"

namespace qipp {

/// sqrt(mean((v - v_est)^2)).
double rmse_quantiles(std::span<const double> truth, std::span<const double> estimate);

/// ||V - GT(Q~)||_2 with GT read at the nearest X# point to each row of
/// `locations`.
double rmse_locations(std::span<const double> truth, const Eigen::MatrixXd& locations, const GroundTruthField& field);

/// Same lookups, reported as sqrt(mean(...)) instead of the plain norm.
double rmse_locations_mean(std::span<const double> truth, const Eigen::MatrixXd& locations,
                           const GroundTruthField& field);

}  // namespace qipp
