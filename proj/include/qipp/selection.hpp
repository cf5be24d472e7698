#pragma once

#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qipp/environment.hpp"
#include "qipp/gp.hpp"
#include "qipp/optimize.hpp"

namespace qipp {

class EmptyHistoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SelectionMethod { bv, sa, ce, bo };

std::string to_string(SelectionMethod m);
SelectionMethod selection_method_from_string(const std::string& name);

struct SelectionConfig {
  double c_select = 15.0;
  SaConfig sa;
  CeConfig ce;
  BoConfig bo;

  /// Confidence weight for a quantile family: deciles 15, quartiles 200,
  /// extrema 30.
  static double default_c_select(const std::string& family);
  void validate() const;
  friend bool operator==(const SelectionConfig&, const SelectionConfig&) = default;
};

struct SelectionResult {
  SelectionMethod method = SelectionMethod::bv;
  Eigen::MatrixXd locations;       // one row per fraction, X# coordinates
  std::vector<double> predicted;   // mu at each location, same space as the target
  double loss = 0.0;
  int evaluations = 0;
};

/// ||target - mu(candidate)||_2 + c_select * sum sigma^2(candidate).
/// `candidate` has one row per target value.
double selection_loss(std::span<const double> target, const Eigen::MatrixXd& candidate, const GpModel& gp,
                      double c_select);

/// For each target value, the measured location with the nearest posterior
/// mean; ties go to the earliest measurement.
SelectionResult best_visited(const SurveyHistory& history, const GridWorld& world, std::span<const double> target,
                             const GpModel& gp, double c_select);

/// Everything the stochastic selectors share.
struct SelectionProblem {
  const GridWorld& world;
  const SurveyHistory& history;
  const GpModel& gp;
  std::span<const double> target;  // normalized quantile estimates
};

SelectionResult simulated_annealing_select(const SelectionProblem& problem, const SelectionConfig& config,
                                           std::mt19937_64& rng);
SelectionResult cross_entropy_select(const SelectionProblem& problem, const SelectionConfig& config,
                                     std::mt19937_64& rng);
SelectionResult bayesian_opt_select(const SelectionProblem& problem, const SelectionConfig& config,
                                    std::mt19937_64& rng);

SelectionResult select_locations(SelectionMethod method, const SelectionProblem& problem,
                                 const SelectionConfig& config, std::mt19937_64& rng);

/// Configuration space helpers: a |Q| x d matrix flattened row by row.
Eigen::VectorXd flatten_locations(const Eigen::MatrixXd& locations);
Eigen::MatrixXd unflatten_locations(const Eigen::VectorXd& x, Eigen::Index dims);
/// Hull of X# repeated once per fraction.
Box selection_box(const GridWorld& world, std::size_t fractions);

}  // namespace qipp
