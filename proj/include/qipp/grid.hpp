#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace qipp {

/// Action whose target cell lies outside the plan grid.
class RejectedActionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Action attempted after the step budget is spent.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxAxes = 3;

/// Integer cell coordinate. Axes beyond GridWorld::axes() are always 0.
using Cell = std::array<int, kMaxAxes>;

/// Unit move along one grid axis. Yaw is fixed, so there are no rotations.
struct Action {
  int axis = 0;
  int direction = 1;  // +1 or -1

  Action reversed() const { return {axis, -direction}; }
  friend bool operator==(const Action&, const Action&) = default;
};

std::string to_string(const Action& action);

struct RobotState {
  std::size_t position = 0;  // flat index into the plan grid G#
  int steps_taken = 0;
  int budget = 0;

  int remaining() const { return budget - steps_taken; }
};

/// Discrete planning workspace.
///
/// The plan grid G# has `plan_dims` cells per axis. The measurable lattice X#
/// refines every plan spacing into `refine[axis]` measurement cells, so X# has
/// (plan_dims - 1) * refine + 1 points per axis and plan cell c coincides with
/// measurement cell c * refine. GP inputs are X# cell coordinates.
///
/// Flat indices are x-fastest: index = x + nx * (y + ny * z).
class GridWorld {
 public:
  GridWorld() = default;
  explicit GridWorld(std::vector<int> plan_dims, std::vector<int> refine = {}, double cell_size = 1.0);

  int axes() const { return static_cast<int>(plan_dims_.size()); }
  const std::vector<int>& plan_dims() const { return plan_dims_; }
  const std::vector<int>& measure_dims() const { return measure_dims_; }
  const std::vector<int>& refine() const { return refine_; }
  double cell_size() const { return cell_size_; }

  std::size_t plan_size() const { return plan_size_; }
  std::size_t measure_size() const { return measure_size_; }

  bool plan_contains(const Cell& cell) const;
  bool measure_contains(const Cell& cell) const;

  Cell plan_cell(std::size_t index) const;
  std::size_t plan_index(const Cell& cell) const;
  Cell measure_cell(std::size_t index) const;
  std::size_t measure_index(const Cell& cell) const;

  /// X# index of the measurement cell coinciding with a plan point.
  std::size_t plan_to_measure(std::size_t plan_index) const;

  /// X# coordinates, one row per measurable location.
  const Eigen::MatrixXd& measure_points() const { return measure_points_; }

  /// Rows of measure_points() for the given X# indices.
  Eigen::MatrixXd points_for(std::span<const std::size_t> indices) const;

  /// Nearest X# index to a continuous coordinate (clamped into the hull).
  std::size_t nearest_measure_index(std::span<const double> coords) const;

  /// Axis-aligned hull of X#: [0, measure_dims - 1] per axis.
  Eigen::VectorXd hull_lower() const;
  Eigen::VectorXd hull_upper() const;

  friend bool operator==(const GridWorld& a, const GridWorld& b) {
    return a.plan_dims_ == b.plan_dims_ && a.refine_ == b.refine_ && a.cell_size_ == b.cell_size_;
  }

 private:
  std::vector<int> plan_dims_;
  std::vector<int> refine_;
  std::vector<int> measure_dims_;
  double cell_size_ = 1.0;
  std::size_t plan_size_ = 0;
  std::size_t measure_size_ = 0;
  Eigen::MatrixXd measure_points_;
};

/// Legal unit moves from `state`, axis-major with the negative direction first.
std::vector<Action> neighbors(const RobotState& state, const GridWorld& world);

/// Moves the robot one cell and charges one step of budget.
RobotState apply_action(const RobotState& state, const Action& action, const GridWorld& world);

}  // namespace qipp
