#include "qipp/grid.hpp"

#include <algorithm>
#include <cmath>

namespace qipp {
namespace {

std::size_t flatten(const Cell& cell, const std::vector<int>& dims) {
  std::size_t index = 0;
  for (int axis = static_cast<int>(dims.size()) - 1; axis >= 0; --axis) {
    index = index * static_cast<std::size_t>(dims[axis]) + static_cast<std::size_t>(cell[axis]);
  }
  return index;
}

Cell unflatten(std::size_t index, const std::vector<int>& dims) {
  Cell cell{0, 0, 0};
  for (std::size_t axis = 0; axis < dims.size(); ++axis) {
    cell[axis] = static_cast<int>(index % static_cast<std::size_t>(dims[axis]));
    index /= static_cast<std::size_t>(dims[axis]);
  }
  return cell;
}

bool contains(const Cell& cell, const std::vector<int>& dims) {
  for (std::size_t axis = 0; axis < dims.size(); ++axis) {
    if (cell[axis] < 0 || cell[axis] >= dims[axis]) return false;
  }
  for (std::size_t axis = dims.size(); axis < kMaxAxes; ++axis) {
    if (cell[axis] != 0) return false;
  }
  return true;
}

}  // namespace

std::string to_string(const Action& action) {
  static constexpr char kAxisNames[] = {'x', 'y', 'z'};
  std::string out(1, action.direction > 0 ? '+' : '-');
  out.push_back(kAxisNames[action.axis]);
  return out;
}

GridWorld::GridWorld(std::vector<int> plan_dims, std::vector<int> refine, double cell_size)
    : plan_dims_(std::move(plan_dims)), refine_(std::move(refine)), cell_size_(cell_size) {
  if (plan_dims_.size() < 2 || plan_dims_.size() > kMaxAxes) {
    throw std::invalid_argument("GridWorld: expected 2 or 3 axes");
  }
  if (refine_.empty()) refine_.assign(plan_dims_.size(), 1);
  if (refine_.size() != plan_dims_.size()) {
    throw std::invalid_argument("GridWorld: refine must have one entry per axis");
  }
  if (!(cell_size_ > 0.0)) throw std::invalid_argument("GridWorld: cell_size must be positive");

  plan_size_ = 1;
  measure_size_ = 1;
  for (std::size_t axis = 0; axis < plan_dims_.size(); ++axis) {
    if (plan_dims_[axis] < 1) throw std::invalid_argument("GridWorld: dims must be >= 1");
    if (refine_[axis] < 1) throw std::invalid_argument("GridWorld: refine must be >= 1");
    measure_dims_.push_back((plan_dims_[axis] - 1) * refine_[axis] + 1);
    plan_size_ *= static_cast<std::size_t>(plan_dims_[axis]);
    measure_size_ *= static_cast<std::size_t>(measure_dims_.back());
  }

  measure_points_.resize(static_cast<Eigen::Index>(measure_size_), axes());
  for (std::size_t i = 0; i < measure_size_; ++i) {
    const Cell cell = unflatten(i, measure_dims_);
    for (int axis = 0; axis < axes(); ++axis) {
      measure_points_(static_cast<Eigen::Index>(i), axis) = cell[axis];
    }
  }
}

bool GridWorld::plan_contains(const Cell& cell) const { return contains(cell, plan_dims_); }
bool GridWorld::measure_contains(const Cell& cell) const { return contains(cell, measure_dims_); }

Cell GridWorld::plan_cell(std::size_t index) const {
  if (index >= plan_size_) throw std::out_of_range("GridWorld: plan index out of range");
  return unflatten(index, plan_dims_);
}

std::size_t GridWorld::plan_index(const Cell& cell) const {
  if (!plan_contains(cell)) throw std::out_of_range("GridWorld: plan cell out of range");
  return flatten(cell, plan_dims_);
}

Cell GridWorld::measure_cell(std::size_t index) const {
  if (index >= measure_size_) throw std::out_of_range("GridWorld: measure index out of range");
  return unflatten(index, measure_dims_);
}

std::size_t GridWorld::measure_index(const Cell& cell) const {
  if (!measure_contains(cell)) throw std::out_of_range("GridWorld: measure cell out of range");
  return flatten(cell, measure_dims_);
}

std::size_t GridWorld::plan_to_measure(std::size_t plan_index) const {
  Cell cell = plan_cell(plan_index);
  for (int axis = 0; axis < axes(); ++axis) cell[axis] *= refine_[axis];
  return flatten(cell, measure_dims_);
}

Eigen::MatrixXd GridWorld::points_for(std::span<const std::size_t> indices) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(indices.size()), axes());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = measure_points_.row(static_cast<Eigen::Index>(indices[i]));
  }
  return out;
}

std::size_t GridWorld::nearest_measure_index(std::span<const double> coords) const {
  if (coords.size() != plan_dims_.size()) {
    throw std::invalid_argument("GridWorld: coordinate dimensionality mismatch");
  }
  Cell cell{0, 0, 0};
  for (int axis = 0; axis < axes(); ++axis) {
    const long rounded = std::lround(coords[axis]);
    cell[axis] = static_cast<int>(std::clamp<long>(rounded, 0, measure_dims_[axis] - 1));
  }
  return flatten(cell, measure_dims_);
}

Eigen::VectorXd GridWorld::hull_lower() const { return Eigen::VectorXd::Zero(axes()); }

Eigen::VectorXd GridWorld::hull_upper() const {
  Eigen::VectorXd upper(axes());
  for (int axis = 0; axis < axes(); ++axis) upper(axis) = measure_dims_[axis] - 1;
  return upper;
}

std::vector<Action> neighbors(const RobotState& state, const GridWorld& world) {
  const Cell cell = world.plan_cell(state.position);
  std::vector<Action> out;
  out.reserve(2 * static_cast<std::size_t>(world.axes()));
  for (int axis = 0; axis < world.axes(); ++axis) {
    for (int direction : {-1, 1}) {
      Cell next = cell;
      next[axis] += direction;
      if (world.plan_contains(next)) out.push_back({axis, direction});
    }
  }
  return out;
}

RobotState apply_action(const RobotState& state, const Action& action, const GridWorld& world) {
  if (state.steps_taken >= state.budget) {
    throw BudgetError("apply_action: budget of " + std::to_string(state.budget) + " steps exhausted");
  }
  if (action.axis < 0 || action.axis >= world.axes() || (action.direction != 1 && action.direction != -1)) {
    throw RejectedActionError("apply_action: malformed action");
  }
  Cell next = world.plan_cell(state.position);
  next[action.axis] += action.direction;
  if (!world.plan_contains(next)) {
    throw RejectedActionError("apply_action: move " + to_string(action) + " leaves the plan grid");
  }
  RobotState out = state;
  out.position = world.plan_index(next);
  out.steps_taken += 1;
  return out;
}

}  // namespace qipp
