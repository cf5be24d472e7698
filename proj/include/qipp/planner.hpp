#pragma once

#include <any>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "qipp/environment.hpp"
#include "qipp/gp.hpp"
#include "qipp/grid.hpp"
#include "qipp/lattice_belief.hpp"
#include "qipp/objectives.hpp"

namespace qipp {

/// No legal action from the planning state.
class PlanningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PlannerConfig {
  int rollouts_per_step = 300;
  int max_depth = 7;        // depth of the search tree below the root
  int rollout_horizon = 5;  // random-policy steps after the tree, zero reward beyond
  double gamma = 0.9;
  double ucb_c = 1.0;  // multiplied by the running std of root returns
  bool multi_step = true;
  double significance = 0.05;

  void validate() const;
  friend bool operator==(const PlannerConfig&, const PlannerConfig&) = default;
};

/// Running mean and sum of squared deviations (Welford).
struct ValueStats {
  long count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x);
  /// Unbiased sample variance; 0 below two samples.
  double variance() const;
};

/// Node of the search tree. The belief is a deterministic function of the
/// action history, so the history identifies the node.
struct SearchNode {
  std::vector<Action> history;
  RobotState state;
  ValueStats stats;  // returns of simulations through this node, counted from the edge into it
  std::vector<Action> actions;  // legal moves, expansion order
  std::vector<std::unique_ptr<SearchNode>> children;  // parallel to `actions`, null until visited
  double edge_reward = 0.0;  // reward of the move into this node
  std::any edge_cache;       // model data replayed on later visits

  long visits() const { return stats.count; }
  double value() const { return stats.mean; }
  const SearchNode* child(std::size_t i) const { return children[i].get(); }
  /// Highest-value visited child, ties to the lowest index; -1 when none.
  int best_child() const;
  /// Second-best visited child under the same ordering; -1 when fewer than two.
  int runner_up_child() const;
};

/// Simulated world seen by the search.
class SearchModel {
 public:
  virtual ~SearchModel() = default;
  /// Back to the belief at the root.
  virtual void reset() = 0;
  /// Measures along from -> to, conditions the belief on the simulated
  /// observations and returns the objective value of that measurement.
  virtual double step(const RobotState& from, const RobotState& to) = 0;
  /// Data that lets replay() redo the last step without recomputation. Empty
  /// when the model does not support replay.
  virtual std::any last_step() const { return {}; }
  virtual void replay(const std::any& cached) { (void)cached; }
};

/// GP belief restricted to X#; simulated observations are the posterior mean.
class LatticeSearchModel : public SearchModel {
 public:
  /// `reward_points` restricts quantile deltas to a subset of X#; empty means all.
  LatticeSearchModel(const GridWorld& world, const SensorModel& sensor, const ObjectiveConfig& objective,
                     const LatticePosterior& root, std::vector<std::size_t> reward_points = {});

  void reset() override;
  double step(const RobotState& from, const RobotState& to) override;
  std::any last_step() const override;
  void replay(const std::any& cached) override;

  const LatticeState& state() const { return state_; }

 private:
  const GridWorld* world_;
  SensorModel sensor_;
  ObjectiveConfig objective_;
  LatticeState state_;
  std::vector<std::size_t> reward_points_;
  std::shared_ptr<const LatticeUpdate> last_;
};

/// sum_k gamma^k rewards[k].
double discounted_return(std::span<const double> rewards, double gamma);

/// UCB1 child choice: the first unvisited child in action order, otherwise
/// argmax value + c sqrt(ln N / n), ties to the lowest index.
std::size_t ucb_select(const SearchNode& node, double c);

/// One-sided Welch t-test p-value for H1: mean(a) > mean(b). Returns 1 when
/// either side has fewer than two samples.
double welch_p_value(const ValueStats& a, const ValueStats& b);

/// Root actions to execute: 1 plus one more per level of the best-child chain
/// whose best child beats the runner-up with p < significance.
int commit_steps(const SearchNode& root, double significance);

struct SearchResult {
  std::unique_ptr<SearchNode> root;
  int simulations = 0;
};

/// Runs config.rollouts_per_step simulations from `state`.
SearchResult pomcp_search(SearchModel& model, const GridWorld& world, const RobotState& state,
                          const PlannerConfig& config, std::mt19937_64& rng);

/// Root action sequence chosen from a finished search, clipped to the
/// remaining budget.
std::vector<Action> choose_actions(const SearchNode& root, const PlannerConfig& config);

class PomcpPlanner {
 public:
  PomcpPlanner(GridWorld world, SensorModel sensor, ObjectiveConfig objective, PlannerConfig config);

  /// 1..k actions from `state` given the current GP belief.
  std::vector<Action> plan(const GpModel& belief, const RobotState& state, std::mt19937_64& rng) const;

  const PlannerConfig& config() const { return config_; }
  const ObjectiveConfig& objective() const { return objective_; }

 private:
  GridWorld world_;
  SensorModel sensor_;
  ObjectiveConfig objective_;
  PlannerConfig config_;
};

/// Boustrophedon sweep over G# starting at the origin, prefixed by a direct
/// path to the origin when `start` is elsewhere; at most `budget` moves.
std::vector<Action> coverage_plan(const GridWorld& world, std::size_t start, int budget);

/// Uniformly random legal move.
Action random_walk_plan(const RobotState& state, const GridWorld& world, std::mt19937_64& rng);

}  // namespace qipp
