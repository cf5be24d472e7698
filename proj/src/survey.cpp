#include "qipp/survey.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "qipp/metrics.hpp"

namespace qipp {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

QuantileEstimate estimate_from_belief(const GpModel& gp, const GridWorld& world, const Normalization& norm,
                                      const QuantileSpec& spec) {
  Eigen::VectorXd mu = gp.predict_mean(world.measure_points());
  for (Eigen::Index i = 0; i < mu.size(); ++i) mu(i) = norm.denormalize(mu(i));
  return estimate_quantiles(std::span<const double>(mu.data(), static_cast<std::size_t>(mu.size())), spec);
}

}  // namespace

Normalization Normalization::fit(std::span<const double> values) {
  Normalization n;
  if (values.empty()) return n;
  n.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() < 2) return n;
  double ss = 0.0;
  for (double v : values) ss += (v - n.mean) * (v - n.mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  n.scale = sd > 0.0 ? sd : 1.0;
  return n;
}

std::string PomcpStrategy::name() const { return to_string(planner_.objective().kind); }

std::vector<Action> PomcpStrategy::next(const GpModel& belief, const RobotState& state, std::mt19937_64& rng) {
  return planner_.plan(belief, state, rng);
}

std::vector<Action> RandomWalkStrategy::next(const GpModel&, const RobotState& state, std::mt19937_64& rng) {
  return {random_walk_plan(state, world_, rng)};
}

CoverageStrategy::CoverageStrategy(GridWorld world, std::size_t start)
    : sweep_(coverage_plan(world, start, static_cast<int>(world.plan_size() * world.axes() + world.plan_size()))) {}

std::vector<Action> CoverageStrategy::next(const GpModel&, const RobotState&, std::mt19937_64&) {
  if (sweep_.empty()) throw PlanningError("coverage: single-cell world has no moves");
  if (cursor_ == sweep_.size()) {
    cursor_ = 0;
    backwards_ = !backwards_;
  }
  const std::size_t i = cursor_++;
  return {backwards_ ? sweep_[sweep_.size() - 1 - i].reversed() : sweep_[i]};
}

GpModel fit_history(const GridWorld& world, const SurveyHistory& history, const Normalization& norm,
                    const GpHyperparams& hp) {
  if (history.locations.empty()) return GpModel(hp, world.axes());
  Eigen::VectorXd y(static_cast<Eigen::Index>(history.values.size()));
  for (std::size_t i = 0; i < history.values.size(); ++i) y(static_cast<Eigen::Index>(i)) = norm.normalize(history.values[i]);
  return GpModel::condition(world.points_for(history.locations), y, hp);
}

SurveyResult run_survey(const GroundTruthField& field, const SensorModel& sensor, SurveyStrategy& strategy,
                        const SurveyOptions& options, std::mt19937_64& rng) {
  sensor.validate();
  options.hp.validate();
  if (options.budget < 0) throw std::invalid_argument("run_survey: negative budget");
  const GridWorld& world = field.world;
  if (options.start >= world.plan_size()) throw std::invalid_argument("run_survey: start outside the plan grid");

  SurveyResult out;
  out.history = seed_measurements(field, options.seed_count);
  out.normalization = Normalization::fit(out.history.values);
  out.truth = estimate_quantiles(std::span<const double>(field.values.data(), world.measure_size()), options.spec).values;

  auto t0 = Clock::now();
  GpModel gp = fit_history(world, out.history, out.normalization, options.hp);
  out.gp_seconds += seconds_since(t0);
  out.initial_estimate = estimate_from_belief(gp, world, out.normalization, options.spec);
  out.initial_rmse = rmse_quantiles(out.truth, out.initial_estimate.values);

  RobotState state{options.start, 0, options.budget};
  while (state.remaining() > 0) {
    t0 = Clock::now();
    const std::vector<Action> actions = strategy.next(gp, state, rng);
    out.planning_seconds += seconds_since(t0);
    if (actions.empty()) throw PlanningError("run_survey: strategy returned no action");

    for (const Action& a : actions) {
      if (state.remaining() <= 0) break;
      const RobotState next = apply_action(state, a, world);
      const Measurement m = measure(field, sensor, state, next);
      out.history.append(m.locations, m.values);
      out.history.actions.push_back(a);
      out.history.steps += 1;
      state = next;

      t0 = Clock::now();
      gp = fit_history(world, out.history, out.normalization, options.hp);
      out.gp_seconds += seconds_since(t0);
      out.estimates.push_back(estimate_from_belief(gp, world, out.normalization, options.spec));
      out.rmse.push_back(rmse_quantiles(out.truth, out.estimates.back().values));
    }
  }
  out.belief = std::move(gp);
  return out;
}

}  // namespace qipp
