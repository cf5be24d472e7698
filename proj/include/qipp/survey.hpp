#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qipp/environment.hpp"
#include "qipp/gp.hpp"
#include "qipp/planner.hpp"
#include "qipp/quantile.hpp"

namespace qipp {

/// Affine map from raw field units to the GP's normalized space.
struct Normalization {
  double mean = 0.0;
  double scale = 1.0;

  /// Zero mean, unit sample standard deviation over `values`; scale 1 when
  /// there is no spread.
  static Normalization fit(std::span<const double> values);
  double normalize(double v) const { return (v - mean) / scale; }
  double denormalize(double v) const { return v * scale + mean; }
};

/// Source of survey moves. Implementations may return several moves at once;
/// the survey executes them in order and reconditions after each.
class SurveyStrategy {
 public:
  virtual ~SurveyStrategy() = default;
  virtual std::string name() const = 0;
  virtual std::vector<Action> next(const GpModel& belief, const RobotState& state, std::mt19937_64& rng) = 0;
};

class PomcpStrategy : public SurveyStrategy {
 public:
  explicit PomcpStrategy(PomcpPlanner planner) : planner_(std::move(planner)) {}
  std::string name() const override;
  std::vector<Action> next(const GpModel& belief, const RobotState& state, std::mt19937_64& rng) override;

 private:
  PomcpPlanner planner_;
};

class RandomWalkStrategy : public SurveyStrategy {
 public:
  explicit RandomWalkStrategy(GridWorld world) : world_(std::move(world)) {}
  std::string name() const override { return "random_walk"; }
  std::vector<Action> next(const GpModel& belief, const RobotState& state, std::mt19937_64& rng) override;

 private:
  GridWorld world_;
};

/// Boustrophedon sweep; once the sweep is used up it is retraced backwards
/// and forwards again for as long as budget remains.
class CoverageStrategy : public SurveyStrategy {
 public:
  CoverageStrategy(GridWorld world, std::size_t start);
  std::string name() const override { return "coverage"; }
  std::vector<Action> next(const GpModel& belief, const RobotState& state, std::mt19937_64& rng) override;

 private:
  std::vector<Action> sweep_;
  std::size_t cursor_ = 0;
  bool backwards_ = false;
};

struct SurveyOptions {
  GpHyperparams hp;
  int budget = 30;
  std::size_t seed_count = 100;
  std::size_t start = 0;  // plan index
  QuantileSpec spec = QuantileSpec::deciles();
};

struct SurveyResult {
  SurveyHistory history;
  Normalization normalization;
  std::vector<double> truth;                 // V
  QuantileEstimate initial_estimate;         // after seeding, before any move
  double initial_rmse = 0.0;
  std::vector<QuantileEstimate> estimates;   // V~ after each step, raw units
  std::vector<double> rmse;                  // one per step
  std::optional<GpModel> belief;             // final GP, normalized space
  double planning_seconds = 0.0;
  double gp_seconds = 0.0;
};

/// GP over the full history in normalized space.
GpModel fit_history(const GridWorld& world, const SurveyHistory& history, const Normalization& norm,
                    const GpHyperparams& hp);

/// plan -> act -> measure -> recondition until the budget is spent.
SurveyResult run_survey(const GroundTruthField& field, const SensorModel& sensor, SurveyStrategy& strategy,
                        const SurveyOptions& options, std::mt19937_64& rng);

}  // namespace qipp
