#pragma once

#include <cstddef>
#include <span>
#include <string>

#include <Eigen/Core>

#include "qipp/gp.hpp"
#include "qipp/quantile.hpp"

namespace qipp {

enum class ObjectiveKind { quantile_change, quantile_se, entropy, expected_improvement };

/// Z in the EI objective divides by the variance by default; `stddev` is the
/// textbook form.
enum class EiDenominator { variance, stddev };

std::string to_string(ObjectiveKind kind);
ObjectiveKind objective_kind_from_string(const std::string& name);
std::string to_string(EiDenominator d);
EiDenominator ei_denominator_from_string(const std::string& name);

struct ObjectiveConfig {
  ObjectiveKind kind = ObjectiveKind::quantile_se;
  double c_plan = 1e-2;
  double xi = 0.0;
  QuantileSpec spec = QuantileSpec::deciles();
  EiDenominator ei_denominator = EiDenominator::variance;
  /// When nonzero, quantile deltas use this many randomly chosen X# points.
  std::size_t subsample = 0;

  /// Default exploration weight for the two quantile objectives.
  static double default_c_plan(ObjectiveKind kind);
  void validate() const;
};

/// L1 distance between quantile vectors of two mean surfaces.
double delta_quantile_change(std::span<const double> mean_before, std::span<const double> mean_after,
                             const QuantileSpec& spec);
double delta_quantile_change(const GpModel& before, const GpModel& after, const Points& measurable,
                             const QuantileSpec& spec);

/// L1 distance between quantile standard-error vectors of two mean surfaces.
double delta_quantile_se(std::span<const double> mean_before, std::span<const double> mean_after,
                         const QuantileSpec& spec);
double delta_quantile_se(const GpModel& before, const GpModel& after, const Points& measurable,
                         const QuantileSpec& spec);

/// Sum of Gaussian differential entropies, variances floored at
/// noise_variance + 1e-12.
double entropy_reward(std::span<const double> variances, double noise_variance);
double entropy_reward(const GpModel& gp, const Points& candidates);

double expected_improvement_term(double mean, double variance, double best_mean, double xi,
                                 EiDenominator denominator);
double ei_reward(std::span<const double> means, std::span<const double> variances, double best_mean, double xi,
                 EiDenominator denominator);
double ei_reward(const GpModel& gp, const Points& candidates, const Points& measurable, double xi,
                 EiDenominator denominator);

/// delta / fraction_count + c_plan * sum(variances).
double quantile_objective(double delta, std::size_t fraction_count, double c_plan,
                          std::span<const double> variances);

/// Everything a reward needs about one candidate measurement set, however the
/// belief is represented.
struct RewardInputs {
  std::span<const double> candidate_means;      // mu_{i-1}(X_i)
  std::span<const double> candidate_variances;  // sigma^2_{i-1}(X_i)
  std::span<const double> mean_before;          // mu_{i-1} over X# (or a subsample)
  std::span<const double> mean_after;           // mu_i over the same points; quantile kinds only
  double noise_variance = 0.0;
};

double evaluate_reward(const ObjectiveConfig& config, const RewardInputs& in);

/// f(X_i) for GP_{i-1} = `gp`, using a hypothetical update for GP_i.
double reward(const ObjectiveConfig& config, const GpModel& gp, const Points& candidates,
              const Points& measurable);

}  // namespace qipp
