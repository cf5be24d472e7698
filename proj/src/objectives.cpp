#include "qipp/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace qipp {
namespace {

constexpr double kEntropyFloor = 1e-12;

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) * std::numbers::inv_sqrtpi / std::numbers::sqrt2; }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return sum;
}

}  // namespace

std::string to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::quantile_change: return "quantile_change";
    case ObjectiveKind::quantile_se: return "quantile_se";
    case ObjectiveKind::entropy: return "entropy";
    case ObjectiveKind::expected_improvement: return "expected_improvement";
  }
  return "unknown";
}

ObjectiveKind objective_kind_from_string(const std::string& name) {
  if (name == "quantile_change") return ObjectiveKind::quantile_change;
  if (name == "quantile_se") return ObjectiveKind::quantile_se;
  if (name == "entropy") return ObjectiveKind::entropy;
  if (name == "expected_improvement") return ObjectiveKind::expected_improvement;
  throw std::invalid_argument("unknown objective '" + name + "'");
}

std::string to_string(EiDenominator d) { return d == EiDenominator::variance ? "variance" : "stddev"; }

EiDenominator ei_denominator_from_string(const std::string& name) {
  if (name == "variance") return EiDenominator::variance;
  if (name == "stddev") return EiDenominator::stddev;
  throw std::invalid_argument("unknown ei_denominator '" + name + "'");
}

double ObjectiveConfig::default_c_plan(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::quantile_change: return 1e-6;
    case ObjectiveKind::quantile_se: return 1e-2;
    default: return 0.0;
  }
}

void ObjectiveConfig::validate() const {
  if (!(c_plan >= 0.0)) throw std::invalid_argument("ObjectiveConfig: c_plan must be >= 0");
  if (!(xi >= 0.0)) throw std::invalid_argument("ObjectiveConfig: xi must be >= 0");
  if ((kind == ObjectiveKind::quantile_change || kind == ObjectiveKind::quantile_se) && spec.size() == 0) {
    throw std::invalid_argument("ObjectiveConfig: quantile objectives need a quantile spec");
  }
}

double delta_quantile_change(std::span<const double> mean_before, std::span<const double> mean_after,
                             const QuantileSpec& spec) {
  return l1_distance(estimate_quantiles(mean_before, spec).values, estimate_quantiles(mean_after, spec).values);
}

double delta_quantile_change(const GpModel& before, const GpModel& after, const Points& measurable,
                             const QuantileSpec& spec) {
  const Eigen::VectorXd a = before.predict_mean(measurable);
  const Eigen::VectorXd b = after.predict_mean(measurable);
  return delta_quantile_change(as_span(a), as_span(b), spec);
}

double delta_quantile_se(std::span<const double> mean_before, std::span<const double> mean_after,
                         const QuantileSpec& spec) {
  return l1_distance(quantile_standard_error(mean_before, spec), quantile_standard_error(mean_after, spec));
}

double delta_quantile_se(const GpModel& before, const GpModel& after, const Points& measurable,
                         const QuantileSpec& spec) {
  const Eigen::VectorXd a = before.predict_mean(measurable);
  const Eigen::VectorXd b = after.predict_mean(measurable);
  return delta_quantile_se(as_span(a), as_span(b), spec);
}

double entropy_reward(std::span<const double> variances, double noise_variance) {
  const double floor = noise_variance + kEntropyFloor;
  double sum = 0.0;
  for (double v : variances) {
    sum += 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * std::max(v, floor));
  }
  return sum;
}

double entropy_reward(const GpModel& gp, const Points& candidates) {
  if (candidates.rows() == 0) throw std::invalid_argument("entropy_reward: empty candidate set");
  const Prediction p = gp.predict(candidates);
  return entropy_reward(as_span(p.variance), gp.hyperparams().noise_variance);
}

double expected_improvement_term(double mean, double variance, double best_mean, double xi,
                                 EiDenominator denominator) {
  const double improvement = mean - best_mean - xi;
  if (!(variance > 0.0)) return std::max(improvement, 0.0);
  const double sigma = std::sqrt(variance);
  const double z = improvement / (denominator == EiDenominator::variance ? variance : sigma);
  return improvement * normal_cdf(z) + sigma * normal_pdf(z);
}

double ei_reward(std::span<const double> means, std::span<const double> variances, double best_mean, double xi,
                 EiDenominator denominator) {
  double sum = 0.0;
  for (std::size_t j = 0; j < means.size(); ++j) {
    sum += expected_improvement_term(means[j], variances[j], best_mean, xi, denominator);
  }
  return sum;
}

double ei_reward(const GpModel& gp, const Points& candidates, const Points& measurable, double xi,
                 EiDenominator denominator) {
  if (candidates.rows() == 0) throw std::invalid_argument("ei_reward: empty candidate set");
  const Prediction p = gp.predict(candidates);
  const double best = gp.predict_mean(measurable).maxCoeff();
  return ei_reward(as_span(p.mean), as_span(p.variance), best, xi, denominator);
}

double quantile_objective(double delta, std::size_t fraction_count, double c_plan,
                          std::span<const double> variances) {
  double exploration = 0.0;
  for (double v : variances) exploration += c_plan * v;
  return delta / static_cast<double>(fraction_count) + exploration;
}

double evaluate_reward(const ObjectiveConfig& config, const RewardInputs& in) {
  if (in.candidate_variances.empty()) throw std::invalid_argument("reward: empty candidate set");
  switch (config.kind) {
    case ObjectiveKind::quantile_change:
      return quantile_objective(delta_quantile_change(in.mean_before, in.mean_after, config.spec),
                                config.spec.size(), config.c_plan, in.candidate_variances);
    case ObjectiveKind::quantile_se:
      return quantile_objective(delta_quantile_se(in.mean_before, in.mean_after, config.spec), config.spec.size(),
                                config.c_plan, in.candidate_variances);
    case ObjectiveKind::entropy:
      return entropy_reward(in.candidate_variances, in.noise_variance);
    case ObjectiveKind::expected_improvement: {
      const double best = *std::max_element(in.mean_before.begin(), in.mean_before.end());
      return ei_reward(in.candidate_means, in.candidate_variances, best, config.xi, config.ei_denominator);
    }
  }
  throw std::logic_error("reward: unhandled objective kind");
}

double reward(const ObjectiveConfig& config, const GpModel& gp, const Points& candidates,
              const Points& measurable) {
  if (candidates.rows() == 0) throw std::invalid_argument("reward: empty candidate set");
  const Prediction at_candidates = gp.predict(candidates);
  const Eigen::VectorXd before = gp.predict_mean(measurable);

  RewardInputs in;
  in.candidate_means = as_span(at_candidates.mean);
  in.candidate_variances = as_span(at_candidates.variance);
  in.mean_before = as_span(before);
  in.noise_variance = gp.hyperparams().noise_variance;

  Eigen::VectorXd after;
  if (config.kind == ObjectiveKind::quantile_change || config.kind == ObjectiveKind::quantile_se) {
    after = gp.hypothetical_update(candidates).predict_mean(measurable);
    in.mean_after = as_span(after);
  }
  return evaluate_reward(config, in);
}

}  // namespace qipp
