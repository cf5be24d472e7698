#pragma once

#include <functional>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace qipp {

/// Axis-aligned feasible region.
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index dims() const { return lower.size(); }
  Eigen::VectorXd extent() const { return upper - lower; }
  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
  bool contains(const Eigen::VectorXd& x) const;
  void validate() const;
};

using ObjectiveFunction = std::function<double(const Eigen::VectorXd&)>;

struct OptimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
  std::vector<double> best_trace;   // best-so-far after each iteration
  std::vector<double> sigma_trace;  // CE only: mean sampling std per iteration
};

struct SaConfig {
  double t_max = 5.0;
  double t_min = 0.001;
  double cooling_rate = 0.005;
  int reset_interval = 100;
  double step_fraction = 0.05;  // of the axis extent at t_max, half that at t_min
  int block_size = 1;           // coordinates perturbed together

  void validate() const;
  friend bool operator==(const SaConfig&, const SaConfig&) = default;
};

struct CeConfig {
  double alpha = 0.9;           // weight of the newly fitted parameters
  double elite_fraction = 0.9;  // eta
  int samples_per_iter = 50;
  int iterations = 100;
  double init_sigma_fraction = 0.25;

  void validate() const;
  friend bool operator==(const CeConfig&, const CeConfig&) = default;
};

struct BoConfig {
  int init_random_count = 50;
  int iterations = 100;
  double xi = 0.01;
  int candidates = 2000;

  void validate() const;
  friend bool operator==(const BoConfig&, const BoConfig&) = default;
};

/// Metropolis rule with uniform draw `u`: improvements always pass, worse
/// moves pass when u < exp(-delta / t), and nothing worse passes at t <= 0.
bool metropolis_accept(double delta, double temperature, double u);

/// Number of cooling steps from t_max until the temperature drops below t_min.
int annealing_steps(const SaConfig& config);

/// All optimizers start from `x0`, minimize `f` over `box` and return the
/// best point they evaluated.
OptimizeResult simulated_annealing(const ObjectiveFunction& f, const Box& box, const Eigen::VectorXd& x0,
                                   const SaConfig& config, std::mt19937_64& rng);

OptimizeResult cross_entropy(const ObjectiveFunction& f, const Box& box, const Eigen::VectorXd& x0,
                             const CeConfig& config, std::mt19937_64& rng);

/// GP surrogate with expected improvement; init_random_count random points
/// plus x0, then `iterations` acquisitions.
OptimizeResult bayesian_optimization(const ObjectiveFunction& f, const Box& box, const Eigen::VectorXd& x0,
                                     const BoConfig& config, std::mt19937_64& rng);

}  // namespace qipp
