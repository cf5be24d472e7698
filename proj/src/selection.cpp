#include "qipp/selection.hpp"

#include <cmath>
#include <limits>
#include <unordered_set>

namespace qipp {
namespace {

SelectionResult finish(SelectionMethod method, const Eigen::MatrixXd& locations, const GpModel& gp,
                       std::span<const double> target, double c_select, int evaluations) {
  SelectionResult r;
  r.method = method;
  r.locations = locations;
  const Eigen::VectorXd mu = gp.predict_mean(locations);
  r.predicted.assign(mu.data(), mu.data() + mu.size());
  r.loss = selection_loss(target, locations, gp, c_select);
  r.evaluations = evaluations;
  return r;
}

template <typename Optimizer>
SelectionResult run_optimizer(SelectionMethod method, const SelectionProblem& p, const SelectionConfig& config,
                              Optimizer&& optimize) {
  config.validate();
  const SelectionResult bv = best_visited(p.history, p.world, p.target, p.gp, config.c_select);
  const Eigen::Index d = p.world.axes();
  const Box box = selection_box(p.world, p.target.size());
  const ObjectiveFunction f = [&](const Eigen::VectorXd& x) {
    return selection_loss(p.target, unflatten_locations(x, d), p.gp, config.c_select);
  };
  const OptimizeResult r = optimize(f, box, flatten_locations(bv.locations));
  return finish(method, unflatten_locations(r.x, d), p.gp, p.target, config.c_select, r.evaluations);
}

}  // namespace

std::string to_string(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::bv: return "bv";
    case SelectionMethod::sa: return "sa";
    case SelectionMethod::ce: return "ce";
    case SelectionMethod::bo: return "bo";
  }
  return "unknown";
}

SelectionMethod selection_method_from_string(const std::string& name) {
  if (name == "bv") return SelectionMethod::bv;
  if (name == "sa") return SelectionMethod::sa;
  if (name == "ce") return SelectionMethod::ce;
  if (name == "bo") return SelectionMethod::bo;
  throw std::invalid_argument("unknown selection method '" + name + "'");
}

double SelectionConfig::default_c_select(const std::string& family) {
  if (family == "deciles") return 15.0;
  if (family == "quartiles") return 200.0;
  if (family == "extrema") return 30.0;
  return 15.0;
}

void SelectionConfig::validate() const {
  if (!(c_select >= 0.0)) throw std::invalid_argument("SelectionConfig: c_select must be >= 0");
  sa.validate();
  ce.validate();
  bo.validate();
}

double selection_loss(std::span<const double> target, const Eigen::MatrixXd& candidate, const GpModel& gp,
                      double c_select) {
  if (static_cast<Eigen::Index>(target.size()) != candidate.rows()) {
    throw std::invalid_argument("selection_loss: one candidate location per target value required");
  }
  const Prediction p = gp.predict(candidate);
  double mismatch = 0.0;
  double variance = 0.0;
  for (Eigen::Index i = 0; i < candidate.rows(); ++i) {
    const double d = target[static_cast<std::size_t>(i)] - p.mean(i);
    mismatch += d * d;
    variance += p.variance(i);
  }
  return std::sqrt(mismatch) + c_select * variance;
}

SelectionResult best_visited(const SurveyHistory& history, const GridWorld& world, std::span<const double> target,
                             const GpModel& gp, double c_select) {
  if (history.locations.empty()) throw EmptyHistoryError("best_visited: no measured locations");
  std::vector<std::size_t> unique;
  std::unordered_set<std::size_t> seen;
  for (std::size_t idx : history.locations) {
    if (seen.insert(idx).second) unique.push_back(idx);
  }
  const Eigen::MatrixXd points = world.points_for(unique);
  const Eigen::VectorXd mu = gp.predict_mean(points);

  Eigen::MatrixXd chosen(static_cast<Eigen::Index>(target.size()), world.axes());
  for (std::size_t q = 0; q < target.size(); ++q) {
    Eigen::Index arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
      const double gap = std::abs(mu(i) - target[q]);
      if (gap < best) {
        best = gap;
        arg = i;
      }
    }
    chosen.row(static_cast<Eigen::Index>(q)) = points.row(arg);
  }
  return finish(SelectionMethod::bv, chosen, gp, target, c_select, 0);
}

SelectionResult simulated_annealing_select(const SelectionProblem& problem, const SelectionConfig& config,
                                           std::mt19937_64& rng) {
  SaConfig sa = config.sa;
  sa.block_size = problem.world.axes();
  return run_optimizer(SelectionMethod::sa, problem, config,
                       [&](const ObjectiveFunction& f, const Box& box, const Eigen::VectorXd& x0) {
                         return simulated_annealing(f, box, x0, sa, rng);
                       });
}

SelectionResult cross_entropy_select(const SelectionProblem& problem, const SelectionConfig& config,
                                     std::mt19937_64& rng) {
  return run_optimizer(SelectionMethod::ce, problem, config,
                       [&](const ObjectiveFunction& f, const Box& box, const Eigen::VectorXd& x0) {
                         return cross_entropy(f, box, x0, config.ce, rng);
                       });
}

SelectionResult bayesian_opt_select(const SelectionProblem& problem, const SelectionConfig& config,
                                    std::mt19937_64& rng) {
  return run_optimizer(SelectionMethod::bo, problem, config,
                       [&](const ObjectiveFunction& f, const Box& box, const Eigen::VectorXd& x0) {
                         return bayesian_optimization(f, box, x0, config.bo, rng);
                       });
}

SelectionResult select_locations(SelectionMethod method, const SelectionProblem& problem,
                                 const SelectionConfig& config, std::mt19937_64& rng) {
  switch (method) {
    case SelectionMethod::bv:
      config.validate();
      return best_visited(problem.history, problem.world, problem.target, problem.gp, config.c_select);
    case SelectionMethod::sa: return simulated_annealing_select(problem, config, rng);
    case SelectionMethod::ce: return cross_entropy_select(problem, config, rng);
    case SelectionMethod::bo: return bayesian_opt_select(problem, config, rng);
  }
  throw std::logic_error("select_locations: unhandled method");
}

Eigen::VectorXd flatten_locations(const Eigen::MatrixXd& locations) {
  Eigen::VectorXd x(locations.size());
  for (Eigen::Index i = 0; i < locations.rows(); ++i) {
    for (Eigen::Index a = 0; a < locations.cols(); ++a) x(i * locations.cols() + a) = locations(i, a);
  }
  return x;
}

Eigen::MatrixXd unflatten_locations(const Eigen::VectorXd& x, Eigen::Index dims) {
  if (dims <= 0 || x.size() % dims != 0) throw std::invalid_argument("unflatten_locations: size mismatch");
  Eigen::MatrixXd m(x.size() / dims, dims);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index a = 0; a < dims; ++a) m(i, a) = x(i * dims + a);
  }
  return m;
}

Box selection_box(const GridWorld& world, std::size_t fractions) {
  const Eigen::VectorXd lo = world.hull_lower();
  const Eigen::VectorXd hi = world.hull_upper();
  const Eigen::Index d = lo.size();
  Box box;
  box.lower.resize(d * static_cast<Eigen::Index>(fractions));
  box.upper.resize(box.lower.size());
  for (std::size_t q = 0; q < fractions; ++q) {
    box.lower.segment(static_cast<Eigen::Index>(q) * d, d) = lo;
    box.upper.segment(static_cast<Eigen::Index>(q) * d, d) = hi;
  }
  return box;
}

}  // namespace qipp
