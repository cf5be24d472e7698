#include "qipp/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "qipp/gp.hpp"

namespace qipp {
namespace {

// Evaluates f and keeps the best point seen, earliest wins ties.
struct Tracker {
  const ObjectiveFunction& f;
  Eigen::VectorXd best_x;
  double best = std::numeric_limits<double>::infinity();
  int evaluations = 0;

  double operator()(const Eigen::VectorXd& x) {
    const double v = f(x);
    ++evaluations;
    if (v < best) {
      best = v;
      best_x = x;
    }
    return v;
  }

  OptimizeResult result() const {
    OptimizeResult r;
    r.x = best_x;
    r.value = best;
    r.evaluations = evaluations;
    return r;
  }
};

Eigen::VectorXd safe_extent(const Box& box) {
  Eigen::VectorXd e = box.extent();
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    if (!(e(i) > 0.0)) e(i) = 1.0;
  }
  return e;
}

void check_start(const Box& box, const Eigen::VectorXd& x0) {
  box.validate();
  if (x0.size() != box.dims()) throw std::invalid_argument("optimizer: start point has wrong dimension");
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) * std::numbers::inv_sqrtpi / std::numbers::sqrt2; }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

bool Box::contains(const Eigen::VectorXd& x) const {
  return x.size() == lower.size() && (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

void Box::validate() const {
  if (lower.size() == 0 || lower.size() != upper.size()) throw std::invalid_argument("Box: bad dimensions");
  if (!(upper.array() >= lower.array()).all()) throw std::invalid_argument("Box: upper below lower");
}

void SaConfig::validate() const {
  if (!(t_max > t_min && t_min > 0.0)) throw std::invalid_argument("SaConfig: need t_max > t_min > 0");
  if (!(cooling_rate > 0.0 && cooling_rate < 1.0)) throw std::invalid_argument("SaConfig: cooling_rate in (0, 1)");
  if (reset_interval < 1) throw std::invalid_argument("SaConfig: reset_interval must be >= 1");
  if (!(step_fraction > 0.0)) throw std::invalid_argument("SaConfig: step_fraction must be > 0");
  if (block_size < 1) throw std::invalid_argument("SaConfig: block_size must be >= 1");
}

void CeConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("CeConfig: alpha in (0, 1]");
  if (!(elite_fraction > 0.0 && elite_fraction <= 1.0)) throw std::invalid_argument("CeConfig: eta in (0, 1]");
  if (samples_per_iter < 1 || iterations < 0) throw std::invalid_argument("CeConfig: bad sample counts");
  if (!(init_sigma_fraction > 0.0)) throw std::invalid_argument("CeConfig: init_sigma_fraction must be > 0");
}

void BoConfig::validate() const {
  if (init_random_count < 0 || iterations < 0 || candidates < 1) {
    throw std::invalid_argument("BoConfig: counts must be nonnegative");
  }
  if (!(xi >= 0.0)) throw std::invalid_argument("BoConfig: xi must be >= 0");
}

bool metropolis_accept(double delta, double temperature, double u) {
  if (delta <= 0.0) return true;
  if (!(temperature > 0.0)) return false;
  return u < std::exp(-delta / temperature);
}

int annealing_steps(const SaConfig& config) {
  config.validate();
  int n = 0;
  for (double t = config.t_max; t >= config.t_min; t *= 1.0 - config.cooling_rate) ++n;
  return n;
}

OptimizeResult simulated_annealing(const ObjectiveFunction& f, const Box& box, const Eigen::VectorXd& x0,
                                   const SaConfig& config, std::mt19937_64& rng) {
  check_start(box, x0);
  config.validate();
  if (box.dims() % config.block_size != 0) throw std::invalid_argument("SaConfig: block_size must divide dims");

  Tracker track{f, {}, std::numeric_limits<double>::infinity(), 0};
  const Eigen::VectorXd extent = box.extent();
  const Eigen::Index blocks = box.dims() / config.block_size;
  std::uniform_int_distribution<Eigen::Index> pick(0, blocks - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::VectorXd current = box.clamp(x0);
  double current_value = track(current);
  std::vector<double> trace;

  int step = 0;
  for (double t = config.t_max; t >= config.t_min; t *= 1.0 - config.cooling_rate) {
    const double heat = (t - config.t_min) / (config.t_max - config.t_min);
    const double scale = config.step_fraction * (0.5 + 0.5 * heat);
    Eigen::VectorXd proposal = current;
    const Eigen::Index b = pick(rng);
    for (Eigen::Index k = 0; k < config.block_size; ++k) {
      const Eigen::Index i = b * config.block_size + k;
      proposal(i) += normal(rng) * scale * extent(i);
    }
    proposal = box.clamp(proposal);
    const double value = track(proposal);
    if (metropolis_accept(value - current_value, t, unit(rng))) {
      current = std::move(proposal);
      current_value = value;
    }
    ++step;
    if (step % config.reset_interval == 0) {
      current = track.best_x;
      current_value = track.best;
    }
    trace.push_back(track.best);
  }
  OptimizeResult r = track.result();
  r.best_trace = std::move(trace);
  return r;
}

OptimizeResult cross_entropy(const ObjectiveFunction& f, const Box& box, const Eigen::VectorXd& x0,
                             const CeConfig& config, std::mt19937_64& rng) {
  check_start(box, x0);
  config.validate();
  Tracker track{f, {}, std::numeric_limits<double>::infinity(), 0};
  const Eigen::Index d = box.dims();
  Eigen::VectorXd mean = box.clamp(x0);
  Eigen::VectorXd sigma = config.init_sigma_fraction * box.extent();
  track(mean);

  const int n = config.samples_per_iter;
  const int elite = std::max(1, static_cast<int>(std::ceil(config.elite_fraction * n - 1e-12)));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd samples(n, d);
  std::vector<double> values(static_cast<std::size_t>(n));
  std::vector<int> order(static_cast<std::size_t>(n));

  OptimizeResult out;
  for (int it = 0; it < config.iterations; ++it) {
    for (int s = 0; s < n; ++s) {
      Eigen::VectorXd x(d);
      for (Eigen::Index i = 0; i < d; ++i) x(i) = mean(i) + sigma(i) * normal(rng);
      x = box.clamp(x);
      samples.row(s) = x.transpose();
      values[static_cast<std::size_t>(s)] = track(x);
    }
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return values[static_cast<std::size_t>(a)] < values[static_cast<std::size_t>(b)]; });

    Eigen::VectorXd elite_mean = Eigen::VectorXd::Zero(d);
    for (int k = 0; k < elite; ++k) elite_mean += samples.row(order[static_cast<std::size_t>(k)]).transpose();
    elite_mean /= elite;
    Eigen::VectorXd elite_var = Eigen::VectorXd::Zero(d);
    for (int k = 0; k < elite; ++k) {
      elite_var += (samples.row(order[static_cast<std::size_t>(k)]).transpose() - elite_mean).array().square().matrix();
    }
    elite_var /= elite;

    mean = config.alpha * elite_mean + (1.0 - config.alpha) * mean;
    sigma = config.alpha * elite_var.cwiseSqrt() + (1.0 - config.alpha) * sigma;
    out.best_trace.push_back(track.best);
    out.sigma_trace.push_back(sigma.mean());
  }
  OptimizeResult r = track.result();
  r.best_trace = std::move(out.best_trace);
  r.sigma_trace = std::move(out.sigma_trace);
  return r;
}

OptimizeResult bayesian_optimization(const ObjectiveFunction& f, const Box& box, const Eigen::VectorXd& x0,
                                     const BoConfig& config, std::mt19937_64& rng) {
  check_start(box, x0);
  config.validate();
  Tracker track{f, {}, std::numeric_limits<double>::infinity(), 0};
  const Eigen::Index d = box.dims();
  const Eigen::VectorXd extent = safe_extent(box);
  auto to_box = [&](const Eigen::VectorXd& u) { return box.clamp(box.lower + u.cwiseProduct(extent)); };

  std::vector<Eigen::VectorXd> inputs;  // unit cube
  std::vector<double> outputs;
  auto evaluate = [&](const Eigen::VectorXd& u) {
    outputs.push_back(track(to_box(u)));
    inputs.push_back(u);
  };

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  // The start point is evaluated as given; mapping it through the unit cube
  // could move it by a rounding error.
  const Eigen::VectorXd start = box.clamp(x0);
  outputs.push_back(track(start));
  inputs.push_back(((start - box.lower).array() / extent.array()).matrix());
  for (int i = 0; i < config.init_random_count; ++i) {
    Eigen::VectorXd u(d);
    for (Eigen::Index k = 0; k < d; ++k) u(k) = unit(rng);
    evaluate(u);
  }

  const double root_d = std::sqrt(static_cast<double>(d));
  constexpr double kLengthscales[] = {0.1, 0.2, 0.4, 0.8, 1.6};
  constexpr int kLocalCenters = 5;
  constexpr int kLocalPerCenter = 100;
  constexpr double kLocalStep = 0.05;

  OptimizeResult out;
  for (int it = 0; it < config.iterations; ++it) {
    const auto n = static_cast<Eigen::Index>(outputs.size());
    Eigen::MatrixXd x(n, d);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x.row(i) = inputs[static_cast<std::size_t>(i)].transpose();
      y(i) = outputs[static_cast<std::size_t>(i)];
    }
    const double y_mean = y.mean();
    const double y_sd = std::sqrt((y.array() - y_mean).square().sum() / std::max<Eigen::Index>(n - 1, 1));
    const double y_scale = y_sd > 0.0 ? y_sd : 1.0;
    const Eigen::VectorXd yn = (y.array() - y_mean) / y_scale;

    std::optional<GpModel> surrogate;
    double best_lml = -std::numeric_limits<double>::infinity();
    for (double ls : kLengthscales) {
      GpHyperparams hp;
      hp.lengthscale = ls * root_d;
      hp.signal_variance = 1.0;
      hp.noise_variance = 1e-6;
      try {
        GpModel gp = GpModel::condition(x, yn, hp);
        const double lml = gp.log_marginal_likelihood();
        if (std::isfinite(lml) && lml > best_lml) {
          best_lml = lml;
          surrogate = std::move(gp);
        }
      } catch (const ConditioningError&) {
      }
    }
    if (!surrogate) break;

    std::vector<int> ranked(static_cast<std::size_t>(n));
    std::iota(ranked.begin(), ranked.end(), 0);
    std::stable_sort(ranked.begin(), ranked.end(), [&](int a, int b) { return y(a) < y(b); });
    const int centers = std::min<int>(kLocalCenters, static_cast<int>(n));

    const int total = config.candidates + centers * kLocalPerCenter;
    Eigen::MatrixXd cand(total, d);
    for (int c = 0; c < config.candidates; ++c) {
      for (Eigen::Index k = 0; k < d; ++k) cand(c, k) = unit(rng);
    }
    for (int c = 0; c < centers; ++c) {
      const Eigen::VectorXd& center = inputs[static_cast<std::size_t>(ranked[static_cast<std::size_t>(c)])];
      for (int j = 0; j < kLocalPerCenter; ++j) {
        const int row = config.candidates + c * kLocalPerCenter + j;
        for (Eigen::Index k = 0; k < d; ++k) cand(row, k) = std::clamp(center(k) + kLocalStep * normal(rng), 0.0, 1.0);
      }
    }

    const Prediction p = surrogate->predict(cand);
    const double best = yn.minCoeff();
    int arg = 0;
    double best_ei = -1.0;
    for (int c = 0; c < total; ++c) {
      const double sd = std::sqrt(std::max(p.variance(c), 0.0));
      const double imp = best - p.mean(c) - config.xi;
      const double ei = sd > 0.0 ? imp * normal_cdf(imp / sd) + sd * normal_pdf(imp / sd) : std::max(imp, 0.0);
      if (ei > best_ei) {
        best_ei = ei;
        arg = c;
      }
    }
    evaluate(cand.row(arg).transpose());
    out.best_trace.push_back(track.best);
  }
  OptimizeResult r = track.result();
  r.best_trace = std::move(out.best_trace);
  return r;
}

}  // namespace qipp
