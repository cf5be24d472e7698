#include "qipp/quantile.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace qipp {
namespace {

std::vector<double> sorted_copy(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("quantiles: empty input");
  std::vector<double> sorted(values.begin(), values.end());
  for (double v : sorted) {
    if (std::isnan(v)) throw std::invalid_argument("quantiles: NaN in input");
  }
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

void require_two_distinct(std::span<const double> values) {
  if (values.size() < 2) throw DegenerateSampleError("kde: need at least two values");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (!(*hi > *lo)) throw DegenerateSampleError("kde: need at least two distinct values");
}

double density_with_bandwidth(std::span<const double> values, double at, double bandwidth) {
  const double inv = 1.0 / bandwidth;
  double sum = 0.0;
  for (double x : values) {
    const double z = (at - x) * inv;
    sum += std::exp(-0.5 * z * z);
  }
  return sum * inv * std::numbers::inv_sqrtpi / std::numbers::sqrt2 / static_cast<double>(values.size());
}

std::vector<double> standard_errors(std::span<const double> quantile_values, const QuantileSpec& spec,
                                    std::size_t n, const DensityFunction& density) {
  std::vector<double> out;
  out.reserve(spec.size());
  const double root_n = std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const double q = spec.fractions()[i];
    const double p = std::max(density(quantile_values[i]), kDensityFloor);
    out.push_back(std::sqrt(q * (1.0 - q)) / (root_n * p));
  }
  return out;
}

}  // namespace

QuantileSpec::QuantileSpec(std::vector<double> fractions) : fractions_(std::move(fractions)) {
  if (fractions_.empty()) throw std::invalid_argument("QuantileSpec: no fractions");
  for (std::size_t i = 0; i < fractions_.size(); ++i) {
    const double q = fractions_[i];
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("QuantileSpec: fractions must lie in (0, 1)");
    if (i > 0 && !(q > fractions_[i - 1])) {
      throw std::invalid_argument("QuantileSpec: fractions must be strictly increasing");
    }
  }
}

QuantileSpec QuantileSpec::deciles() { return QuantileSpec({0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}); }
QuantileSpec QuantileSpec::quartiles() { return QuantileSpec({0.25, 0.5, 0.75}); }
QuantileSpec QuantileSpec::extrema() { return QuantileSpec({0.9, 0.95, 0.99}); }

QuantileSpec QuantileSpec::family(const std::string& name) {
  if (name == "deciles") return deciles();
  if (name == "quartiles") return quartiles();
  if (name == "extrema") return extrema();
  throw std::invalid_argument("QuantileSpec: unknown family '" + name + "'");
}

double sorted_quantile(std::span<const double> sorted, double fraction) {
  const std::size_t n = sorted.size();
  const double h = static_cast<double>(n - 1) * fraction + 1.0;
  const double lo = std::floor(h);
  const double hi = std::ceil(h);
  const double x_lo = sorted[static_cast<std::size_t>(lo) - 1];
  const double x_hi = sorted[static_cast<std::size_t>(hi) - 1];
  return x_lo + (h - lo) * (x_hi - x_lo);
}

QuantileEstimate estimate_quantiles(std::span<const double> values, const QuantileSpec& spec) {
  const std::vector<double> sorted = sorted_copy(values);
  QuantileEstimate out;
  out.spec = spec;
  out.source_size = sorted.size();
  out.values.reserve(spec.size());
  for (double q : spec.fractions()) out.values.push_back(sorted_quantile(sorted, q));
  return out;
}

double kde_bandwidth(std::span<const double> values) {
  require_two_distinct(values);
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return std::max(std::pow(n, -0.2) * sd, 1e-6 * (*hi - *lo));
}

double kde_density(std::span<const double> values, double at) {
  return density_with_bandwidth(values, at, kde_bandwidth(values));
}

std::vector<double> quantile_standard_error(std::span<const double> values, const QuantileSpec& spec) {
  const double bandwidth = kde_bandwidth(values);
  return quantile_standard_error(
      values, spec, [&](double at) { return density_with_bandwidth(values, at, bandwidth); });
}

std::vector<double> quantile_standard_error(std::span<const double> values, const QuantileSpec& spec,
                                            const DensityFunction& density) {
  const QuantileEstimate est = estimate_quantiles(values, spec);
  return standard_errors(est.values, spec, values.size(), density);
}

QuantileEstimate estimate_with_errors(std::span<const double> values, const QuantileSpec& spec) {
  QuantileEstimate est = estimate_quantiles(values, spec);
  const double bandwidth = kde_bandwidth(values);
  est.standard_errors = standard_errors(
      est.values, spec, values.size(), [&](double at) { return density_with_bandwidth(values, at, bandwidth); });
  return est;
}

}  // namespace qipp
