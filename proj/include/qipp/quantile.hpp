#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qipp {

/// Sample with fewer than two distinct values has no usable density estimate.
class DegenerateSampleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Strictly increasing quantile fractions in (0, 1).
class QuantileSpec {
 public:
  QuantileSpec() = default;
  explicit QuantileSpec(std::vector<double> fractions);

  static QuantileSpec deciles();
  static QuantileSpec quartiles();
  static QuantileSpec extrema();
  /// "deciles", "quartiles" or "extrema".
  static QuantileSpec family(const std::string& name);

  const std::vector<double>& fractions() const { return fractions_; }
  std::size_t size() const { return fractions_.size(); }

  friend bool operator==(const QuantileSpec&, const QuantileSpec&) = default;

 private:
  std::vector<double> fractions_;
};

struct QuantileEstimate {
  QuantileSpec spec;
  std::vector<double> values;
  std::vector<double> standard_errors;  // empty when not computed
  std::size_t source_size = 0;
};

/// Linear interpolation between 1-indexed order statistics at
/// h = (n - 1) q + 1 (Hyndman & Fan type 7).
QuantileEstimate estimate_quantiles(std::span<const double> values, const QuantileSpec& spec);

/// Same estimate on data that is already sorted ascending.
double sorted_quantile(std::span<const double> sorted, double fraction);

/// Scott's rule, floored at 1e-6 of the sample range.
double kde_bandwidth(std::span<const double> values);

/// Gaussian kernel density estimate at `at`.
double kde_density(std::span<const double> values, double at);

using DensityFunction = std::function<double(double)>;

/// Density floor used inside the standard error formula.
inline constexpr double kDensityFloor = 1e-12;

/// sqrt(q (1 - q)) / (sqrt(n) p(v_q)) per fraction, p from a Gaussian KDE.
std::vector<double> quantile_standard_error(std::span<const double> values, const QuantileSpec& spec);

/// As above with an explicit density in place of the KDE.
std::vector<double> quantile_standard_error(std::span<const double> values, const QuantileSpec& spec,
                                            const DensityFunction& density);

/// Quantile values and their standard errors in one pass.
QuantileEstimate estimate_with_errors(std::span<const double> values, const QuantileSpec& spec);

}  // namespace qipp
