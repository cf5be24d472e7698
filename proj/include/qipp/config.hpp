#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "qipp/environment.hpp"
#include "qipp/gp.hpp"
#include "qipp/objectives.hpp"
#include "qipp/planner.hpp"
#include "qipp/quantile.hpp"
#include "qipp/selection.hpp"

namespace qipp {

/// Config text that does not parse or violates the schema.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kConfigSchemaVersion = 1;

enum class FieldKind { synthetic, raster };

struct FieldSource {
  FieldKind kind = FieldKind::synthetic;
  std::uint64_t seed = 0;      // synthetic
  GpHyperparams hyperparams;   // synthetic prior; only lengthscale, signal_variance, prior_mean matter
  std::filesystem::path path;  // raster
  std::string units = "normalized";  // raster: empty means take the file's units
};

/// Survey strategies: the four planning objectives plus the two
/// non-adaptive baselines.
inline const std::vector<std::string>& strategy_names() {
  static const std::vector<std::string> names{"quantile_change", "quantile_se",  "entropy",
                                              "expected_improvement", "random_walk", "coverage"};
  return names;
}

struct ExperimentConfig {
  std::string name = "experiment";

  std::vector<int> plan_dims{20, 15};
  std::vector<int> refine{1, 1};
  double cell_size = 1.0;

  FieldSource field;
  SensorModel sensor;

  std::string quantile_family = "deciles";  // deciles | quartiles | extrema | custom
  std::vector<double> custom_fractions;

  GpHyperparams gp;

  int budget = 30;
  std::size_t seed_count = 100;
  std::vector<int> start{0, 0};  // plan cell

  std::vector<std::string> strategies{"quantile_se", "entropy", "random_walk", "coverage"};
  double c_plan_quantile_change = 1e-6;
  double c_plan_quantile_se = 1e-2;
  double xi = 0.0;
  EiDenominator ei_denominator = EiDenominator::variance;
  std::size_t subsample = 0;

  PlannerConfig planner;

  std::vector<std::string> selection_methods{"bv", "sa", "ce", "bo"};
  SelectionConfig selection;

  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::filesystem::path output_dir = "results";

  GridWorld world() const;
  QuantileSpec quantile_spec() const;
  std::size_t start_index() const;
  ObjectiveConfig objective_for(ObjectiveKind kind) const;
  /// Throws ConfigError on any violated invariant, including missing raster files.
  void validate() const;
};

/// Strict parse: unknown keys and wrong types are errors at every level.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string dump_config(const ExperimentConfig& config);

/// FNV-1a 64 of the canonical dump without name and output_dir, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// "drone-small" or "auv-small".
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace qipp
