#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qipp/config.hpp"
#include "qipp/environment.hpp"
#include "qipp/selection.hpp"
#include "qipp/survey.hpp"

namespace qipp {

struct SelectionRecord {
  SelectionMethod method = SelectionMethod::bv;
  Eigen::MatrixXd locations;      // X# coordinates, one row per fraction
  std::vector<double> predicted;  // raw units
  double loss = 0.0;              // normalized space
  int evaluations = 0;
  double rmse = 0.0;       // ||V - GT(Q~)||_2
  double rmse_mean = 0.0;  // sqrt(mean(...)) variant
};

struct TrialTimings {
  double planning = 0.0;
  double gp = 0.0;
  double selection = 0.0;
  double total = 0.0;
};

struct TrialRecord {
  std::string trial_id;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string strategy;
  bool ok = true;
  std::string error;  // set when !ok

  int steps = 0;
  std::size_t measurements = 0;
  double initial_rmse = 0.0;
  std::vector<double> rmse_trace;  // one per step
  std::vector<double> truth;       // V
  std::vector<double> estimate;    // final V~, raw units
  std::vector<SelectionRecord> selections;

  TrialTimings timings;  // not part of the record file
};

/// Survey data needed to rerun selection later.
struct TrialHistory {
  SurveyHistory history;
  Normalization normalization;
};

/// Seed for a sub-stream of a trial (0 is the survey, 1.. the selectors).
std::uint64_t derive_seed(std::uint64_t trial_seed, std::uint64_t stream);

GroundTruthField make_field(const ExperimentConfig& config);

/// Builds the strategy named in strategy_names().
std::unique_ptr<SurveyStrategy> make_strategy(const ExperimentConfig& config, const std::string& strategy);

/// Runs selection for every configured method on a finished survey and fills
/// the selection part of `record`.
void run_selection(const ExperimentConfig& config, const GroundTruthField& field, const TrialHistory& trial,
                   TrialRecord& record);

/// One survey plus selection. Errors are captured in the record.
TrialRecord run_trial(const ExperimentConfig& config, const GroundTruthField& field, const std::string& strategy,
                      std::uint64_t seed, TrialHistory* history_out = nullptr);

struct MatrixOptions {
  int jobs = 1;
  bool write = true;  // write record, timing and history files under config.output_dir
};

/// seeds x strategies, each trial isolated; failed trials carry an error marker.
std::vector<TrialRecord> run_matrix(const ExperimentConfig& config, const MatrixOptions& options = {});

/// Type-7 median and quartiles.
struct Spread {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  std::size_t count = 0;
};
Spread spread(std::vector<double> values);

struct SummaryRow {
  std::string strategy;
  std::string metric;  // "final_rmse" or "selection_rmse:<method>"
  Spread spread;
};

/// Median and quartiles across seeds of successful trials.
std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records);

std::string trial_id(const std::string& strategy, std::uint64_t seed);

}  // namespace qipp
