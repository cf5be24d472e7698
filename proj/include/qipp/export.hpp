#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qipp/harness.hpp"

namespace qipp {

/// Output location missing or not writable, or an input file unreadable.
class ExportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Record file contents. Timings are excluded so reruns compare byte for byte.
std::string record_to_json(const TrialRecord& record);
TrialRecord record_from_json(const std::string& text);

std::string history_to_json(const TrialHistory& history);
TrialHistory history_from_json(const std::string& text);

/// <dir>/<trial_id>.json, <trial_id>.timing.json and <trial_id>.history.json.
std::filesystem::path record_path(const std::filesystem::path& dir, const std::string& trial_id);
void write_record(const std::filesystem::path& dir, const TrialRecord& record);
void write_timing(const std::filesystem::path& dir, const TrialRecord& record);
void write_history(const std::filesystem::path& dir, const std::string& trial_id, const TrialHistory& history);
TrialRecord read_record(const std::filesystem::path& path);
TrialHistory read_history(const std::filesystem::path& path);
/// Every record file in `dir`, sorted by trial id.
std::vector<TrialRecord> read_records(const std::filesystem::path& dir);

void write_summary(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);

/// traces.csv columns: trial_id,config_hash,seed,strategy,step,rmse
/// One row per trial per step; step counts from 1.
struct TraceRow {
  std::string trial_id;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string strategy;
  int step = 0;
  double rmse = 0.0;
};

/// finals.csv columns: trial_id,config_hash,seed,strategy,status,steps,
/// initial_rmse,final_rmse, then <m>_rmse,<m>_rmse_mean,<m>_loss for
/// m in bv,sa,ce,bo. Cells are empty when a value does not exist.
struct FinalRow {
  std::string trial_id;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string strategy;
  std::string status;  // ok | error
  int steps = 0;
  std::optional<double> initial_rmse;
  std::optional<double> final_rmse;
  std::optional<double> rmse[4];
  std::optional<double> rmse_mean[4];
  std::optional<double> loss[4];
};

void export_traces(const std::filesystem::path& path, const std::vector<TrialRecord>& records);
void export_finals(const std::filesystem::path& path, const std::vector<TrialRecord>& records);
std::vector<TraceRow> load_traces(const std::filesystem::path& path);
std::vector<FinalRow> load_finals(const std::filesystem::path& path);

/// Shortest text that parses back to the same double.
std::string format_number(double v);

}  // namespace qipp
