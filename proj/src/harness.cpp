#include "qipp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "qipp/export.hpp"
#include "qipp/metrics.hpp"

namespace qipp {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SurveyOptions survey_options(const ExperimentConfig& config) {
  SurveyOptions so;
  so.hp = config.gp;
  so.budget = config.budget;
  so.seed_count = config.seed_count;
  so.start = config.start_index();
  so.spec = config.quantile_spec();
  return so;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t trial_seed, std::uint64_t stream) {
  return splitmix64(splitmix64(trial_seed) ^ (stream * 0xd1b54a32d192ed03ULL));
}

std::string trial_id(const std::string& strategy, std::uint64_t seed) {
  return strategy + "-seed" + std::to_string(seed);
}

GroundTruthField make_field(const ExperimentConfig& config) {
  const GridWorld world = config.world();
  if (config.field.kind == FieldKind::raster) {
    GroundTruthField f = load_raster(config.field.path, world);
    if (!config.field.units.empty()) f.units = config.field.units;
    return f;
  }
  return sample_gp_field(world, config.field.hyperparams, config.field.seed, config.field.units);
}

std::unique_ptr<SurveyStrategy> make_strategy(const ExperimentConfig& config, const std::string& strategy) {
  const GridWorld world = config.world();
  if (strategy == "random_walk") return std::make_unique<RandomWalkStrategy>(world);
  if (strategy == "coverage") return std::make_unique<CoverageStrategy>(world, config.start_index());
  const ObjectiveKind kind = objective_kind_from_string(strategy);
  return std::make_unique<PomcpStrategy>(PomcpPlanner(world, config.sensor, config.objective_for(kind), config.planner));
}

void run_selection(const ExperimentConfig& config, const GroundTruthField& field, const TrialHistory& trial,
                   TrialRecord& record) {
  const GridWorld& world = field.world;
  const GpModel gp = fit_history(world, trial.history, trial.normalization, config.gp);
  const Eigen::VectorXd mu = gp.predict_mean(world.measure_points());
  std::vector<double> raw(static_cast<std::size_t>(mu.size()));
  for (Eigen::Index i = 0; i < mu.size(); ++i) raw[static_cast<std::size_t>(i)] = trial.normalization.denormalize(mu(i));
  const QuantileEstimate est = estimate_quantiles(raw, config.quantile_spec());
  std::vector<double> target(est.values.size());
  for (std::size_t q = 0; q < target.size(); ++q) target[q] = trial.normalization.normalize(est.values[q]);

  record.selections.clear();
  const SelectionProblem problem{world, trial.history, gp, target};
  for (const std::string& name : config.selection_methods) {
    const SelectionMethod method = selection_method_from_string(name);
    std::mt19937_64 rng(derive_seed(record.seed, 1 + static_cast<std::uint64_t>(method)));
    const SelectionResult r = select_locations(method, problem, config.selection, rng);
    SelectionRecord s;
    s.method = method;
    s.locations = r.locations;
    s.predicted.reserve(r.predicted.size());
    for (double p : r.predicted) s.predicted.push_back(trial.normalization.denormalize(p));
    s.loss = r.loss;
    s.evaluations = r.evaluations;
    s.rmse = rmse_locations(record.truth, r.locations, field);
    s.rmse_mean = rmse_locations_mean(record.truth, r.locations, field);
    record.selections.push_back(std::move(s));
  }
}

TrialRecord run_trial(const ExperimentConfig& config, const GroundTruthField& field, const std::string& strategy,
                      std::uint64_t seed, TrialHistory* history_out) {
  TrialRecord rec;
  rec.trial_id = trial_id(strategy, seed);
  rec.config_hash = config_hash(config);
  rec.seed = seed;
  rec.strategy = strategy;
  const auto t_start = Clock::now();
  try {
    auto strat = make_strategy(config, strategy);
    std::mt19937_64 rng(derive_seed(seed, 0));
    SurveyResult sr = run_survey(field, config.sensor, *strat, survey_options(config), rng);
    rec.steps = sr.history.steps;
    rec.measurements = sr.history.locations.size();
    rec.initial_rmse = sr.initial_rmse;
    rec.rmse_trace = sr.rmse;
    rec.truth = sr.truth;
    rec.estimate = sr.estimates.empty() ? sr.initial_estimate.values : sr.estimates.back().values;
    rec.timings.planning = sr.planning_seconds;
    rec.timings.gp = sr.gp_seconds;

    TrialHistory th{std::move(sr.history), sr.normalization};
    const auto t_sel = Clock::now();
    run_selection(config, field, th, rec);
    rec.timings.selection = seconds_since(t_sel);
    if (history_out != nullptr) *history_out = std::move(th);
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  rec.timings.total = seconds_since(t_start);
  return rec;
}

std::vector<TrialRecord> run_matrix(const ExperimentConfig& config, const MatrixOptions& options) {
  config.validate();
  const GroundTruthField field = make_field(config);

  struct Job {
    std::uint64_t seed;
    std::string strategy;
  };
  std::vector<Job> jobs;
  for (std::uint64_t seed : config.seeds) {
    for (const std::string& s : config.strategies) jobs.push_back({seed, s});
  }

  if (options.write) {
    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    if (ec || !std::filesystem::is_directory(config.output_dir)) {
      throw ExportError("cannot create output directory " + config.output_dir.string());
    }
  }

  std::vector<TrialRecord> records(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      TrialHistory history;
      records[i] = run_trial(config, field, jobs[i].strategy, jobs[i].seed, &history);
      if (options.write) {
        std::lock_guard<std::mutex> lock(io);
        write_record(config.output_dir, records[i]);
        write_timing(config.output_dir, records[i]);
        if (records[i].ok) write_history(config.output_dir, records[i].trial_id, history);
      }
    }
  };
  const int threads = std::clamp(options.jobs, 1, static_cast<int>(std::max<std::size_t>(jobs.size(), 1)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  if (options.write) {
    std::ofstream cfg(config.output_dir / "config.json");
    cfg << dump_config(config);
    write_summary(config.output_dir / "summary.json", summarize(records));
    export_traces(config.output_dir / "traces.csv", records);
    export_finals(config.output_dir / "finals.csv", records);
  }
  return records;
}

Spread spread(std::vector<double> values) {
  Spread s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.q1 = sorted_quantile(values, 0.25);
  s.median = sorted_quantile(values, 0.5);
  s.q3 = sorted_quantile(values, 0.75);
  return s;
}

std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<double>> finals;
  std::map<std::string, std::map<SelectionMethod, std::vector<double>>> selections;
  for (const TrialRecord& r : records) {
    if (!r.ok) continue;
    if (std::find(order.begin(), order.end(), r.strategy) == order.end()) order.push_back(r.strategy);
    finals[r.strategy].push_back(r.rmse_trace.empty() ? r.initial_rmse : r.rmse_trace.back());
    for (const SelectionRecord& s : r.selections) selections[r.strategy][s.method].push_back(s.rmse);
  }
  std::vector<SummaryRow> rows;
  for (const std::string& strategy : order) {
    rows.push_back({strategy, "final_rmse", spread(finals[strategy])});
    for (const auto& [method, values] : selections[strategy]) {
      rows.push_back({strategy, "selection_rmse:" + to_string(method), spread(values)});
    }
  }
  return rows;
}

}  // namespace qipp
