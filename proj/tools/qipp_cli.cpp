#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qipp/config.hpp"
#include "qipp/export.hpp"
#include "qipp/harness.hpp"

namespace {

struct Common {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out;
  int jobs = 1;
};

qipp::ExperimentConfig resolve(const Common& c) {
  if (c.config_path.empty() == c.preset.empty()) {
    throw qipp::ConfigError("give exactly one of --config or --preset");
  }
  qipp::ExperimentConfig cfg = c.preset.empty() ? qipp::load_config(c.config_path) : qipp::preset(c.preset);
  if (c.seed) cfg.seeds = {*c.seed};
  if (!c.out.empty()) cfg.output_dir = c.out;
  cfg.validate();
  return cfg;
}

void add_source_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "Experiment config (JSON)");
  cmd->add_option("--preset", c.preset, "Built-in config: drone-small or auv-small");
  cmd->add_option("--seed", c.seed, "Run only this trial seed");
  cmd->add_option("--out", c.out, "Output directory");
}

void print_summary(const std::vector<qipp::SummaryRow>& rows) {
  std::printf("%-22s %-22s %5s %12s %12s %12s\n", "strategy", "metric", "n", "q1", "median", "q3");
  for (const auto& r : rows) {
    std::printf("%-22s %-22s %5zu %12.6g %12.6g %12.6g\n", r.strategy.c_str(), r.metric.c_str(), r.spread.count,
                r.spread.q1, r.spread.median, r.spread.q3);
  }
}

int report(const std::filesystem::path& dir) {
  const auto records = qipp::read_records(dir);
  const auto rows = qipp::summarize(records);
  qipp::write_summary(dir / "summary.json", rows);
  qipp::export_traces(dir / "traces.csv", records);
  qipp::export_finals(dir / "finals.csv", records);
  print_summary(rows);
  int failed = 0;
  for (const auto& r : records) failed += r.ok ? 0 : 1;
  if (failed > 0) std::fprintf(stderr, "%d of %zu trials failed\n", failed, records.size());
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantile-aware informative path planning simulator"};
  app.require_subcommand(1);

  Common survey_opts;
  auto* survey = app.add_subcommand("survey", "Run the seeds x strategies trial matrix");
  add_source_flags(survey, survey_opts);
  survey->add_option("--jobs", survey_opts.jobs, "Trials run in parallel")->check(CLI::PositiveNumber);

  Common select_opts;
  auto* select = app.add_subcommand("select", "Rerun location selection on saved survey histories");
  add_source_flags(select, select_opts);

  std::string report_dir;
  auto* rep = app.add_subcommand("report", "Aggregate saved records and export tables");
  rep->add_option("--out", report_dir, "Directory holding trial records")->required();

  std::string preset_name;
  auto* show = app.add_subcommand("config", "Print a preset as a config file");
  show->add_option("--preset", preset_name, "Preset name")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (survey->parsed()) {
      const qipp::ExperimentConfig cfg = resolve(survey_opts);
      qipp::MatrixOptions opts;
      opts.jobs = survey_opts.jobs;
      const auto records = qipp::run_matrix(cfg, opts);
      print_summary(qipp::summarize(records));
      int failed = 0;
      for (const auto& r : records) {
        if (!r.ok) {
          ++failed;
          std::fprintf(stderr, "trial %s failed: %s\n", r.trial_id.c_str(), r.error.c_str());
        }
      }
      std::printf("%zu trials, %d failed, results in %s\n", records.size(), failed, cfg.output_dir.c_str());
      return failed == 0 ? 0 : 1;
    }
    if (select->parsed()) {
      const qipp::ExperimentConfig cfg = resolve(select_opts);
      const qipp::GroundTruthField field = qipp::make_field(cfg);
      auto records = qipp::read_records(cfg.output_dir);
      int failed = 0;
      for (auto& rec : records) {
        if (!rec.ok) continue;
        if (select_opts.seed && rec.seed != *select_opts.seed) continue;
        try {
          const auto history = qipp::read_history(cfg.output_dir / (rec.trial_id + ".history.json"));
          qipp::run_selection(cfg, field, history, rec);
          qipp::write_record(cfg.output_dir, rec);
        } catch (const std::exception& e) {
          ++failed;
          std::fprintf(stderr, "selection for %s failed: %s\n", rec.trial_id.c_str(), e.what());
        }
      }
      const int rc = report(cfg.output_dir);
      return failed == 0 ? rc : 1;
    }
    if (rep->parsed()) return report(report_dir);
    if (show->parsed()) {
      std::cout << qipp::dump_config(qipp::preset(preset_name));
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
