#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "qipp/config.hpp"
#include "qipp/export.hpp"
#include "qipp/harness.hpp"
#include "qipp/metrics.hpp"

using namespace qipp;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "qipp_test_harness" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig tiny_config(const std::filesystem::path& out) {
  ExperimentConfig c;
  c.name = "tiny";
  c.plan_dims = {6, 5};
  c.refine = {1, 1};
  c.field.hyperparams.lengthscale = 1.5;
  c.gp.lengthscale = 1.5;
  c.sensor = SensorModel::camera(3, 3);
  c.budget = 4;
  c.seed_count = 8;
  c.start = {0, 0};
  c.strategies = {"random_walk", "coverage"};
  c.planner.rollouts_per_step = 10;
  c.planner.max_depth = 2;
  c.selection.ce.iterations = 5;
  c.selection.bo.init_random_count = 5;
  c.selection.bo.iterations = 3;
  c.selection.bo.candidates = 100;
  c.seeds = {0, 1, 2};
  c.output_dir = out;
  return c;
}

TrialRecord fake_record(const std::string& strategy, std::uint64_t seed, double final_rmse) {
  TrialRecord r;
  r.strategy = strategy;
  r.seed = seed;
  r.trial_id = trial_id(strategy, seed);
  r.config_hash = "0123456789abcdef";
  r.steps = 2;
  r.initial_rmse = 1.0;
  r.rmse_trace = {0.7, final_rmse};
  return r;
}

}  // namespace

TEST_CASE("quantile RMSE") {
  CHECK(rmse_quantiles(std::vector<double>{0, 0}, std::vector<double>{3, 4}) == doctest::Approx(std::sqrt(12.5)));
  CHECK(rmse_quantiles(std::vector<double>{1, 2}, std::vector<double>{1, 2}) == 0.0);
  CHECK(rmse_quantiles(std::vector<double>{1, 5, 2}, std::vector<double>{0, 1, 9}) ==
        rmse_quantiles(std::vector<double>{2, 1, 5}, std::vector<double>{9, 0, 1}));
  CHECK_THROWS(rmse_quantiles(std::vector<double>{1}, std::vector<double>{1, 2}));
}

TEST_CASE("location RMSE uses nearest lattice lookups and the plain L2 norm") {
  const GridWorld w({3, 3});
  GroundTruthField f;
  f.world = w;
  f.values.resize(9);
  for (int i = 0; i < 9; ++i) f.values(i) = 10.0 * i;
  Eigen::MatrixXd at(1, 2);
  at << 1.2, 0.9;  // nearest cell (1, 1) -> index 4
  CHECK(rmse_locations(std::vector<double>{42.0}, at, f) == doctest::Approx(2.0));
  CHECK(rmse_locations(std::vector<double>{40.0}, at, f) == 0.0);
  Eigen::MatrixXd two(2, 2);
  two << 0, 0, 2, 2;
  const std::vector<double> v{3.0, 84.0};
  CHECK(rmse_locations(v, two, f) == doctest::Approx(std::sqrt(9.0 + 16.0)));
  CHECK(rmse_locations_mean(v, two, f) == doctest::Approx(std::sqrt(25.0 / 2.0)));
}

TEST_CASE("spread and summaries") {
  const Spread s = spread({3.0, 1.0, 2.0});
  CHECK(s.median == 2.0);
  CHECK(s.q1 == 1.5);
  CHECK(s.q3 == 2.5);
  CHECK(s.count == 3);

  std::vector<TrialRecord> recs{fake_record("a", 0, 0.5), fake_record("a", 1, 0.2), fake_record("a", 2, 0.9),
                                fake_record("b", 0, 1.0)};
  recs.back().ok = false;
  const auto rows = summarize(recs);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].strategy == "a");
  CHECK(rows[0].spread.median == 0.5);
  CHECK(rows[0].spread.q1 == doctest::Approx(0.35));
  CHECK(rows[0].spread.q3 == doctest::Approx(0.7));
}

TEST_CASE("seed derivation is stable and separates streams") {
  CHECK(derive_seed(3, 0) == derive_seed(3, 0));
  CHECK(derive_seed(3, 0) != derive_seed(3, 1));
  CHECK(derive_seed(3, 0) != derive_seed(4, 0));
  CHECK(trial_id("coverage", 7) == "coverage-seed7");
}

TEST_CASE("trial matrix: counting, reruns and exports") {
  const auto dir = scratch("matrix");
  const ExperimentConfig cfg = tiny_config(dir);
  const auto records = run_matrix(cfg);
  REQUIRE(records.size() == 6);
  for (const auto& r : records) {
    CHECK(r.ok);
    CHECK(r.steps == 4);
    CHECK(r.rmse_trace.size() == 4);
    CHECK(r.selections.size() == 4);
    for (double v : r.rmse_trace) CHECK(v >= 0.0);
    CHECK(std::filesystem::exists(dir / (r.trial_id + ".json")));
    CHECK(std::filesystem::exists(dir / (r.trial_id + ".timing.json")));
    CHECK(std::filesystem::exists(dir / (r.trial_id + ".history.json")));
  }
  CHECK(records[0].seed == 0);
  CHECK(records[1].seed == 0);
  CHECK(records[1].strategy == "coverage");

  const auto again = run_matrix(cfg, MatrixOptions{1, false});
  for (std::size_t i = 0; i < records.size(); ++i) CHECK(record_to_json(again[i]) == record_to_json(records[i]));

  const auto parallel = run_matrix(cfg, MatrixOptions{3, false});
  for (std::size_t i = 0; i < records.size(); ++i) CHECK(record_to_json(parallel[i]) == record_to_json(records[i]));

  const auto traces = load_traces(dir / "traces.csv");
  std::size_t steps = 0;
  for (const auto& r : records) steps += r.rmse_trace.size();
  CHECK(traces.size() == steps);
  CHECK(traces.front().step == 1);

  const auto finals = load_finals(dir / "finals.csv");
  REQUIRE(finals.size() == records.size());
  const auto loaded = read_records(dir);
  REQUIRE(loaded.size() == records.size());
  for (const auto& rec : loaded) {
    const auto it = std::find_if(records.begin(), records.end(), [&](const TrialRecord& r) { return r.trial_id == rec.trial_id; });
    REQUIRE(it != records.end());
    CHECK(record_to_json(rec) == record_to_json(*it));
    const auto fit = std::find_if(finals.begin(), finals.end(), [&](const FinalRow& f) { return f.trial_id == rec.trial_id; });
    REQUIRE(fit != finals.end());
    CHECK(*fit->final_rmse == rec.rmse_trace.back());
    CHECK(*fit->initial_rmse == rec.initial_rmse);
    for (std::size_t m = 0; m < 4; ++m) CHECK(*fit->rmse[m] == rec.selections[m].rmse);
  }

  // Selection rerun from the saved history reproduces the stored result.
  const GroundTruthField field = make_field(cfg);
  TrialRecord copy = loaded.front();
  run_selection(cfg, field, read_history(dir / (copy.trial_id + ".history.json")), copy);
  CHECK(record_to_json(copy) == record_to_json(loaded.front()));

  CHECK(slurp(dir / "config.json") == dump_config(cfg));
}

TEST_CASE("a failing trial is marked and the matrix continues") {
  ExperimentConfig cfg = tiny_config(scratch("failing"));
  cfg.plan_dims = {1, 1};
  cfg.refine = {1, 1};
  cfg.seed_count = 1;
  cfg.strategies = {"coverage"};
  cfg.seeds = {0, 1};
  const auto records = run_matrix(cfg, MatrixOptions{1, false});
  REQUIRE(records.size() == 2);
  for (const auto& r : records) {
    CHECK_FALSE(r.ok);
    CHECK(!r.error.empty());
  }
}

TEST_CASE("exports: empty lists give header-only files, values round-trip exactly") {
  const auto dir = scratch("export");
  export_traces(dir / "t.csv", {});
  export_finals(dir / "f.csv", {});
  CHECK(slurp(dir / "t.csv") == "trial_id,config_hash,seed,strategy,step,rmse\n");
  CHECK(load_finals(dir / "f.csv").empty());

  TrialRecord r = fake_record("quantile_se", 4, 0.1 + 0.2);
  r.rmse_trace = {1.0 / 3.0, std::nextafter(0.3, 1.0)};
  SelectionRecord s;
  s.method = SelectionMethod::ce;
  s.locations = Eigen::MatrixXd::Constant(2, 2, 1.0 / 7.0);
  s.predicted = {0.1, 0.7};
  s.rmse = std::sqrt(2.0);
  s.rmse_mean = 1e-300;
  s.loss = 123456.789;
  r.selections.push_back(s);
  r.truth = {1.0, 2.0};
  r.estimate = {M_PI, -0.0};
  export_traces(dir / "t.csv", {r});
  export_finals(dir / "f.csv", {r});
  const auto t = load_traces(dir / "t.csv");
  REQUIRE(t.size() == 2);
  CHECK(t[0].rmse == 1.0 / 3.0);
  CHECK(t[1].rmse == std::nextafter(0.3, 1.0));
  const auto f = load_finals(dir / "f.csv");
  REQUIRE(f.size() == 1);
  CHECK(*f[0].rmse[2] == std::sqrt(2.0));
  CHECK(*f[0].rmse_mean[2] == 1e-300);
  CHECK_FALSE(f[0].rmse[0].has_value());

  const TrialRecord back = record_from_json(record_to_json(r));
  CHECK(back.rmse_trace == r.rmse_trace);
  CHECK(back.selections[0].locations == s.locations);
  CHECK(back.estimate[0] == M_PI);
  CHECK(record_to_json(back) == record_to_json(r));

  CHECK_THROWS_AS(export_traces(dir / "missing" / "t.csv", {r}), ExportError);
  CHECK_THROWS_AS(read_records(dir / "nope"), ExportError);
}

TEST_CASE("config parsing is strict") {
  const std::string base = R"({"schema_version": 1, "survey": {"budget": 12}})";
  const ExperimentConfig c = parse_config(base);
  CHECK(c.budget == 12);
  CHECK_THROWS_AS(parse_config(R"({"schema_version": 1, "bugdet": 3})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema_version": 1, "survey": {"budgett": 3}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"survey": {"budget": 3}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema_version": 2})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema_version": 1, "survey": {"budget": "3"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema_version": 1, "quantiles": {"family": "octiles"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);

  const ExperimentConfig q = parse_config(R"({"schema_version": 1, "quantiles": {"family": "quartiles"}})");
  CHECK(q.selection.c_select == 200.0);

  ExperimentConfig bad = c;
  bad.seeds.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.field.kind = FieldKind::raster;
  bad.field.path = "/definitely/not/here.raster";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.strategies = {"teleport"};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("config dump round-trips and the hash tracks meaningful fields") {
  for (const std::string& name : preset_names()) {
    const ExperimentConfig p = preset(name);
    CHECK_NOTHROW(p.validate());
    const ExperimentConfig back = parse_config(dump_config(p));
    CHECK(dump_config(back) == dump_config(p));
    CHECK(config_hash(back) == config_hash(p));
  }
  const ExperimentConfig base = preset("drone-small");
  CHECK(config_hash(base).size() == 16);
  ExperimentConfig renamed = base;
  renamed.name = "other";
  renamed.output_dir = "elsewhere";
  CHECK(config_hash(renamed) == config_hash(base));

  std::vector<ExperimentConfig> variants(8, base);
  variants[0].budget = 31;
  variants[1].planner.gamma = 0.8;
  variants[2].gp.noise_variance = 1e-3;
  variants[3].selection.ce.alpha = 0.5;
  variants[4].seeds = {5};
  variants[5].field.seed = 9;
  variants[6].quantile_family = "extrema";
  variants[7].sensor = SensorModel::camera(6, 5);
  for (const auto& v : variants) CHECK(config_hash(v) != config_hash(base));

  const ExperimentConfig drone = preset("drone-small");
  CHECK(drone.plan_dims == std::vector<int>{20, 15});
  CHECK(drone.planner.rollouts_per_step == 300);
  CHECK(drone.planner.max_depth == 7);
  CHECK(drone.budget == 30);
  CHECK(drone.sensor.footprint_width * drone.sensor.footprint_height == 40);
  const ExperimentConfig auv = preset("auv-small");
  CHECK(auv.plan_dims == std::vector<int>{12, 14, 2});
  CHECK(auv.planner.rollouts_per_step == 130);
  CHECK(auv.planner.max_depth == 10);
  CHECK(auv.budget == 200);
  CHECK(auv.sensor.kind == SensorKind::point);
  CHECK_THROWS_AS(preset("submarine"), ConfigError);
}

TEST_CASE("raster-backed configs resolve paths next to the config file") {
  const auto dir = scratch("raster");
  {
    std::ofstream r(dir / "field.raster");
    r << "qipp-raster 1\ndims 3 3\nunits m\n1 2 3\n4 5 6\n7 8 9\n";
    std::ofstream c(dir / "exp.json");
    c << R"({"schema_version": 1, "world": {"plan_dims": [3, 3]}, "field": {"kind": "raster", "path": "field.raster"},
            "survey": {"budget": 2, "seed_count": 4}, "seeds": [1]})";
  }
  const ExperimentConfig cfg = load_config(dir / "exp.json");
  CHECK(cfg.field.path == dir / "field.raster");
  const GroundTruthField f = make_field(cfg);
  CHECK(f.units == "m");
  CHECK(f.at(4) == 5.0);
}
