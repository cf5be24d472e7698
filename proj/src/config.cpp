#include "qipp/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace qipp {
namespace {

using nlohmann::json;

// Hands out keys of one JSON object and rejects the ones nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  const json* find(const std::string& key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void read(const std::string& key, int& out) {
    if (const json* v = find(key)) out = as_int(*v, path(key));
  }
  void read_count(const std::string& key, std::size_t& out) {
    if (const json* v = find(key)) {
      const int i = as_int(*v, path(key));
      if (i < 0) throw ConfigError(path(key) + ": must be nonnegative");
      out = static_cast<std::size_t>(i);
    }
  }
  void read(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) out = as_u64(*v, path(key));
  }
  void read(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(path(key) + ": expected a number");
      out = v->get<double>();
    }
  }
  void read(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(path(key) + ": expected true or false");
      out = v->get<bool>();
    }
  }
  void read(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(path(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }
  void read(const std::string& key, std::vector<int>& out) { read_array(key, out, [&](const json& e, const std::string& p) { return as_int(e, p); }); }
  void read(const std::string& key, std::vector<std::uint64_t>& out) {
    read_array(key, out, [&](const json& e, const std::string& p) { return as_u64(e, p); });
  }
  void read(const std::string& key, std::vector<double>& out) {
    read_array(key, out, [&](const json& e, const std::string& p) {
      if (!e.is_number()) throw ConfigError(p + ": expected a number");
      return e.get<double>();
    });
  }
  void read(const std::string& key, std::vector<std::string>& out) {
    read_array(key, out, [&](const json& e, const std::string& p) {
      if (!e.is_string()) throw ConfigError(p + ": expected a string");
      return e.get<std::string>();
    });
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      (void)value;
      if (!used_.count(key)) throw ConfigError(path(key) + ": unknown key");
    }
  }

 private:
  static int as_int(const json& v, const std::string& p) {
    if (!v.is_number_integer()) throw ConfigError(p + ": expected an integer");
    return v.get<int>();
  }
  static std::uint64_t as_u64(const json& v, const std::string& p) {
    if (!v.is_number_unsigned()) throw ConfigError(p + ": expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }
  template <typename T, typename F>
  void read_array(const std::string& key, std::vector<T>& out, F&& convert) {
    const json* v = find(key);
    if (v == nullptr) return;
    if (!v->is_array()) throw ConfigError(path(key) + ": expected an array");
    std::vector<T> tmp;
    for (std::size_t i = 0; i < v->size(); ++i) tmp.push_back(convert((*v)[i], path(key) + "[" + std::to_string(i) + "]"));
    out = std::move(tmp);
  }

  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

template <typename F>
void section(ObjectReader& parent, const std::string& key, F&& body) {
  if (const json* v = parent.find(key)) {
    ObjectReader r(*v, parent.path(key));
    body(r);
    r.finish();
  }
}

json to_json(const ExperimentConfig& c, bool for_hash) {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  if (!for_hash) {
    j["name"] = c.name;
    j["output_dir"] = c.output_dir.string();
  }
  j["world"] = {{"plan_dims", c.plan_dims}, {"refine", c.refine}, {"cell_size", c.cell_size}};
  if (c.field.kind == FieldKind::synthetic) {
    j["field"] = {{"kind", "synthetic"},
                  {"seed", c.field.seed},
                  {"lengthscale", c.field.hyperparams.lengthscale},
                  {"signal_variance", c.field.hyperparams.signal_variance},
                  {"prior_mean", c.field.hyperparams.prior_mean},
                  {"units", c.field.units}};
  } else {
    j["field"] = {{"kind", "raster"}, {"path", c.field.path.string()}};
    if (!c.field.units.empty()) j["field"]["units"] = c.field.units;
  }
  if (c.sensor.kind == SensorKind::camera) {
    j["sensor"] = {{"kind", "camera"}, {"width", c.sensor.footprint_width}, {"height", c.sensor.footprint_height}};
  } else {
    j["sensor"] = {{"kind", "point"}, {"samples", c.sensor.traverse_samples}};
  }
  j["quantiles"] = {{"family", c.quantile_family}};
  if (c.quantile_family == "custom") j["quantiles"]["fractions"] = c.custom_fractions;
  j["gp"] = {{"lengthscale", c.gp.lengthscale},
             {"signal_variance", c.gp.signal_variance},
             {"noise_variance", c.gp.noise_variance}};
  j["survey"] = {{"budget", c.budget}, {"seed_count", c.seed_count}, {"start", c.start}};
  j["strategies"] = c.strategies;
  j["objective"] = {{"c_plan_quantile_change", c.c_plan_quantile_change},
                    {"c_plan_quantile_se", c.c_plan_quantile_se},
                    {"xi", c.xi},
                    {"ei_denominator", to_string(c.ei_denominator)},
                    {"subsample", c.subsample}};
  j["planner"] = {{"rollouts_per_step", c.planner.rollouts_per_step},
                  {"max_depth", c.planner.max_depth},
                  {"rollout_horizon", c.planner.rollout_horizon},
                  {"gamma", c.planner.gamma},
                  {"ucb_c", c.planner.ucb_c},
                  {"multi_step", c.planner.multi_step},
                  {"significance", c.planner.significance}};
  const SelectionConfig& s = c.selection;
  j["selection"] = {{"methods", c.selection_methods},
                    {"c_select", s.c_select},
                    {"sa",
                     {{"t_max", s.sa.t_max},
                      {"t_min", s.sa.t_min},
                      {"cooling_rate", s.sa.cooling_rate},
                      {"reset_interval", s.sa.reset_interval},
                      {"step_fraction", s.sa.step_fraction}}},
                    {"ce",
                     {{"alpha", s.ce.alpha},
                      {"elite_fraction", s.ce.elite_fraction},
                      {"samples_per_iter", s.ce.samples_per_iter},
                      {"iterations", s.ce.iterations},
                      {"init_sigma_fraction", s.ce.init_sigma_fraction}}},
                    {"bo",
                     {{"init_random_count", s.bo.init_random_count},
                      {"iterations", s.bo.iterations},
                      {"xi", s.bo.xi},
                      {"candidates", s.bo.candidates}}}};
  j["seeds"] = c.seeds;
  return j;
}

}  // namespace

GridWorld ExperimentConfig::world() const { return GridWorld(plan_dims, refine, cell_size); }

QuantileSpec ExperimentConfig::quantile_spec() const {
  if (quantile_family == "custom") return QuantileSpec(custom_fractions);
  return QuantileSpec::family(quantile_family);
}

std::size_t ExperimentConfig::start_index() const {
  const GridWorld w = world();
  Cell c{0, 0, 0};
  for (std::size_t a = 0; a < start.size(); ++a) c[a] = start[a];
  return w.plan_index(c);
}

ObjectiveConfig ExperimentConfig::objective_for(ObjectiveKind kind) const {
  ObjectiveConfig o;
  o.kind = kind;
  o.c_plan = kind == ObjectiveKind::quantile_change ? c_plan_quantile_change
             : kind == ObjectiveKind::quantile_se   ? c_plan_quantile_se
                                                    : 0.0;
  o.xi = xi;
  o.spec = quantile_spec();
  o.ei_denominator = ei_denominator;
  o.subsample = subsample;
  return o;
}

void ExperimentConfig::validate() const {
  try {
    const GridWorld w = world();
    if (start.size() != static_cast<std::size_t>(w.axes())) throw ConfigError("survey.start must have one entry per axis");
    Cell c{0, 0, 0};
    for (std::size_t a = 0; a < start.size(); ++a) c[a] = start[a];
    if (!w.plan_contains(c)) throw ConfigError("survey.start lies outside the plan grid");
    if (seed_count > w.measure_size()) throw ConfigError("survey.seed_count exceeds the measurable lattice");
    if (sensor.kind == SensorKind::camera && w.axes() != 2 && w.axes() != 3) throw ConfigError("camera needs 2 or 3 axes");
    (void)quantile_spec();
    sensor.validate();
    gp.validate();
    planner.validate();
    selection.validate();
    if (field.kind == FieldKind::synthetic) {
      field.hyperparams.validate();
    } else if (!std::filesystem::exists(field.path)) {
      throw ConfigError("field.path does not exist: " + field.path.string());
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (budget < 0) throw ConfigError("survey.budget must be >= 0");
  if (seeds.empty()) throw ConfigError("seeds must be nonempty");
  if (strategies.empty()) throw ConfigError("strategies must be nonempty");
  for (const auto& s : strategies) {
    if (std::find(strategy_names().begin(), strategy_names().end(), s) == strategy_names().end()) {
      throw ConfigError("unknown strategy '" + s + "'");
    }
  }
  for (const auto& m : selection_methods) {
    try {
      (void)selection_method_from_string(m);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (c_plan_quantile_change < 0 || c_plan_quantile_se < 0 || xi < 0) {
    throw ConfigError("objective constants must be >= 0");
  }
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ObjectReader top(root, "config");
  int version = 0;
  if (top.find("schema_version") == nullptr) throw ConfigError("config.schema_version is required");
  top.read("schema_version", version);
  if (version != kConfigSchemaVersion) throw ConfigError("unsupported schema_version " + std::to_string(version));

  ExperimentConfig c;
  top.read("name", c.name);
  section(top, "world", [&](ObjectReader& r) {
    r.read("plan_dims", c.plan_dims);
    c.refine.assign(c.plan_dims.size(), 1);
    r.read("refine", c.refine);
    r.read("cell_size", c.cell_size);
  });
  c.start.assign(c.plan_dims.size(), 0);

  section(top, "field", [&](ObjectReader& r) {
    std::string kind = "synthetic";
    r.read("kind", kind);
    if (kind == "synthetic") {
      c.field.kind = FieldKind::synthetic;
      r.read("seed", c.field.seed);
      r.read("lengthscale", c.field.hyperparams.lengthscale);
      r.read("signal_variance", c.field.hyperparams.signal_variance);
      r.read("prior_mean", c.field.hyperparams.prior_mean);
    } else if (kind == "raster") {
      c.field.kind = FieldKind::raster;
      c.field.units.clear();  // the raster header supplies units unless given here
      std::string path;
      r.read("path", path);
      if (path.empty()) throw ConfigError("field.path is required for raster fields");
      c.field.path = path;
    } else {
      throw ConfigError("field.kind must be synthetic or raster");
    }
    r.read("units", c.field.units);
  });

  section(top, "sensor", [&](ObjectReader& r) {
    std::string kind = "camera";
    r.read("kind", kind);
    if (kind == "camera") {
      c.sensor.kind = SensorKind::camera;
      r.read("width", c.sensor.footprint_width);
      r.read("height", c.sensor.footprint_height);
    } else if (kind == "point") {
      c.sensor.kind = SensorKind::point;
      r.read("samples", c.sensor.traverse_samples);
    } else {
      throw ConfigError("sensor.kind must be camera or point");
    }
  });

  section(top, "quantiles", [&](ObjectReader& r) {
    r.read("family", c.quantile_family);
    if (c.quantile_family == "custom") {
      r.read("fractions", c.custom_fractions);
    } else if (c.quantile_family != "deciles" && c.quantile_family != "quartiles" && c.quantile_family != "extrema") {
      throw ConfigError("quantiles.family must be deciles, quartiles, extrema or custom");
    }
  });
  c.selection.c_select = SelectionConfig::default_c_select(c.quantile_family);

  section(top, "gp", [&](ObjectReader& r) {
    r.read("lengthscale", c.gp.lengthscale);
    r.read("signal_variance", c.gp.signal_variance);
    r.read("noise_variance", c.gp.noise_variance);
  });

  section(top, "survey", [&](ObjectReader& r) {
    r.read("budget", c.budget);
    r.read_count("seed_count", c.seed_count);
    r.read("start", c.start);
  });

  top.read("strategies", c.strategies);

  section(top, "objective", [&](ObjectReader& r) {
    r.read("c_plan_quantile_change", c.c_plan_quantile_change);
    r.read("c_plan_quantile_se", c.c_plan_quantile_se);
    r.read("xi", c.xi);
    std::string denom = to_string(c.ei_denominator);
    r.read("ei_denominator", denom);
    try {
      c.ei_denominator = ei_denominator_from_string(denom);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    r.read_count("subsample", c.subsample);
  });

  section(top, "planner", [&](ObjectReader& r) {
    r.read("rollouts_per_step", c.planner.rollouts_per_step);
    r.read("max_depth", c.planner.max_depth);
    r.read("rollout_horizon", c.planner.rollout_horizon);
    r.read("gamma", c.planner.gamma);
    r.read("ucb_c", c.planner.ucb_c);
    r.read("multi_step", c.planner.multi_step);
    r.read("significance", c.planner.significance);
  });

  section(top, "selection", [&](ObjectReader& r) {
    r.read("methods", c.selection_methods);
    r.read("c_select", c.selection.c_select);
    section(r, "sa", [&](ObjectReader& s) {
      s.read("t_max", c.selection.sa.t_max);
      s.read("t_min", c.selection.sa.t_min);
      s.read("cooling_rate", c.selection.sa.cooling_rate);
      s.read("reset_interval", c.selection.sa.reset_interval);
      s.read("step_fraction", c.selection.sa.step_fraction);
    });
    section(r, "ce", [&](ObjectReader& s) {
      s.read("alpha", c.selection.ce.alpha);
      s.read("elite_fraction", c.selection.ce.elite_fraction);
      s.read("samples_per_iter", c.selection.ce.samples_per_iter);
      s.read("iterations", c.selection.ce.iterations);
      s.read("init_sigma_fraction", c.selection.ce.init_sigma_fraction);
    });
    section(r, "bo", [&](ObjectReader& s) {
      s.read("init_random_count", c.selection.bo.init_random_count);
      s.read("iterations", c.selection.bo.iterations);
      s.read("xi", c.selection.bo.xi);
      s.read("candidates", c.selection.bo.candidates);
    });
  });

  top.read("seeds", c.seeds);
  std::string out = c.output_dir.string();
  top.read("output_dir", out);
  c.output_dir = out;
  top.finish();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  ExperimentConfig c = parse_config(buf.str());
  if (c.field.kind == FieldKind::raster && c.field.path.is_relative()) {
    c.field.path = path.parent_path() / c.field.path;
  }
  c.validate();
  return c;
}

std::string dump_config(const ExperimentConfig& config) { return to_json(config, false).dump(2) + "\n"; }

std::string config_hash(const ExperimentConfig& config) {
  const std::string canonical = to_json(config, true).dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  if (name == "drone-small") {
    c.plan_dims = {20, 15};
    c.refine = {1, 1};
    c.field.hyperparams.lengthscale = 1.5;
    c.gp.lengthscale = 1.5;
    c.sensor = SensorModel::camera(8, 5);
    c.budget = 30;
    c.seed_count = 100;
    c.start = {0, 0};
    c.planner.rollouts_per_step = 300;
    c.planner.max_depth = 7;
    return c;
  }
  if (name == "auv-small") {
    c.plan_dims = {12, 14, 2};
    c.refine = {2, 2, 1};
    c.field.hyperparams.lengthscale = 3.0;
    c.gp.lengthscale = 3.0;
    c.sensor = SensorModel::point(5);
    c.budget = 200;
    c.seed_count = 50;
    c.start = {0, 0, 0};
    c.planner.rollouts_per_step = 130;
    c.planner.max_depth = 10;
    return c;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() { return {"drone-small", "auv-small"}; }

}  // namespace qipp
