#include "qipp/export.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace qipp {
namespace {

using nlohmann::json;

constexpr SelectionMethod kMethods[] = {SelectionMethod::bv, SelectionMethod::sa, SelectionMethod::ce,
                                        SelectionMethod::bo};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ExportError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ExportError("cannot write " + path.string());
  out << text;
  if (!out) throw ExportError("write failed for " + path.string());
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ExportError("cannot parse number '" + s + "'");
  return v;
}

std::optional<double> parse_optional(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_number(s);
}

std::string optional_cell(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

std::vector<std::string> csv_rows(const std::filesystem::path& path, const std::string& header) {
  std::ifstream in(path);
  if (!in) throw ExportError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header) throw ExportError("unexpected header in " + path.string());
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(line);
  }
  return rows;
}

std::string finals_header() {
  std::string h = "trial_id,config_hash,seed,strategy,status,steps,initial_rmse,final_rmse";
  for (SelectionMethod m : kMethods) {
    const std::string n = to_string(m);
    h += "," + n + "_rmse," + n + "_rmse_mean," + n + "_loss";
  }
  return h;
}

constexpr const char* kTraceHeader = "trial_id,config_hash,seed,strategy,step,rmse";

}  // namespace

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string record_to_json(const TrialRecord& r) {
  json j;
  j["trial_id"] = r.trial_id;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["strategy"] = r.strategy;
  j["status"] = r.ok ? "ok" : "error";
  if (!r.ok) j["error"] = r.error;
  j["steps"] = r.steps;
  j["measurements"] = r.measurements;
  j["initial_rmse"] = r.initial_rmse;
  j["rmse_trace"] = r.rmse_trace;
  j["truth"] = r.truth;
  j["estimate"] = r.estimate;
  json sel = json::array();
  for (const SelectionRecord& s : r.selections) {
    sel.push_back({{"method", to_string(s.method)},
                   {"locations", matrix_to_json(s.locations)},
                   {"predicted", s.predicted},
                   {"loss", s.loss},
                   {"evaluations", s.evaluations},
                   {"rmse", s.rmse},
                   {"rmse_mean", s.rmse_mean}});
  }
  j["selections"] = std::move(sel);
  return j.dump(2) + "\n";
}

TrialRecord record_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    TrialRecord r;
    r.trial_id = j.at("trial_id").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.strategy = j.at("strategy").get<std::string>();
    r.ok = j.at("status").get<std::string>() == "ok";
    if (!r.ok) r.error = j.at("error").get<std::string>();
    r.steps = j.at("steps").get<int>();
    r.measurements = j.at("measurements").get<std::size_t>();
    r.initial_rmse = j.at("initial_rmse").get<double>();
    r.rmse_trace = j.at("rmse_trace").get<std::vector<double>>();
    r.truth = j.at("truth").get<std::vector<double>>();
    r.estimate = j.at("estimate").get<std::vector<double>>();
    for (const json& s : j.at("selections")) {
      SelectionRecord sr;
      sr.method = selection_method_from_string(s.at("method").get<std::string>());
      sr.locations = matrix_from_json(s.at("locations"));
      sr.predicted = s.at("predicted").get<std::vector<double>>();
      sr.loss = s.at("loss").get<double>();
      sr.evaluations = s.at("evaluations").get<int>();
      sr.rmse = s.at("rmse").get<double>();
      sr.rmse_mean = s.at("rmse_mean").get<double>();
      r.selections.push_back(std::move(sr));
    }
    return r;
  } catch (const json::exception& e) {
    throw ExportError(std::string("malformed record: ") + e.what());
  }
}

std::string history_to_json(const TrialHistory& h) {
  json actions = json::array();
  for (const Action& a : h.history.actions) actions.push_back(to_string(a));
  const json j = {{"locations", h.history.locations},
                  {"values", h.history.values},
                  {"actions", actions},
                  {"seed_count", h.history.seed_count},
                  {"steps", h.history.steps},
                  {"normalization", {{"mean", h.normalization.mean}, {"scale", h.normalization.scale}}}};
  return j.dump() + "\n";
}

TrialHistory history_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    TrialHistory h;
    h.history.locations = j.at("locations").get<std::vector<std::size_t>>();
    h.history.values = j.at("values").get<std::vector<double>>();
    if (h.history.locations.size() != h.history.values.size()) throw ExportError("history: misaligned arrays");
    for (const json& a : j.at("actions")) {
      const std::string s = a.get<std::string>();
      if (s.size() != 2 || (s[0] != '+' && s[0] != '-') || s[1] < 'x' || s[1] > 'z') {
        throw ExportError("history: bad action '" + s + "'");
      }
      h.history.actions.push_back(Action{s[1] - 'x', s[0] == '+' ? 1 : -1});
    }
    h.history.seed_count = j.at("seed_count").get<std::size_t>();
    h.history.steps = j.at("steps").get<int>();
    h.normalization.mean = j.at("normalization").at("mean").get<double>();
    h.normalization.scale = j.at("normalization").at("scale").get<double>();
    return h;
  } catch (const json::exception& e) {
    throw ExportError(std::string("malformed history: ") + e.what());
  }
}

std::filesystem::path record_path(const std::filesystem::path& dir, const std::string& trial_id) {
  return dir / (trial_id + ".json");
}

void write_record(const std::filesystem::path& dir, const TrialRecord& record) {
  write_file(record_path(dir, record.trial_id), record_to_json(record));
}

void write_timing(const std::filesystem::path& dir, const TrialRecord& record) {
  const json j = {{"trial_id", record.trial_id},
                  {"planning_seconds", record.timings.planning},
                  {"gp_seconds", record.timings.gp},
                  {"selection_seconds", record.timings.selection},
                  {"total_seconds", record.timings.total}};
  write_file(dir / (record.trial_id + ".timing.json"), j.dump(2) + "\n");
}

void write_history(const std::filesystem::path& dir, const std::string& trial_id, const TrialHistory& history) {
  write_file(dir / (trial_id + ".history.json"), history_to_json(history));
}

TrialRecord read_record(const std::filesystem::path& path) { return record_from_json(read_file(path)); }
TrialHistory read_history(const std::filesystem::path& path) { return history_from_json(read_file(path)); }

std::vector<TrialRecord> read_records(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ExportError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.path().extension() != ".json") continue;
    if (name == "summary.json" || name == "config.json") continue;
    if (name.ends_with(".timing.json") || name.ends_with(".history.json")) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<TrialRecord> out;
  for (const auto& f : files) out.push_back(read_record(f));
  return out;
}

void write_summary(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
  json arr = json::array();
  for (const SummaryRow& r : rows) {
    arr.push_back({{"strategy", r.strategy},
                   {"metric", r.metric},
                   {"count", r.spread.count},
                   {"q1", r.spread.q1},
                   {"median", r.spread.median},
                   {"q3", r.spread.q3}});
  }
  write_file(path, json{{"summary", arr}}.dump(2) + "\n");
}

void export_traces(const std::filesystem::path& path, const std::vector<TrialRecord>& records) {
  std::string out = std::string(kTraceHeader) + "\n";
  for (const TrialRecord& r : records) {
    for (std::size_t i = 0; i < r.rmse_trace.size(); ++i) {
      out += r.trial_id + "," + r.config_hash + "," + std::to_string(r.seed) + "," + r.strategy + "," +
             std::to_string(i + 1) + "," + format_number(r.rmse_trace[i]) + "\n";
    }
  }
  write_file(path, out);
}

void export_finals(const std::filesystem::path& path, const std::vector<TrialRecord>& records) {
  std::string out = finals_header() + "\n";
  for (const TrialRecord& r : records) {
    out += r.trial_id + "," + r.config_hash + "," + std::to_string(r.seed) + "," + r.strategy + "," +
           (r.ok ? "ok" : "error") + "," + std::to_string(r.steps);
    if (r.ok) {
      out += "," + format_number(r.initial_rmse) + "," +
             format_number(r.rmse_trace.empty() ? r.initial_rmse : r.rmse_trace.back());
    } else {
      out += ",,";
    }
    for (SelectionMethod m : kMethods) {
      const auto it = std::find_if(r.selections.begin(), r.selections.end(),
                                   [&](const SelectionRecord& s) { return s.method == m; });
      if (it == r.selections.end()) {
        out += ",,,";
      } else {
        out += "," + format_number(it->rmse) + "," + format_number(it->rmse_mean) + "," + format_number(it->loss);
      }
    }
    out += "\n";
  }
  write_file(path, out);
}

std::vector<TraceRow> load_traces(const std::filesystem::path& path) {
  std::vector<TraceRow> rows;
  for (const std::string& line : csv_rows(path, kTraceHeader)) {
    const auto cells = split_csv(line);
    if (cells.size() != 6) throw ExportError("traces: wrong column count in '" + line + "'");
    TraceRow t;
    t.trial_id = cells[0];
    t.config_hash = cells[1];
    t.seed = std::stoull(cells[2]);
    t.strategy = cells[3];
    t.step = std::stoi(cells[4]);
    t.rmse = parse_number(cells[5]);
    rows.push_back(std::move(t));
  }
  return rows;
}

std::vector<FinalRow> load_finals(const std::filesystem::path& path) {
  std::vector<FinalRow> rows;
  for (const std::string& line : csv_rows(path, finals_header())) {
    const auto cells = split_csv(line);
    if (cells.size() != 8 + 3 * std::size(kMethods)) throw ExportError("finals: wrong column count in '" + line + "'");
    FinalRow f;
    f.trial_id = cells[0];
    f.config_hash = cells[1];
    f.seed = std::stoull(cells[2]);
    f.strategy = cells[3];
    f.status = cells[4];
    f.steps = std::stoi(cells[5]);
    f.initial_rmse = parse_optional(cells[6]);
    f.final_rmse = parse_optional(cells[7]);
    for (std::size_t m = 0; m < std::size(kMethods); ++m) {
      f.rmse[m] = parse_optional(cells[8 + 3 * m]);
      f.rmse_mean[m] = parse_optional(cells[9 + 3 * m]);
      f.loss[m] = parse_optional(cells[10 + 3 * m]);
    }
    rows.push_back(std::move(f));
  }
  return rows;
}

}  // namespace qipp
