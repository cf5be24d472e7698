#include "qipp/environment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>

#include "qipp/linalg.hpp"

namespace qipp {
namespace {

constexpr const char* kRasterMagic = "qipp-raster";

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token) {
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw MalformedFileError("raster: cannot parse value '" + token + "'");
  }
  return v;
}

}  // namespace

SensorModel SensorModel::camera(int width, int height) {
  SensorModel s;
  s.kind = SensorKind::camera;
  s.footprint_width = width;
  s.footprint_height = height;
  s.validate();
  return s;
}

SensorModel SensorModel::point(int samples) {
  SensorModel s;
  s.kind = SensorKind::point;
  s.traverse_samples = samples;
  s.validate();
  return s;
}

void SensorModel::validate() const {
  if (kind == SensorKind::camera && (footprint_width < 1 || footprint_height < 1)) {
    throw std::invalid_argument("SensorModel: camera footprint must be nonempty");
  }
  if (kind == SensorKind::point && traverse_samples < 1) {
    throw std::invalid_argument("SensorModel: point sensor needs at least one sample");
  }
}

void SurveyHistory::append(std::span<const std::size_t> locs, std::span<const double> vals) {
  if (locs.size() != vals.size()) throw std::invalid_argument("SurveyHistory: misaligned measurement");
  locations.insert(locations.end(), locs.begin(), locs.end());
  values.insert(values.end(), vals.begin(), vals.end());
}

GroundTruthField sample_gp_field(const GridWorld& world, const GpHyperparams& hp, std::uint64_t seed,
                                 std::string units) {
  hp.validate();
  const Eigen::MatrixXd gram = kernel_matrix(world.measure_points(), world.measure_points(), hp);
  const auto n = static_cast<Eigen::Index>(world.measure_size());

  Eigen::MatrixXd lower;
  bool ok = false;
  for (double jitter : kJitterLadder) {
    Eigen::MatrixXd a = gram;
    a.diagonal().array() += jitter * hp.signal_variance;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
      lower = llt.matrixL();
      if (lower.allFinite()) {
        ok = true;
        break;
      }
    }
  }
  if (!ok) throw ConditioningError("sample_gp_field: prior covariance not factorizable");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);

  GroundTruthField field;
  field.world = world;
  field.values = (lower.triangularView<Eigen::Lower>() * z).array() + hp.prior_mean;
  field.units = std::move(units);
  return field;
}

GroundTruthField load_raster(const std::filesystem::path& path, const GridWorld& world) {
  std::ifstream in(path);
  if (!in) throw MalformedFileError("raster: cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw MalformedFileError("raster: empty file");
  {
    std::istringstream head(line);
    std::string magic;
    int version = 0;
    if (!(head >> magic >> version) || magic != kRasterMagic || version != 1) {
      throw MalformedFileError("raster: bad header line '" + line + "'");
    }
  }

  std::vector<int> dims;
  if (!std::getline(in, line)) throw MalformedFileError("raster: missing dims line");
  {
    std::istringstream d(line);
    std::string key;
    d >> key;
    if (key != "dims") throw MalformedFileError("raster: expected dims line");
    int v = 0;
    while (d >> v) dims.push_back(v);
    if (!d.eof()) throw MalformedFileError("raster: bad dims line");
  }
  if (dims.size() < 2 || dims.size() > kMaxAxes) throw MalformedFileError("raster: dims must have 2 or 3 axes");

  if (!std::getline(in, line) || line.rfind("units", 0) != 0) {
    throw MalformedFileError("raster: missing units line");
  }
  std::string units = line.size() > 6 ? line.substr(6) : std::string();

  std::size_t expected = 1;
  for (int d : dims) {
    if (d < 1) throw MalformedFileError("raster: dims must be positive");
    expected *= static_cast<std::size_t>(d);
  }

  std::vector<double> payload;
  std::string token;
  while (in >> token) payload.push_back(parse_double(token));
  if (payload.size() != expected) {
    throw MalformedFileError("raster: header declares " + std::to_string(expected) + " values, payload has " +
                             std::to_string(payload.size()));
  }
  if (dims != world.measure_dims()) {
    throw MalformedFileError("raster: dims do not match the world's measurable lattice");
  }
  for (double v : payload) {
    if (!std::isfinite(v)) throw MalformedFileError("raster: non-finite value");
  }

  GroundTruthField field;
  field.world = world;
  field.values = Eigen::Map<const Eigen::VectorXd>(payload.data(), static_cast<Eigen::Index>(payload.size()));
  field.units = std::move(units);
  return field;
}

void save_raster(const std::filesystem::path& path, const GroundTruthField& field) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("raster: cannot write " + path.string());
  out << kRasterMagic << " 1\n" << "dims";
  for (int d : field.world.measure_dims()) out << ' ' << d;
  out << "\nunits " << field.units << '\n';
  const int row = field.world.measure_dims()[0];
  for (Eigen::Index i = 0; i < field.values.size(); ++i) {
    out << format_double(field.values(i)) << (((i + 1) % row == 0) ? '\n' : ' ');
  }
  if (!out) throw std::runtime_error("raster: write failed for " + path.string());
}

std::vector<std::size_t> sensed_locations(const GridWorld& world, const SensorModel& sensor,
                                          const RobotState& from, const RobotState& to) {
  const Cell to_plan = world.plan_cell(to.position);
  Cell center{0, 0, 0};
  for (int axis = 0; axis < world.axes(); ++axis) center[axis] = to_plan[axis] * world.refine()[axis];

  std::vector<std::size_t> out;
  if (sensor.kind == SensorKind::camera) {
    const int x0 = center[0] - sensor.footprint_width / 2;
    const int y0 = center[1] - sensor.footprint_height / 2;
    out.reserve(static_cast<std::size_t>(sensor.footprint_width * sensor.footprint_height));
    for (int dy = 0; dy < sensor.footprint_height; ++dy) {
      for (int dx = 0; dx < sensor.footprint_width; ++dx) {
        Cell c = center;
        c[0] = x0 + dx;
        c[1] = y0 + dy;
        if (world.measure_contains(c)) out.push_back(world.measure_index(c));
      }
    }
    return out;
  }

  const Cell from_plan = world.plan_cell(from.position);
  const int samples = sensor.traverse_samples;
  out.reserve(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    const double t = samples == 1 ? 1.0 : static_cast<double>(s) / (samples - 1);
    std::vector<double> coords(static_cast<std::size_t>(world.axes()));
    for (int axis = 0; axis < world.axes(); ++axis) {
      const double a = from_plan[axis] * world.refine()[axis];
      const double b = to_plan[axis] * world.refine()[axis];
      coords[static_cast<std::size_t>(axis)] = a + t * (b - a);
    }
    out.push_back(world.nearest_measure_index(coords));
  }
  return out;
}

Measurement measure(const GroundTruthField& field, const SensorModel& sensor, const RobotState& from,
                    const RobotState& to) {
  Measurement m;
  m.locations = sensed_locations(field.world, sensor, from, to);
  m.values.reserve(m.locations.size());
  for (std::size_t idx : m.locations) m.values.push_back(field.at(idx));
  return m;
}

std::vector<std::size_t> seed_lattice(const GridWorld& world, std::size_t count) {
  const std::size_t total = world.measure_size();
  if (count > total) throw std::invalid_argument("seed_lattice: more seeds than measurable locations");
  if (count == 0) return {};

  const auto& dims = world.measure_dims();
  const int axes = world.axes();
  // Per-axis counts proportional to extent, grown until the lattice holds
  // at least `count` points.
  const double scale = std::pow(static_cast<double>(count) / static_cast<double>(total), 1.0 / axes);
  std::vector<int> per_axis(static_cast<std::size_t>(axes));
  for (int a = 0; a < axes; ++a) {
    per_axis[a] = std::clamp(static_cast<int>(std::floor(dims[a] * scale)), 1, dims[a]);
  }
  auto lattice_size = [&] {
    std::size_t p = 1;
    for (int c : per_axis) p *= static_cast<std::size_t>(c);
    return p;
  };
  while (lattice_size() < count) {
    int grow = -1;
    double best_ratio = 0.0;
    for (int a = 0; a < axes; ++a) {
      if (per_axis[a] >= dims[a]) continue;
      const double ratio = static_cast<double>(dims[a]) / per_axis[a];
      if (ratio > best_ratio) {
        best_ratio = ratio;
        grow = a;
      }
    }
    per_axis[grow] += 1;
  }

  auto axis_position = [&](int axis, int j) {
    if (per_axis[axis] == 1) return (dims[axis] - 1) / 2;
    return static_cast<int>(std::lround(static_cast<double>(j) * (dims[axis] - 1) / (per_axis[axis] - 1)));
  };

  const std::size_t lattice = lattice_size();
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t flat = (k * lattice) / count;
    Cell c{0, 0, 0};
    for (int a = 0; a < axes; ++a) {
      c[a] = axis_position(a, static_cast<int>(flat % static_cast<std::size_t>(per_axis[a])));
      flat /= static_cast<std::size_t>(per_axis[a]);
    }
    out.push_back(world.measure_index(c));
  }
  return out;
}

SurveyHistory seed_measurements(const GroundTruthField& field, std::size_t count) {
  SurveyHistory history;
  const std::vector<std::size_t> locs = seed_lattice(field.world, count);
  std::vector<double> vals;
  vals.reserve(locs.size());
  for (std::size_t idx : locs) vals.push_back(field.at(idx));
  history.append(locs, vals);
  history.seed_count = locs.size();
  return history;
}

}  // namespace qipp
