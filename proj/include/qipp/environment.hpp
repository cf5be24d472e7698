#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qipp/gp.hpp"
#include "qipp/grid.hpp"

namespace qipp {

/// Raster file that cannot be parsed or does not fit the world.
class MalformedFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ground-truth scalar value for every measurable location.
struct GroundTruthField {
  GridWorld world;
  Eigen::VectorXd values;  // indexed by X# flat index
  std::string units;

  double at(std::size_t measure_index) const { return values(static_cast<Eigen::Index>(measure_index)); }
};

enum class SensorKind { point, camera };

struct SensorModel {
  SensorKind kind = SensorKind::camera;
  int footprint_width = 8;   // camera: X# cells along x
  int footprint_height = 5;  // camera: X# cells along y
  int traverse_samples = 5;  // point: samples per move, endpoints included

  static SensorModel camera(int width, int height);
  static SensorModel point(int samples);
  void validate() const;
};

/// Measured X# locations and values in acquisition order.
struct SurveyHistory {
  std::vector<std::size_t> locations;  // X# flat indices
  std::vector<double> values;
  std::vector<Action> actions;
  std::size_t seed_count = 0;  // leading entries recorded before the survey
  int steps = 0;

  void append(std::span<const std::size_t> locs, std::span<const double> vals);
};

struct Measurement {
  std::vector<std::size_t> locations;
  std::vector<double> values;
};

/// One draw from the GP prior over X#, deterministic per seed.
GroundTruthField sample_gp_field(const GridWorld& world, const GpHyperparams& hp, std::uint64_t seed,
                                 std::string units = "normalized");

/// Plain-text raster:
///
///   qipp-raster 1
///   dims <nx> <ny> [<nz>]
///   units <free text to end of line>
///   <nx*ny*nz numbers, x fastest>
///
/// `dims` are X# extents.
GroundTruthField load_raster(const std::filesystem::path& path, const GridWorld& world);
void save_raster(const std::filesystem::path& path, const GroundTruthField& field);

/// X# indices sensed when the robot arrives at `to` (camera) or moves from
/// `from` to `to` (point sensor).
std::vector<std::size_t> sensed_locations(const GridWorld& world, const SensorModel& sensor,
                                          const RobotState& from, const RobotState& to);

/// Noise-free ground-truth reads at the sensed locations.
Measurement measure(const GroundTruthField& field, const SensorModel& sensor, const RobotState& from,
                    const RobotState& to);

/// `count` distinct X# locations on an evenly spaced lattice.
std::vector<std::size_t> seed_lattice(const GridWorld& world, std::size_t count);

SurveyHistory seed_measurements(const GroundTruthField& field, std::size_t count);

}  // namespace qipp
