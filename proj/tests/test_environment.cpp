#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "qipp/environment.hpp"

using namespace qipp;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "qipp_test_environment";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("synthetic fields are deterministic per seed") {
  const GridWorld w({10, 8});
  GpHyperparams hp;
  hp.lengthscale = 2.0;
  const auto a = sample_gp_field(w, hp, 42);
  const auto b = sample_gp_field(w, hp, 42);
  const auto c = sample_gp_field(w, hp, 43);
  CHECK(a.values.size() == 80);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  CHECK(a.values.allFinite());
}

TEST_CASE("very long lengthscales give nearly constant fields") {
  const GridWorld w({10, 8});
  GpHyperparams hp;
  hp.lengthscale = 1e4;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto f = sample_gp_field(w, hp, seed);
    const double mean = f.values.mean();
    const double var = (f.values.array() - mean).square().sum() / static_cast<double>(f.values.size() - 1);
    CHECK(var < 0.01 * hp.signal_variance);
  }
}

TEST_CASE("field sample variance is near the signal variance for short lengthscales") {
  const GridWorld w({30, 30});
  GpHyperparams hp;
  hp.lengthscale = 1.0;
  hp.signal_variance = 2.0;
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto f = sample_gp_field(w, hp, seed);
    const double mean = f.values.mean();
    total += (f.values.array() - mean).square().sum() / static_cast<double>(f.values.size() - 1);
  }
  CHECK(total / 5.0 == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("raster lookups, errors and round trip") {
  const GridWorld w({2, 2});
  const auto path = temp_file("two.raster");
  write_text(path, "qipp-raster 1\ndims 2 2\nunits deg C\n1 2\n3 4\n");
  const auto f = load_raster(path, w);
  CHECK(f.units == "deg C");
  CHECK(f.at(w.measure_index({0, 0, 0})) == 1.0);
  CHECK(f.at(w.measure_index({1, 0, 0})) == 2.0);
  CHECK(f.at(w.measure_index({0, 1, 0})) == 3.0);
  CHECK(f.at(w.measure_index({1, 1, 0})) == 4.0);

  write_text(path, "qipp-raster 1\ndims 2 2\nunits x\n1 2 3\n");
  CHECK_THROWS_AS(load_raster(path, w), MalformedFileError);
  write_text(path, "qipp-raster 1\ndims 2 2\nunits x\n1 2 3 nan\n");
  CHECK_THROWS_AS(load_raster(path, w), MalformedFileError);
  write_text(path, "qipp-raster 1\ndims 2 2\nunits x\n1 2 3 four\n");
  CHECK_THROWS_AS(load_raster(path, w), MalformedFileError);
  write_text(path, "raster 1\ndims 2 2\nunits x\n1 2 3 4\n");
  CHECK_THROWS_AS(load_raster(path, w), MalformedFileError);
  write_text(path, "qipp-raster 1\ndims 3 2\nunits x\n1 2 3 4 5 6\n");
  CHECK_THROWS_AS(load_raster(path, w), MalformedFileError);
  CHECK_THROWS_AS(load_raster(temp_file("missing.raster"), w), MalformedFileError);

  GpHyperparams hp;
  hp.lengthscale = 1.7;
  const GridWorld w3({4, 3, 2}, {2, 1, 1});
  const auto field = sample_gp_field(w3, hp, 5, "metres");
  const auto p3 = temp_file("three.raster");
  save_raster(p3, field);
  const auto back = load_raster(p3, w3);
  CHECK(back.values == field.values);
  CHECK(back.units == "metres");
}

TEST_CASE("camera footprint") {
  const GridWorld w({20, 15});
  const auto field = sample_gp_field(w, GpHyperparams{}, 1);
  const SensorModel cam = SensorModel::camera(8, 5);
  const RobotState centre{w.plan_index({10, 7, 0}), 0, 1};
  const auto m = measure(field, cam, centre, centre);
  CHECK(m.locations.size() == 40);
  CHECK(std::set<std::size_t>(m.locations.begin(), m.locations.end()).size() == 40);
  for (std::size_t i = 0; i < m.locations.size(); ++i) CHECK(m.values[i] == field.at(m.locations[i]));

  const RobotState corner{w.plan_index({0, 0, 0}), 0, 1};
  const auto c = measure(field, cam, corner, corner);
  CHECK(c.locations.size() < 40);
  CHECK(!c.locations.empty());
  for (std::size_t idx : c.locations) CHECK(idx < w.measure_size());
}

TEST_CASE("property: camera clipping count") {
  const GridWorld w({9, 7});
  const SensorModel cam = SensorModel::camera(4, 3);
  for (std::size_t p = 0; p < w.plan_size(); ++p) {
    const RobotState s{p, 0, 1};
    const auto locs = sensed_locations(w, cam, s, s);
    const Cell c = w.plan_cell(p);
    const bool interior = c[0] - 2 >= 0 && c[0] + 1 <= 8 && c[1] - 1 >= 0 && c[1] + 1 <= 6;
    CHECK(locs.size() <= 12);
    CHECK((locs.size() == 12) == interior);
  }
}

TEST_CASE("point sensor samples a move evenly, endpoints included") {
  const GridWorld w({5, 5}, {4, 4});
  const auto field = sample_gp_field(w, GpHyperparams{}, 2);
  const SensorModel pt = SensorModel::point(5);
  const RobotState from{w.plan_index({1, 2, 0}), 0, 3};
  const RobotState to = apply_action(from, Action{0, 1}, w);
  const auto m = measure(field, pt, from, to);
  REQUIRE(m.locations.size() == 5);
  for (int s = 0; s < 5; ++s) {
    CHECK(m.locations[static_cast<std::size_t>(s)] == w.measure_index({4 + s, 8, 0}));
    CHECK(m.values[static_cast<std::size_t>(s)] == field.at(m.locations[static_cast<std::size_t>(s)]));
  }
  // Unrefined grids snap onto the two endpoints and keep the duplicates.
  const GridWorld coarse({5, 5});
  const auto locs = sensed_locations(coarse, pt, RobotState{0, 0, 1}, RobotState{1, 1, 1});
  CHECK(locs.size() == 5);
  CHECK(locs.front() == 0);
  CHECK(locs.back() == 1);
}

TEST_CASE("sensor validation") {
  CHECK_THROWS(SensorModel::camera(0, 5));
  CHECK_THROWS(SensorModel::point(0));
}

TEST_CASE("seed measurements") {
  const GridWorld drone({20, 15});
  const auto field = sample_gp_field(drone, GpHyperparams{}, 3);
  const auto h = seed_measurements(field, 100);
  CHECK(h.locations.size() == 100);
  CHECK(h.seed_count == 100);
  CHECK(std::set<std::size_t>(h.locations.begin(), h.locations.end()).size() == 100);
  for (std::size_t i = 0; i < h.locations.size(); ++i) CHECK(h.values[i] == field.at(h.locations[i]));

  const auto all = seed_lattice(drone, drone.measure_size());
  CHECK(std::set<std::size_t>(all.begin(), all.end()).size() == drone.measure_size());
  CHECK_THROWS_AS(seed_lattice(drone, drone.measure_size() + 1), std::invalid_argument);

  const GridWorld auv({12, 14, 2}, {2, 2, 1});
  const auto s = seed_lattice(auv, 50);
  CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == 50);

  for (std::size_t count = 1; count <= 60; ++count) {
    const GridWorld small({7, 6});
    const auto l = seed_lattice(small, std::min<std::size_t>(count, small.measure_size()));
    CHECK(std::set<std::size_t>(l.begin(), l.end()).size() == l.size());
  }
}
