#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "qipp/selection.hpp"
#include "qipp/survey.hpp"

using namespace qipp;

namespace {

struct Scenario {
  GridWorld world;
  GroundTruthField field;
  SurveyHistory history;
  Normalization norm;
  GpModel gp{GpHyperparams{}, 2};
  std::vector<double> target;

  Scenario(std::uint64_t seed, std::vector<int> dims = {8, 6}) : world(dims) {
    GpHyperparams hp;
    hp.lengthscale = 1.5;
    field = sample_gp_field(world, hp, seed);
    history = seed_measurements(field, world.measure_size() / 3);
    norm = Normalization::fit(history.values);
    gp = fit_history(world, history, norm, hp);
    const Eigen::VectorXd mu = gp.predict_mean(world.measure_points());
    target = estimate_quantiles(std::span<const double>(mu.data(), static_cast<std::size_t>(mu.size())),
                                QuantileSpec::deciles())
                 .values;
  }

  SelectionProblem problem() const { return SelectionProblem{world, history, gp, target}; }
};

SelectionConfig quick_config() {
  SelectionConfig c;
  c.ce.iterations = 30;
  c.bo.init_random_count = 15;
  c.bo.iterations = 15;
  c.bo.candidates = 500;
  return c;
}

}  // namespace

TEST_CASE("loss edge cases") {
  GpHyperparams hp;
  hp.noise_variance = 0.0;
  hp.lengthscale = 2.0;
  Eigen::MatrixXd x(2, 2);
  x << 0, 0, 3, 1;
  Eigen::VectorXd y(2);
  y << 0.5, -1.0;
  const GpModel gp = GpModel::condition(x, y, hp);
  const std::vector<double> exact{0.5, -1.0};
  CHECK(selection_loss(exact, x, gp, 15.0) < 1e-6);
  const std::vector<double> off{1.5, -1.0};
  CHECK(selection_loss(off, x, gp, 0.0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(selection_loss(off, x.topRows(1), gp, 1.0), std::invalid_argument);
}

TEST_CASE("property: loss matches a recomputation from predict outputs") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    Scenario s(static_cast<std::uint64_t>(trial));
    const Eigen::MatrixXd cand = oracle::random_points(rng, 9, 2, 5.0);
    const double c = 0.5 * trial;
    const Prediction p = s.gp.predict(cand);
    double sq = 0.0, var = 0.0;
    for (int i = 0; i < 9; ++i) {
      sq += (s.target[static_cast<std::size_t>(i)] - p.mean(i)) * (s.target[static_cast<std::size_t>(i)] - p.mean(i));
      var += p.variance(i);
    }
    CHECK(std::abs(selection_loss(s.target, cand, s.gp, c) - (std::sqrt(sq) + c * var)) < 1e-12);

    // Permuting targets and rows together leaves the loss alone.
    std::vector<int> perm{8, 3, 5, 0, 1, 7, 2, 6, 4};
    Eigen::MatrixXd pc(9, 2);
    std::vector<double> pt(9);
    for (int i = 0; i < 9; ++i) {
      pc.row(i) = cand.row(perm[static_cast<std::size_t>(i)]);
      pt[static_cast<std::size_t>(i)] = s.target[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    }
    CHECK(selection_loss(pt, pc, s.gp, c) == doctest::Approx(selection_loss(s.target, cand, s.gp, c)).epsilon(1e-12));
  }
}

TEST_CASE("best visited matches an exhaustive scan") {
  const GridWorld w({4, 4});
  GpHyperparams hp;
  hp.lengthscale = 1.5;
  SurveyHistory h;
  const std::vector<std::size_t> locs{5, 10, 3};
  const std::vector<double> vals{0.3, -0.8, 1.1};
  h.append(locs, vals);
  const GpModel gp = GpModel::condition(w.points_for(locs), Eigen::Map<const Eigen::VectorXd>(vals.data(), 3), hp);
  const Eigen::VectorXd mu = gp.predict_mean(w.points_for(locs));
  for (double t : {-2.0, -0.5, 0.0, 0.4, 0.9, 3.0}) {
    const std::vector<double> target{t};
    std::size_t arg = 0;
    for (std::size_t i = 1; i < 3; ++i) {
      if (std::abs(mu(static_cast<Eigen::Index>(i)) - t) < std::abs(mu(static_cast<Eigen::Index>(arg)) - t)) arg = i;
    }
    const auto r = best_visited(h, w, target, gp, 15.0);
    CHECK(r.locations.row(0) == w.points_for(std::vector<std::size_t>{locs[arg]}).row(0));
    CHECK(r.method == SelectionMethod::bv);
  }

  // An exact value match wins, and one location can serve several fractions.
  const std::vector<double> twice{mu(1), mu(1)};
  const auto r = best_visited(h, w, twice, gp, 15.0);
  CHECK(r.locations.row(0) == r.locations.row(1));
  CHECK(r.locations.row(0) == w.points_for(std::vector<std::size_t>{10}).row(0));

  // Ties go to the earliest measurement.
  SurveyHistory dup;
  const std::vector<std::size_t> same{7, 2, 7};
  dup.append(same, std::vector<double>{0.0, 0.0, 0.0});
  const GpModel flat(hp, 2);
  CHECK(best_visited(dup, w, std::vector<double>{0.0}, flat, 1.0).locations.row(0) ==
        w.points_for(std::vector<std::size_t>{7}).row(0));

  CHECK_THROWS_AS(best_visited(SurveyHistory{}, w, twice, gp, 1.0), EmptyHistoryError);
}

TEST_CASE("every optimizer is at least as good as best visited") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Scenario s(seed);
    const SelectionConfig cfg = quick_config();
    const SelectionResult bv = best_visited(s.history, s.world, s.target, s.gp, cfg.c_select);
    const Box hull = selection_box(s.world, s.target.size());
    for (SelectionMethod m : {SelectionMethod::sa, SelectionMethod::ce, SelectionMethod::bo}) {
      std::mt19937_64 rng(seed);
      const SelectionResult r = select_locations(m, s.problem(), cfg, rng);
      CHECK(r.method == m);
      CHECK(r.loss <= bv.loss);
      CHECK(r.locations.rows() == static_cast<Eigen::Index>(s.target.size()));
      CHECK(hull.contains(flatten_locations(r.locations)));
      CHECK(r.loss == selection_loss(s.target, r.locations, s.gp, cfg.c_select));
      CHECK(r.predicted.size() == s.target.size());
    }
  }
}

TEST_CASE("BO evaluation count and selector determinism") {
  Scenario s(9);
  const SelectionConfig cfg = quick_config();
  std::mt19937_64 rng(1);
  const auto bo = bayesian_opt_select(s.problem(), cfg, rng);
  CHECK(bo.evaluations == cfg.bo.init_random_count + 1 + cfg.bo.iterations);
  for (SelectionMethod m : {SelectionMethod::sa, SelectionMethod::ce, SelectionMethod::bo}) {
    std::mt19937_64 a(5), b(5);
    const auto ra = select_locations(m, s.problem(), cfg, a);
    const auto rb = select_locations(m, s.problem(), cfg, b);
    CHECK(ra.locations == rb.locations);
    CHECK(ra.loss == rb.loss);
  }
}

TEST_CASE("3D worlds select inside the hull") {
  Scenario s(3, {5, 4, 2});
  std::mt19937_64 rng(2);
  const auto r = simulated_annealing_select(s.problem(), quick_config(), rng);
  CHECK(r.locations.cols() == 3);
  CHECK(selection_box(s.world, s.target.size()).contains(flatten_locations(r.locations)));
}

TEST_CASE("flatten round trip, box and method names") {
  Eigen::MatrixXd m(3, 2);
  m << 1, 2, 3, 4, 5, 6;
  const Eigen::VectorXd x = flatten_locations(m);
  CHECK(x(2) == 3.0);
  CHECK(unflatten_locations(x, 2) == m);
  CHECK_THROWS(unflatten_locations(x, 4));
  const Box b = selection_box(GridWorld({4, 3}, {2, 1}), 2);
  CHECK(b.dims() == 4);
  CHECK(b.upper(0) == 6.0);
  CHECK(b.upper(3) == 2.0);
  for (auto k : {SelectionMethod::bv, SelectionMethod::sa, SelectionMethod::ce, SelectionMethod::bo}) {
    CHECK(selection_method_from_string(to_string(k)) == k);
  }
  CHECK(SelectionConfig::default_c_select("quartiles") == 200.0);
  CHECK(SelectionConfig::default_c_select("extrema") == 30.0);
  CHECK(SelectionConfig::default_c_select("deciles") == 15.0);
}
