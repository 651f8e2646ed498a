#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Geometry>

#include "oracles.hpp"
#include "quadstc/harness.hpp"

using namespace quadstc;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::VectorXd;

namespace {

NonconvexProblem hoop_problem(const Vector3d& center, const Vector3d& normal) {
  HoopSpec h;
  h.center_schedule = {{0.0, center}};
  h.normal = normal.normalized();
  BoundaryConditions bc;
  bc.initial_positions = {Vector3d::Zero()};
  bc.final_positions = {Vector3d(0, 0, 6)};
  return assemble_problem(ScenarioKind::Hoop, h, std::nullopt, bc, QuadModel{}, ControlSetParams{}, 2);
}

// Straight constant-velocity flight from a to b (hover thrust cancels gravity).
Trajectory straight(const Vector3d& a, const Vector3d& b, double t_f, double weight) {
  Trajectory t;
  t.t_f = t_f;
  t.states.resize(6, 2);
  const Vector3d v = (b - a) / t_f;
  t.states.col(0) << a, v;
  t.states.col(1) << b, v;
  t.controls = Vector3d(weight, 0, 0).replicate(1, 2);
  t.thrust_bounds = Eigen::MatrixXd::Constant(1, 2, weight);
  t.slacks.resize(0, 2);
  return t;
}

NonconvexProblem beam_problem(const std::vector<Vector2d>& obstacles) {
  BeamSpec b;
  b.obstacles = obstacles;
  BoundaryConditions bc;
  bc.initial_positions = {Vector2d(-0.5, 0), Vector2d(0.5, 0)};
  bc.final_positions = {Vector2d(-0.5, 5), Vector2d(0.5, 5)};
  bc.v_max = 3.0;
  QuadModel m;
  m.spatial_dim = 2;
  ControlSetParams c;
  c.altitude_hold = true;
  return assemble_problem(ScenarioKind::Beam, std::nullopt, b, bc, m, c, 2);
}

// Two vehicles holding still at r1, r2 (zero horizontal thrust).
Trajectory parked(const Vector2d& r1, const Vector2d& r2) {
  Trajectory t;
  t.t_f = 1.0;
  t.states = Eigen::MatrixXd::Zero(8, 2);
  for (int k = 0; k < 2; ++k) {
    t.states.col(k).segment<2>(0) = r1;
    t.states.col(k).segment<2>(4) = r2;
  }
  t.controls = Eigen::MatrixXd::Zero(4, 2);
  t.thrust_bounds = Eigen::MatrixXd::Constant(2, 2, 3.4335);
  t.slacks = Eigen::MatrixXd::Zero(2, 2);
  return t;
}

CampaignSpec small_campaign(ScenarioKind kind) {
  CampaignSpec s;
  s.scenario = kind;
  s.k_list = {15};
  s.cases_per_k = 3;
  s.seed = 99;
  s.max_replacements = 1;
  HoopSpec h;
  h.center_schedule = {{0.0, Vector3d(0, 0, 3)}};
  s.hoop = h;
  s.boundary.initial_positions = {Vector3d::Zero()};
  s.boundary.final_positions = {Vector3d(0, 0, 6)};
  return s;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("hoop normal convention") {
  CHECK((hoop_normal(0, 0) - Vector3d(0, 0, 1)).norm() == 0.0);
  const double phi = 0.3, psi = -0.5;
  const Vector3d n = hoop_normal(phi, psi);
  CHECK(n.norm() == doctest::Approx(1.0));
  // Tilt about East raises the axis toward Up, heading swings it toward East.
  CHECK(n[0] == doctest::Approx(std::sin(phi)));
  CHECK(std::atan2(n[1], n[2]) == doctest::Approx(psi));
}

TEST_CASE("scenario 1 sampling stays inside the stated boxes and is seed-deterministic") {
  Rng rng(1);
  HoopSpec base;
  BoundaryConditions bc;
  bc.initial_positions = {Vector3d::Zero()};
  bc.final_positions = {Vector3d(0, 0, 6)};
  Vector3d lo = Vector3d::Constant(1e9), hi = Vector3d::Constant(-1e9);
  double max_tilt = 0, max_heading = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto c = sample_scenario1(rng, base, bc);
    const Vector3d r = c.hoop->center_at(0.0);
    lo = lo.cwiseMin(r);
    hi = hi.cwiseMax(r);
    const Vector3d n = c.hoop->normal;
    max_tilt = std::max(max_tilt, std::abs(std::asin(n[0])));
    max_heading = std::max(max_heading, std::abs(std::atan2(n[1], n[2])));
  }
  CHECK(lo[0] >= -1.0);
  CHECK(hi[0] <= 1.0);
  CHECK(lo[1] >= -2.0);
  CHECK(hi[1] <= 2.0);
  CHECK(lo[2] >= 2.0);
  CHECK(hi[2] <= 4.0);
  CHECK(hi[2] - lo[2] > 1.95);  // the range is actually covered
  CHECK(max_tilt <= 25.0 * std::numbers::pi / 180 + 1e-12);
  CHECK(max_heading <= 35.0 * std::numbers::pi / 180 + 1e-12);

  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) {
    CHECK(sample_scenario1(a, base, bc).hoop->center_at(0) == sample_scenario1(b, base, bc).hoop->center_at(0));
  }
}

TEST_CASE("scenario 2 sampling: spacing, blocking obstacle, formation geometry") {
  BeamSpec base;
  CHECK(obstacle_spacing(base) == doctest::Approx(1.488));
  BoundaryConditions bc;
  bc.final_positions = {Vector2d(-0.5, 5.5), Vector2d(0.5, 5.5)};
  bc.initial_positions = bc.final_positions;
  bc.v_max = 3.0;
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    const auto c = sample_scenario2(rng, base, bc);
    const auto& obs = c.beam->obstacles;
    REQUIRE(obs.size() == 4);
    for (std::size_t a = 0; a < obs.size(); ++a) {
      CHECK(obs[a].x() >= -2.0);
      CHECK(obs[a].x() <= 2.0);
      CHECK(obs[a].y() >= 2.0);
      CHECK(obs[a].y() <= 4.5);
      for (std::size_t b = a + 1; b < obs.size(); ++b) CHECK((obs[a] - obs[b]).lpNorm<1>() >= 1.488);
    }
    const Vector2d r1 = c.boundary.initial_positions[0], r2 = c.boundary.initial_positions[1];
    CHECK((r1 - r2).norm() == doctest::Approx(1.0));
    const Vector2d ctr = 0.5 * (r1 + r2);
    CHECK(oracle::point_segment_distance(obs[0], ctr, Vector2d(0, 5.5), 20001) <= 1e-3);
  }
  BeamSampling straight;
  straight.angle_deg = 0.0;
  const auto c = sample_scenario2(rng, base, bc, straight);
  const Vector2d d = c.boundary.initial_positions[1] - c.boundary.initial_positions[0];
  CHECK(d.x() == doctest::Approx(1.0));
  CHECK(d.y() == doctest::Approx(0.0));

  BeamSampling crowded;
  crowded.obstacle_count = 40;
  crowded.rejection_budget = 100;
  CHECK_THROWS_AS(sample_scenario2(rng, base, bc, crowded), SamplingError);
}

TEST_CASE("scenario 1 clipping examples") {
  const double w = 0.35 * 9.81;
  const auto p = hoop_problem(Vector3d(0, 0, 3), Vector3d(0, 0, 1));
  CHECK(clipping_scenario1(p, straight(Vector3d(0, 0, 2), Vector3d(0, 0, 4), 2.0, w)) ==
        doctest::Approx(0.0));
  CHECK(clipping_scenario1(p, straight(Vector3d(0.1, 0, 2), Vector3d(0.1, 0, 4), 2.0, w)) ==
        doctest::Approx(0.10).epsilon(1e-12));
  // Slanted segment: lateral offset at the plane by linear interpolation.
  CHECK(clipping_scenario1(p, straight(Vector3d(0, 0.2, 2.5), Vector3d(0, 0.0, 4.5), 2.0, w)) ==
        doctest::Approx(0.15).epsilon(1e-9));
  // Never reaches the plane: lateral distance at closest approach.
  CHECK(clipping_scenario1(p, straight(Vector3d(0.3, 0, 0), Vector3d(0.3, 0, 2), 2.0, w)) ==
        doctest::Approx(0.3));

  // Rigid rotation about Up leaves the metric unchanged.
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(0.7, Vector3d::UnitX()).toRotationMatrix();
  const auto pr = hoop_problem(rot * Vector3d(0, 0, 3), rot * Vector3d(0, 0, 1));
  const double c0 = clipping_scenario1(p, straight(Vector3d(0.1, 0.05, 2), Vector3d(-0.1, 0.2, 4), 2.0, w));
  const double c1 = clipping_scenario1(
      pr, straight(rot * Vector3d(0.1, 0.05, 2), rot * Vector3d(-0.1, 0.2, 4), 2.0, w));
  CHECK(c1 == doctest::Approx(c0).epsilon(1e-12));
}

TEST_CASE("scenario 2 clipping against a brute-force distance oracle") {
  CHECK(clipping_scenario2(beam_problem({Vector2d(5, 5)}), parked(Vector2d(0, 0), Vector2d(1, 0))) == 0.0);
  CHECK(clipping_scenario2(beam_problem({Vector2d(0.5, 0)}), parked(Vector2d(0, 0), Vector2d(1, 0))) ==
        doctest::Approx(0.43));
  Rng rng(3);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int i = 0; i < 20; ++i) {
    const Vector2d o(u(rng), u(rng)), r1(u(rng), u(rng));
    const double a = u(rng);
    const Vector2d r2 = r1 + Vector2d(std::cos(a), std::sin(a));
    const double expect = std::max(0.0, 0.43 - oracle::point_segment_distance(o, r1, r2));
    CHECK(clipping_scenario2(beam_problem({o}), parked(r1, r2)) == doctest::Approx(expect).epsilon(1e-4));
  }
}

TEST_CASE("five-column statistics") {
  const auto s = summarize({4.0, 1.0, 3.0, 2.0});
  CHECK(s.count == 4);
  CHECK(s.mean == doctest::Approx(2.5));
  CHECK(s.median == doctest::Approx(2.5));
  CHECK(s.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(s.min == 1.0);
  CHECK(s.max == 4.0);
  CHECK(summarize({7.0}).stddev == 0.0);
  CHECK(summarize({}).count == 0);
}

TEST_CASE("campaign results are worker-count independent and re-aggregate exactly") {
  const auto spec = small_campaign(ScenarioKind::Hoop);
  const auto a = run_campaign(spec, 1);
  const auto b = run_campaign(spec, 3);
  std::ostringstream ta, tb, ma, mb;
  a.write_deterministic_tables(ta);
  b.write_deterministic_tables(tb);
  a.write_manifest(ma);
  b.write_manifest(mb);
  CHECK(ta.str() == tb.str());
  CHECK(ma.str() == mb.str());
  REQUIRE(!a.cases.empty());

  std::ostringstream tc;
  CampaignResult re = a;
  re.per_k = aggregate(a.cases);
  re.write_deterministic_tables(tc);
  CHECK(tc.str() == ta.str());

  for (const auto& c : a.cases) {
    CHECK(c.clipping >= 0.0);
    CHECK(c.iterations <= spec.scvx.max_iters * (1 + spec.scvx.max_tf_retries));
    if (c.converged) CHECK(c.constraints_ok);
  }
  CHECK(case_seed(1, 15, 0, 0) != case_seed(1, 15, 0, 1));
  CHECK(case_seed(1, 15, 0, 0) != case_seed(1, 20, 0, 0));
}

TEST_CASE("campaign settings validation") {
  auto s = small_campaign(ScenarioKind::Hoop);
  s.k_list = {1};
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = small_campaign(ScenarioKind::Hoop);
  s.cases_per_k = 0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
}

}  // TEST_SUITE
