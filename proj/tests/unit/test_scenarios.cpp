#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "quadstc/scenarios.hpp"

using namespace quadstc;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::VectorXd;

namespace {

HoopSpec hoop_at(const Vector3d& c, const Vector3d& n) {
  HoopSpec h;
  h.center_schedule = {{0.0, c}};
  h.normal = n;
  return h;
}

double beam_h(const CompoundStc& s, const Vector2d& r1, const Vector2d& r2, const Vector2d& alpha) {
  VectorXd z(4);
  z << r1, r2;
  return eval_compound(s, z, alpha);
}

BeamSpec beam_with(const Vector2d& o) {
  BeamSpec b;
  b.obstacles = {o};
  return b;
}

}  // namespace

TEST_SUITE("scenarios") {

TEST_CASE("hoop STC at the center, beyond the slab and in the annulus") {
  HoopSpec h = hoop_at(Vector3d(1, 2, 3), Vector3d(0, 0, 1));
  h.require_passage = false;
  h.trigger_radius = 2.0;
  h.constraint_radius = 0.3;
  h.hoop_radius = 0.35;
  const auto s = build_hoop_stc(h, 0.0);
  REQUIRE(s.triggers.size() == 3);
  const VectorXd center = Vector3d(1, 2, 3);
  CHECK(sigma_hat(s.triggers[0].value(center)) == doctest::Approx(0.5));
  CHECK(sigma_hat(s.triggers[1].value(center)) == doctest::Approx(0.5));
  CHECK(sigma_hat(s.triggers[2].value(center)) == doctest::Approx(4.0));
  CHECK(s.constraints[0].value(center) == doctest::Approx(-0.09));
  CHECK(eval_compound(s, center, VectorXd()) == doctest::Approx(-0.09));

  CHECK(eval_compound(s, VectorXd(Vector3d(1, 2, 4)), VectorXd()) == 0.0);

  const VectorXd annulus = Vector3d(1.5, 2, 3.2);
  CHECK(s.constraints[0].value(annulus) == doctest::Approx(0.16));
  CHECK(eval_compound(s, annulus, VectorXd()) > 0.0);
}

TEST_CASE("hoop STC infeasible region is exactly the annulus inside the slab") {
  HoopSpec h = hoop_at(Vector3d(0, 0, 3), Vector3d(0, 0, 1));
  h.require_passage = false;
  h.trigger_radius = 1.0;
  h.constraint_radius = 0.2;
  h.hoop_radius = 0.3;
  const auto s = build_hoop_stc(h, 0.0);
  int mismatches = 0;
  for (int i = -30; i <= 30; ++i) {
    for (int j = -30; j <= 30; ++j) {
      const double up = 0.05 * i + 0.0125, north = 3.0 + 0.05 * j + 0.0125;
      const double lat = std::abs(up);
      const bool in_slab = std::abs(north - 3.0) < 0.5;
      const bool expect = in_slab && lat > 0.2 && lat < 1.0;
      const bool got = eval_compound(s, VectorXd(Vector3d(up, 0, north)), VectorXd()) > 0.0;
      mismatches += expect != got;
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("beam STC: obstacle between the vehicles is blocked, lateral clearance accepted") {
  const Vector2d r1(0, 0), r2(1, 0);
  {
    const auto s = build_beam_stc(beam_with(Vector2d(0.5, 0)), 0);
    VectorXd z(4);
    z << r1, r2;
    CHECK(s.triggers[0].value(z) == doctest::Approx(-0.93));
    CHECK(s.triggers[1].value(z) == doctest::Approx(-0.93));
    CHECK(s.constraints[0].value(z) == doctest::Approx(0.43));
    CHECK(s.constraints[1].value(z) == doctest::Approx(0.43));
    CHECK_FALSE(logical_oracle(s, z));
  }
  {
    // q = +90 degree rotation of p = (1, 0) is (0, 1); the clear factor is c3.
    const auto s = build_beam_stc(beam_with(Vector2d(0.5, 0.6)), 0);
    VectorXd z(4);
    z << r1, r2;
    CHECK(s.constraints[1].value(z) == doctest::Approx(-0.17));
    CHECK(beam_h(s, r1, r2, Vector2d(0, 0.17)) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(logical_oracle(s, z));
  }
  {
    const auto s = build_beam_stc(beam_with(Vector2d(3.0, 0)), 0);
    CHECK(beam_h(s, r1, r2, Vector2d(0.3, 0.1)) == 0.0);
  }
}

TEST_CASE("beam STC blocking property by witness search") {
  BeamSpec b;
  for (int i = -12; i <= 12; ++i) {
    for (int j = -12; j <= 12; ++j) b.obstacles.emplace_back(0.5 + 0.07 * i + 0.003, 0.07 * j + 0.003);
  }
  const Vector2d r1(0.2, -0.1), r2(1.1, 0.33);
  const Vector2d p = (r2 - r1).normalized(), q(-p.y(), p.x());
  int mismatches = 0;
  for (int l = 0; l < static_cast<int>(b.obstacles.size()); ++l) {
    const auto s = build_beam_stc(b, l);
    const Vector2d o = b.obstacles[static_cast<std::size_t>(l)];
    // Open keep-out rectangle in the body frame.
    const double along = p.dot(o - r1), across = q.dot(o - r1);
    const bool inside = along > -b.keepout_half_width &&
                        along < (r2 - r1).norm() + b.keepout_half_width &&
                        std::abs(across) < b.keepout_half_width;
    VectorXd z(4);
    z << r1, r2;
    std::vector<double> g, c;
    for (const auto& f : s.triggers) g.push_back(f.value(z));
    for (const auto& f : s.constraints) c.push_back(f.value(z));
    double trig = 1.0;
    for (double gj : g) trig *= oracle::sigma_hat(gj);
    mismatches += oracle::slack_witness(trig, c) == inside;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("payload link linearization") {
  const auto link = build_payload_link(1.0);
  auto row = link.linearize(Vector2d(1, 0), Vector2d(0, 0));
  CHECK(row.coeff_r1[0] == doctest::Approx(1.0));
  CHECK(row.coeff_r2[0] == doctest::Approx(-1.0));
  CHECK(row.coeff_r1[1] == doctest::Approx(0.0));
  CHECK(row.rhs == doctest::Approx(1.0));
  // |d*| + u'(d - d*) = 1 with d* = (2, 0) gives d_x = 1.
  row = link.linearize(Vector2d(2, 0), Vector2d(0, 0));
  CHECK(row.coeff_r1[0] == doctest::Approx(1.0));
  CHECK(row.rhs == doctest::Approx(1.0));
  CHECK(link.residual(Vector2d(0, 0), Vector2d(0.6, 0.8)) == doctest::Approx(0.0));
}

TEST_CASE("problem assembly") {
  BoundaryConditions bc;
  bc.initial_positions = {Vector3d::Zero()};
  bc.final_positions = {Vector3d(0, 0, 6)};
  const auto p = assemble_problem(ScenarioKind::Hoop, hoop_at(Vector3d(0, 0, 3), Vector3d(0, 0, 1)),
                                  std::nullopt, bc, QuadModel{}, ControlSetParams{}, 30);
  CHECK(p.state_dim() == 6);
  CHECK(p.control_dim() == 3);
  const double dt = 4.0 / 29.0;
  CHECK(p.speed_limit(dt) == doctest::Approx(2 * 0.5 / dt));

  BoundaryConditions b2;
  b2.initial_positions = {Vector2d(-0.5, 0.5), Vector2d(0.5, 0.5)};
  b2.final_positions = {Vector2d(-0.5, 5.5), Vector2d(0.5, 5.5)};
  b2.v_max = 3.0;
  QuadModel m2;
  m2.spatial_dim = 2;
  ControlSetParams c2;
  c2.altitude_hold = true;
  const auto q = assemble_problem(ScenarioKind::Beam, std::nullopt, beam_with(Vector2d(0, 3)), b2, m2, c2, 30);
  CHECK(q.state_dim() == 8);
  CHECK(q.slack_dim() == 2);

  b2.initial_positions[1] = Vector2d(0.7, 0.5);
  try {
    assemble_problem(ScenarioKind::Beam, std::nullopt, beam_with(Vector2d(0, 3)), b2, m2, c2, 30);
    FAIL("expected rejection");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("rigid payload length") != std::string::npos);
  }
}

}  // TEST_SUITE
