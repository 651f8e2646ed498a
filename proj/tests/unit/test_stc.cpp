#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "quadstc/conic.hpp"
#include "quadstc/stc.hpp"

using namespace quadstc;
using Eigen::VectorXd;

namespace {

// f(z) = z[i]
ScalarFunction coord(int i, int n) {
  return {[i](const VectorXd& z) { return z[i]; },
          [i, n](const VectorXd&) -> VectorXd { return VectorXd::Unit(n, i); },
          std::nullopt};
}

CompoundStc coords_stc(int ng, int nc, TriggerMode mode, ConstraintForm form) {
  CompoundStc s;
  for (int j = 0; j < ng; ++j) s.triggers.push_back(coord(j, ng + nc));
  for (int j = 0; j < nc; ++j) s.constraints.push_back(coord(ng + j, ng + nc));
  s.trigger_mode = mode;
  s.constraint_form = form;
  return s;
}

// Mixes continuous draws with exact boundary values.
double draw(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 5);
  std::uniform_real_distribution<double> u(-3, 3);
  switch (pick(rng)) {
    case 0: return 0.0;
    case 1: return -1.0;
    case 2: return 1.0;
    default: return u(rng);
  }
}

}  // namespace

TEST_SUITE("stc") {

TEST_CASE("sigma hat") {
  CHECK(sigma_hat(-1.0) == 1.0);
  CHECK(sigma_hat(0.0) == 0.0);
  CHECK(sigma_hat(2.0) == 0.0);
  CHECK(sigma_hat_slope(-0.5) == -1.0);
  CHECK(sigma_hat_slope(0.0) == 0.0);
}

TEST_CASE("scalar STC evaluation") {
  ScalarStc s{coord(0, 2), coord(1, 2)};
  CHECK(eval_scalar_stc(s, Eigen::Vector2d(-1, -2)) == doctest::Approx(-2.0));
  CHECK(eval_scalar_stc(s, Eigen::Vector2d(3, 7)) == 0.0);
  CHECK(eval_scalar_stc(s, Eigen::Vector2d(-0.5, 4)) == doctest::Approx(2.0));
}

TEST_CASE("compound evaluation examples") {
  // And-mode with sigma = (0.7, 0.3, 4) and c = -0.09.
  auto s = coords_stc(3, 1, TriggerMode::And, ConstraintForm::InequalityNoSlack);
  VectorXd z(4);
  z << -0.7, -0.3, -4.0, -0.09;
  CHECK(eval_compound(s, z, VectorXd()) == doctest::Approx(-0.0756));
  z[1] = 0.2;
  CHECK(eval_compound(s, z, VectorXd()) == 0.0);

  auto o = coords_stc(1, 2, TriggerMode::And, ConstraintForm::EqualityWithSlacks);
  VectorXd zo(3);
  zo << -1.0, 2.0, -1.0;
  CHECK(eval_compound(o, zo, Eigen::Vector2d(0, 1)) == 0.0);
  CHECK_THROWS_AS(eval_compound(o, zo, Eigen::Vector2d(-1, 0)), ValidationError);
}

TEST_CASE("linearization matches the product rule and finite differences") {
  auto s = coords_stc(1, 1, TriggerMode::And, ConstraintForm::InequalityNoSlack);
  const auto lin = linearize_compound(s, Eigen::Vector2d(-1, 3), VectorXd());
  CHECK(lin.value == doctest::Approx(3.0));
  CHECK(lin.dz[0] == doctest::Approx(-3.0));
  CHECK(lin.dz[1] == doctest::Approx(1.0));

  // Dormant: gradients vanish.
  const auto dormant = linearize_compound(s, Eigen::Vector2d(2, 3), VectorXd());
  CHECK(dormant.value == 0.0);
  CHECK(dormant.dz.norm() == 0.0);

  // And-mode with one trigger exactly at the kink: one-sided derivative from
  // the inactive side.
  auto a = coords_stc(2, 1, TriggerMode::And, ConstraintForm::InequalityNoSlack);
  const VectorXd z0 = Eigen::Vector3d(-0.5, 0.0, 2.0);
  const auto kink = linearize_compound(a, z0, VectorXd());
  const double eps = 1e-7;
  VectorXd zp = z0;
  zp[1] += eps;
  CHECK(kink.dz[1] == doctest::Approx((eval_compound(a, zp, VectorXd()) - kink.value) / eps));

  // Smooth point: central differences in every coordinate.
  auto e = coords_stc(2, 2, TriggerMode::Or, ConstraintForm::EqualityWithSlacks);
  const VectorXd z = (VectorXd(4) << -0.4, -1.3, 0.7, -0.2).finished();
  const VectorXd al = Eigen::Vector2d(0.1, 0.5);
  const auto l = linearize_compound(e, z, al);
  for (int i = 0; i < 4; ++i) {
    VectorXd up = z, dn = z;
    up[i] += 1e-6;
    dn[i] -= 1e-6;
    const double fd = (eval_compound(e, up, al) - eval_compound(e, dn, al)) / 2e-6;
    CHECK(l.dz[i] == doctest::Approx(fd).epsilon(1e-6));
  }
  for (int j = 0; j < 2; ++j) {
    VectorXd up = al, dn = al;
    up[j] += 1e-6;
    dn[j] -= 1e-6;
    const double fd = (eval_compound(e, z, up) - eval_compound(e, z, dn)) / 2e-6;
    CHECK(l.dalpha[j] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("logical oracle examples") {
  auto a = coords_stc(2, 2, TriggerMode::And, ConstraintForm::EqualityWithSlacks);
  CHECK(logical_oracle(a, (VectorXd(4) << -1, -1, 5, -2).finished()));
  CHECK(logical_oracle(a, (VectorXd(4) << -1, 1, 5, 5).finished()));
  auto o = coords_stc(2, 1, TriggerMode::Or, ConstraintForm::InequalityNoSlack);
  CHECK_FALSE(logical_oracle(o, Eigen::Vector3d(1, -1, 3)));
}

TEST_CASE("randomized equivalence of the continuous encodings") {
  std::mt19937_64 rng(17);
  constexpr int kTrials = 10000;
  int mismatches = 0;
  // Scalar form.
  ScalarStc sc{coord(0, 2), coord(1, 2)};
  for (int i = 0; i < kTrials; ++i) {
    const Eigen::Vector2d z(draw(rng), draw(rng));
    const bool enc = eval_scalar_stc(sc, z) <= 0.0;
    mismatches += enc != oracle::implication(true, {z[0]}, {z[1]});
  }
  // Compound forms with an "or"-constraint and a slack witness.
  for (auto mode : {TriggerMode::And, TriggerMode::Or}) {
    auto s = coords_stc(3, 2, mode, ConstraintForm::EqualityWithSlacks);
    for (int i = 0; i < kTrials; ++i) {
      VectorXd z(5);
      for (int j = 0; j < 5; ++j) z[j] = draw(rng);
      const std::vector<double> g{z[0], z[1], z[2]}, c{z[3], z[4]};
      const bool truth = oracle::implication(mode == TriggerMode::And, g, c);
      // Candidate slacks: zero, or one constraint shifted to zero.
      bool witness = eval_compound(s, z, VectorXd::Zero(2)) == 0.0;
      for (int j = 0; j < 2 && !witness; ++j) {
        if (c[static_cast<std::size_t>(j)] <= 0.0) {
          VectorXd al = VectorXd::Zero(2);
          al[j] = -c[static_cast<std::size_t>(j)];
          witness = eval_compound(s, z, al) == 0.0;
        }
      }
      mismatches += witness != truth;
      mismatches += logical_oracle(s, z) != truth;
    }
  }
  CHECK(mismatches == 0);
}

}  // TEST_SUITE
