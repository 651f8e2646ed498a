#include "quadstc/scenarios.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace quadstc {

namespace {

using Eigen::Matrix2d;
using Eigen::Vector2d;
using Eigen::VectorXd;

Matrix2d rotate_plus_90() {
  Matrix2d r;
  r << 0.0, -1.0, 1.0, 0.0;
  return r;
}

// Beam-frame quantities at (r_1, r_2).
struct BeamFrame {
  Vector2d r1, r2, p, q;
  double length = 0.0;
  Matrix2d proj;  // (I - p p') / |d|, the Jacobian of p w.r.t. d = r_2 - r_1

  explicit BeamFrame(const VectorXd& z) : r1(z.head<2>()), r2(z.segment<2>(2)) {
    const Vector2d d = r2 - r1;
    length = d.norm();
    if (!(length > 0.0)) throw ValidationError("beam STC: coincident vehicle positions");
    p = d / length;
    q = rotate_plus_90() * p;
    proj = (Matrix2d::Identity() - p * p.transpose()) / length;
  }
};

// Gradient of a'(frame vector) w.r.t. (r_1, r_2) through d = r_2 - r_1:
// d/dd (p'a) = proj a, d/dd (q'a) = proj R' a.
VectorXd frame_gradient(const Vector2d& dd) {
  VectorXd g(4);
  g.head<2>() = -dd;
  g.tail<2>() = dd;
  return g;
}

}  // namespace

void HoopSpec::validate() const {
  if (center_schedule.empty()) throw ValidationError("hoop: center schedule is empty");
  for (std::size_t i = 1; i < center_schedule.size(); ++i) {
    if (!(center_schedule[i].first > center_schedule[i - 1].first)) {
      throw ValidationError("hoop: center schedule times must increase");
    }
  }
  if (std::abs(normal.norm() - 1.0) > 1e-12) throw ValidationError("hoop: normal must be a unit vector");
  if (!(half_length > 0.0)) throw ValidationError("hoop: corridor half-length must be positive");
  if (!(constraint_radius >= 0.0)) throw ValidationError("hoop: constraint radius must be nonnegative");
  if (!(hoop_radius > constraint_radius)) {
    throw ValidationError("hoop: hoop radius must exceed the constraint corridor radius");
  }
  if (!require_passage && !(trigger_radius > hoop_radius)) {
    throw ValidationError("hoop: trigger corridor radius must exceed the hoop radius");
  }
}

Eigen::Vector3d HoopSpec::center_at(double t) const {
  if (center_schedule.size() == 1 || t <= center_schedule.front().first) {
    return center_schedule.front().second;
  }
  if (t >= center_schedule.back().first) return center_schedule.back().second;
  for (std::size_t i = 1; i < center_schedule.size(); ++i) {
    const auto& [t1, c1] = center_schedule[i];
    if (t <= t1) {
      const auto& [t0, c0] = center_schedule[i - 1];
      const double s = (t - t0) / (t1 - t0);
      return (1.0 - s) * c0 + s * c1;
    }
  }
  return center_schedule.back().second;
}

Eigen::Matrix3d HoopSpec::lateral_projector() const {
  return Eigen::Matrix3d::Identity() - normal * normal.transpose();
}

void BeamSpec::validate() const {
  if (!(payload_length > 0.0)) throw ValidationError("beam: payload length must be positive");
  if (!(obstacle_radius > 0.0)) throw ValidationError("beam: obstacle radius must be positive");
  if (!(keepout_half_width >= obstacle_radius)) {
    throw ValidationError("beam: keep-out half-width must be at least the obstacle radius");
  }
}

void BoundaryConditions::validate(int spatial_dim) const {
  if (initial_positions.empty() || initial_positions.size() != final_positions.size()) {
    throw ValidationError("boundary: initial and final position lists must match and be non-empty");
  }
  for (std::size_t v = 0; v < initial_positions.size(); ++v) {
    if (initial_positions[v].size() != spatial_dim || final_positions[v].size() != spatial_dim) {
      throw ValidationError("boundary: position dimension must be " + std::to_string(spatial_dim));
    }
  }
  if (!(t_f > 0.0)) throw ValidationError("boundary: t_f must be positive");
  if (v_max && !(*v_max > 0.0)) throw ValidationError("boundary: v_max must be positive");
}

CompoundStc build_hoop_stc(const HoopSpec& spec, double t) {
  const Eigen::Vector3d center = spec.center_at(t);
  const Eigen::Vector3d n = spec.normal;
  const Eigen::Matrix3d nn = spec.lateral_projector().transpose() * spec.lateral_projector();
  const double l = spec.half_length;
  const double rho_g2 = spec.trigger_radius * spec.trigger_radius;
  const double rho_c2 = spec.constraint_radius * spec.constraint_radius;

  auto lateral_sq = [center, nn](const VectorXd& r) {
    const Eigen::Vector3d d = r.head<3>() - center;
    return d.dot(nn * d);
  };
  auto lateral_grad = [center, nn](const VectorXd& r) -> VectorXd {
    return 2.0 * nn * (r.head<3>() - center);
  };

  CompoundStc stc;
  stc.trigger_mode = TriggerMode::And;
  stc.constraint_form = ConstraintForm::InequalityNoSlack;
  stc.triggers.push_back({[=](const VectorXd& r) { return n.dot(center - r.head<3>()) - l; },
                          [=](const VectorXd&) -> VectorXd { return -n; }});
  stc.triggers.push_back({[=](const VectorXd& r) { return n.dot(r.head<3>() - center) - l; },
                          [=](const VectorXd&) -> VectorXd { return n; }});
  if (!spec.require_passage) {
    stc.triggers.push_back({[=](const VectorXd& r) { return lateral_sq(r) - rho_g2; }, lateral_grad});
  }
  ScalarFunction c1{[=](const VectorXd& r) { return lateral_sq(r) - rho_c2; }, lateral_grad, {}};
  c1.quadratic = QuadraticForm{nn, center, -rho_c2};
  stc.constraints.push_back(std::move(c1));
  return stc;
}

CompoundStc build_hoop_velocity_stc(const HoopSpec& spec, double t, double min_speed) {
  const Eigen::Vector3d center = spec.center_at(t);
  const Eigen::Vector3d n = spec.normal;
  const double l = spec.half_length;
  auto embed = [](const Eigen::Vector3d& pos_part, const Eigen::Vector3d& vel_part) {
    VectorXd g(6);
    g << pos_part, vel_part;
    return g;
  };
  CompoundStc stc;
  stc.trigger_mode = TriggerMode::And;
  stc.constraint_form = ConstraintForm::InequalityNoSlack;
  stc.triggers.push_back({[=](const VectorXd& z) { return n.dot(center - z.head<3>()) - l; },
                          [=](const VectorXd&) { return embed(-n, Eigen::Vector3d::Zero()); }});
  stc.triggers.push_back({[=](const VectorXd& z) { return n.dot(z.head<3>() - center) - l; },
                          [=](const VectorXd&) { return embed(n, Eigen::Vector3d::Zero()); }});
  stc.constraints.push_back({[=](const VectorXd& z) { return min_speed - n.dot(z.segment<3>(3)); },
                             [=](const VectorXd&) { return embed(Eigen::Vector3d::Zero(), -n); }});
  return stc;
}

CompoundStc build_beam_stc(const BeamSpec& spec, int obstacle, FrameLinearization frame) {
  if (obstacle < 0 || obstacle >= static_cast<int>(spec.obstacles.size())) {
    throw ValidationError("beam STC: obstacle index out of range");
  }
  const Vector2d o = spec.obstacles[static_cast<std::size_t>(obstacle)];
  const double w = spec.keepout_half_width;
  const bool full = frame == FrameLinearization::Full;
  const Matrix2d rt = rotate_plus_90().transpose();

  CompoundStc stc;
  stc.trigger_mode = TriggerMode::And;
  stc.constraint_form = ConstraintForm::EqualityWithSlacks;

  // g4 = p'(r_1 - o) - w
  stc.triggers.push_back(
      {[=](const VectorXd& z) {
         const BeamFrame f(z);
         return f.p.dot(f.r1 - o) - w;
       },
       [=](const VectorXd& z) -> VectorXd {
         const BeamFrame f(z);
         VectorXd g = full ? frame_gradient(f.proj * (f.r1 - o)) : VectorXd::Zero(4);
         g.head<2>() += f.p;
         return g;
       }});
  // g5 = p'(o - r_2) - w
  stc.triggers.push_back(
      {[=](const VectorXd& z) {
         const BeamFrame f(z);
         return f.p.dot(o - f.r2) - w;
       },
       [=](const VectorXd& z) -> VectorXd {
         const BeamFrame f(z);
         VectorXd g = full ? frame_gradient(f.proj * (o - f.r2)) : VectorXd::Zero(4);
         g.tail<2>() -= f.p;
         return g;
       }});
  // c2 = q'(o - r_2) + w
  stc.constraints.push_back(
      {[=](const VectorXd& z) {
         const BeamFrame f(z);
         return f.q.dot(o - f.r2) + w;
       },
       [=](const VectorXd& z) -> VectorXd {
         const BeamFrame f(z);
         VectorXd g = full ? frame_gradient(f.proj * rt * (o - f.r2)) : VectorXd::Zero(4);
         g.tail<2>() -= f.q;
         return g;
       }});
  // c3 = q'(r_1 - o) + w
  stc.constraints.push_back(
      {[=](const VectorXd& z) {
         const BeamFrame f(z);
         return f.q.dot(f.r1 - o) + w;
       },
       [=](const VectorXd& z) -> VectorXd {
         const BeamFrame f(z);
         VectorXd g = full ? frame_gradient(f.proj * rt * (f.r1 - o)) : VectorXd::Zero(4);
         g.head<2>() += f.q;
         return g;
       }});
  return stc;
}

double PayloadLink::residual(const VectorXd& r1, const VectorXd& r2) const {
  return (r1 - r2).norm() - length;
}

PayloadLink::Row PayloadLink::linearize(const VectorXd& r1_ref, const VectorXd& r2_ref) const {
  const VectorXd d = r1_ref - r2_ref;
  const double nrm = d.norm();
  if (!(nrm > 0.0)) throw ValidationError("payload link: coincident reference positions");
  const VectorXd p = d / nrm;
  // |d*| + p'(d - d*) = l  <=>  p'd = l, since p'd* = |d*|.
  return {p, -p, length};
}

PayloadLink build_payload_link(double length) {
  if (!(length > 0.0)) throw ValidationError("payload link: length must be positive");
  return PayloadLink{length};
}

int NonconvexProblem::slack_dim() const {
  if (kind == ScenarioKind::Beam && beam) return 2 * static_cast<int>(beam->obstacles.size());
  return 0;
}

VectorXd NonconvexProblem::hover_control() const {
  VectorXd u = VectorXd::Zero(control_dim());
  if (model.spatial_dim == 3) {
    for (int v = 0; v < vehicles(); ++v) u[v * model.control_dim()] = model.weight();
  }
  return u;
}

double NonconvexProblem::speed_limit(double dt) const {
  if (boundary.v_max) return *boundary.v_max;
  if (kind == ScenarioKind::Hoop && hoop) return 2.0 * hoop->half_length / dt;
  throw ValidationError("speed limit: v_max must be given for this scenario");
}

std::vector<NodeStc> NonconvexProblem::stcs_at(double t) const {
  std::vector<NodeStc> out;
  if (kind == ScenarioKind::Hoop) {
    if (hoop) out.push_back({build_hoop_stc(*hoop, t), {0, 1, 2}, 0});
  } else {
    const int d = model.spatial_dim;
    const int nx = model.state_dim();
    std::vector<int> idx;
    for (int i = 0; i < d; ++i) idx.push_back(i);
    for (int i = 0; i < d; ++i) idx.push_back(nx + i);
    for (int l = 0; l < static_cast<int>(beam->obstacles.size()); ++l) {
      out.push_back({build_beam_stc(*beam, l, beam_frame), idx, 2 * l});
    }
  }
  return out;
}

std::optional<PayloadLink> NonconvexProblem::payload_link() const {
  if (kind == ScenarioKind::Beam) return build_payload_link(beam->payload_length);
  return std::nullopt;
}

VectorXd NonconvexProblem::position(const VectorXd& state, int v) const {
  return state.segment(v * model.state_dim(), model.spatial_dim);
}

VectorXd NonconvexProblem::velocity(const VectorXd& state, int v) const {
  return state.segment(v * model.state_dim() + model.spatial_dim, model.spatial_dim);
}

NonconvexProblem assemble_problem(ScenarioKind kind, std::optional<HoopSpec> hoop,
                                  std::optional<BeamSpec> beam, BoundaryConditions boundary,
                                  QuadModel model, ControlSetParams control, int nodes) {
  model.validate();
  control.validate(model);
  if (nodes < 2) throw ValidationError("problem: K must be at least 2");

  NonconvexProblem p;
  p.kind = kind;
  p.model = model;
  p.control = control;
  p.nodes = nodes;
  if (kind == ScenarioKind::Hoop) {
    if (model.spatial_dim != 3) throw ValidationError("problem: hoop scenario is 3-D");
    if (control.altitude_hold) throw ValidationError("problem: hoop scenario cannot hold altitude");
    if (hoop) {
      hoop->validate();
    } else if (!boundary.v_max) {
      throw ValidationError("problem: a hoop-free problem needs v_max");
    }
    boundary.validate(3);
    if (boundary.initial_positions.size() != 1) throw ValidationError("problem: hoop scenario has one vehicle");
    p.hoop = std::move(hoop);
  } else {
    if (!beam) throw ValidationError("problem: beam scenario needs beam geometry");
    if (model.spatial_dim != 2) throw ValidationError("problem: beam scenario is planar (spatial_dim 2)");
    if (!control.altitude_hold) throw ValidationError("problem: beam scenario requires altitude hold");
    beam->validate();
    boundary.validate(2);
    if (boundary.initial_positions.size() != 2) throw ValidationError("problem: beam scenario has two vehicles");
    if (!boundary.v_max) throw ValidationError("problem: beam scenario needs v_max");
    const double l = beam->payload_length;
    auto check = [l](const VectorXd& a, const VectorXd& b, const char* which) {
      const double dist = (a - b).norm();
      if (std::abs(dist - l) > 1e-9 * std::max(1.0, l)) {
        std::ostringstream msg;
        msg << "boundary: " << which << " positions violate the rigid payload length constraint "
            << "|r_1 - r_2| = l_o (distance " << dist << " m, l_o = " << l << " m)";
        throw ValidationError(msg.str());
      }
    };
    check(boundary.initial_positions[0], boundary.initial_positions[1], "initial");
    check(boundary.final_positions[0], boundary.final_positions[1], "final");
    p.beam = std::move(beam);
  }
  p.boundary = std::move(boundary);
  return p;
}

}  // namespace quadstc
