#pragma once

#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "quadstc/dynamics.hpp"
#include "quadstc/stc.hpp"

namespace quadstc {

/// Hoop with a coaxial trigger corridor (radius rho_g) and constraint
/// corridor (radius rho_c), both of half-length l_c along the hoop normal.
/// Positions use the Up-East-North frame.
struct HoopSpec {
  /// (t, r_h) samples, linearly interpolated and held constant outside the
  /// table. A single entry is a static hoop.
  std::vector<std::pair<double, Eigen::Vector3d>> center_schedule;
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double hoop_radius = 0.25;  // m
  double trigger_radius = std::numeric_limits<double>::infinity();  // m
  double constraint_radius = 0.0;  // m
  double half_length = 0.5;        // m
  bool require_passage = true;     // drops the lateral trigger

  void validate() const;
  Eigen::Vector3d center_at(double t) const;
  /// I - n n'
  Eigen::Matrix3d lateral_projector() const;
};

/// Two vehicles joined by a rigid beam, moving in the horizontal
/// (East-North) plane through cylindrical obstacles.
struct BeamSpec {
  double payload_length = 1.0;        // m
  double keepout_half_width = 0.43;   // m
  double obstacle_radius = 0.08;      // m
  std::vector<Eigen::Vector2d> obstacles;

  void validate() const;
};

/// Per-vehicle boundary positions; velocities are zero and controls hover at
/// both ends. An unset speed limit means 2 l_c / dt (hoop scenario only).
struct BoundaryConditions {
  std::vector<Eigen::VectorXd> initial_positions;
  std::vector<Eigen::VectorXd> final_positions;
  double t_f = 4.0;  // s
  std::optional<double> v_max;  // m/s

  void validate(int spatial_dim) const;
};

enum class ScenarioKind { Hoop = 1, Beam = 2 };

/// STC argument ordering: the hoop STC acts on r = (r_up, r_east, r_north);
/// the beam STC acts on (r_1, r_2) with 2-D positions.
CompoundStc build_hoop_stc(const HoopSpec& spec, double t);

/// Optional extension: while inside the axial slab, the velocity component
/// along the hoop normal must be at least `min_speed`. Acts on (r, v).
CompoundStc build_hoop_velocity_stc(const HoopSpec& spec, double t, double min_speed);

enum class FrameLinearization { Full, Frozen };

/// Keep-out rectangle STC for one obstacle. The body frame is
/// p = (r_2 - r_1)/|r_2 - r_1|, q = p rotated by +90 degrees.
CompoundStc build_beam_stc(const BeamSpec& spec, int obstacle,
                           FrameLinearization frame = FrameLinearization::Full);

/// Rigid payload |r_1 - r_2| = l_o and its first-order expansion.
struct PayloadLink {
  double length = 1.0;

  double residual(const Eigen::VectorXd& r1, const Eigen::VectorXd& r2) const;

  /// Row coefficients for (r_1, r_2) and right-hand side of
  ///   |d*| + (d*/|d*|)'(d - d*) = l_o,  d = r_1 - r_2.
  struct Row {
    Eigen::VectorXd coeff_r1;
    Eigen::VectorXd coeff_r2;
    double rhs = 0.0;
  };
  Row linearize(const Eigen::VectorXd& r1_ref, const Eigen::VectorXd& r2_ref) const;
};

PayloadLink build_payload_link(double length);

/// A compound STC bound to a node: which state entries form its argument and
/// where its slacks sit in the node's slack block.
struct NodeStc {
  CompoundStc stc;
  std::vector<int> state_indices;
  int slack_offset = 0;
};

struct NonconvexProblem {
  ScenarioKind kind = ScenarioKind::Hoop;
  QuadModel model;
  ControlSetParams control;
  BoundaryConditions boundary;
  int nodes = 30;
  std::optional<HoopSpec> hoop;
  std::optional<BeamSpec> beam;
  FrameLinearization beam_frame = FrameLinearization::Full;

  int vehicles() const { return kind == ScenarioKind::Beam ? 2 : 1; }
  int state_dim() const { return vehicles() * model.state_dim(); }
  int control_dim() const { return vehicles() * model.control_dim(); }
  int slack_dim() const;

  /// Hover control stacked over vehicles.
  Eigen::VectorXd hover_control() const;
  double speed_limit(double dt) const;
  std::vector<NodeStc> stcs_at(double t) const;
  std::optional<PayloadLink> payload_link() const;

  /// Position of vehicle `v` inside a stacked state.
  Eigen::VectorXd position(const Eigen::VectorXd& state, int v) const;
  Eigen::VectorXd velocity(const Eigen::VectorXd& state, int v) const;
};

/// Validates every component and returns the assembled problem. Rejects beam
/// boundary data that violates the rigid-link length.
NonconvexProblem assemble_problem(ScenarioKind kind, std::optional<HoopSpec> hoop,
                                  std::optional<BeamSpec> beam, BoundaryConditions boundary,
                                  QuadModel model, ControlSetParams control, int nodes);

}  // namespace quadstc
