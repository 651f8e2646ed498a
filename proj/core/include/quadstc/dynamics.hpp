#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "quadstc/conic.hpp"

namespace quadstc {

/// Translational point-mass quad-rotor with linear drag,
///
///   r' = v,  v' = -k_d v + u / m - g e_up,
///
/// in an Up-East-North frame. With spatial_dim == 3 axis 0 is vertical. With
/// spatial_dim == 2 the model is the horizontal (East-North) plane of a
/// vehicle holding altitude; gravity is cancelled by the vertical thrust and
/// does not appear.
struct QuadModel {
  double mass = 0.35;     // kg
  double drag = 0.0;      // 1/s
  double gravity = 9.81;  // m/s^2
  int spatial_dim = 3;

  int state_dim() const { return 2 * spatial_dim; }
  int control_dim() const { return spatial_dim; }
  double weight() const { return mass * gravity; }

  void validate() const;

  Eigen::MatrixXd a() const;
  Eigen::MatrixXd b() const;
  /// Constant drift E w.
  Eigen::VectorXd drift() const;
};

/// Thrust set U1 n U2 (n U3 when altitude_hold).
struct ControlSetParams {
  double thrust_min = 2.0;   // N
  double thrust_max = 5.0;   // N
  double tilt_max = 0.7853981633974483;  // rad
  bool altitude_hold = false;

  void validate(const QuadModel& model) const;
};

/// Exact first-order-hold transition over one interval:
///   x_{k+1} = A_d x_k + B_minus u_k + B_plus u_{k+1} + drift.
struct DiscreteDynamics {
  Eigen::MatrixXd a_d;
  Eigen::MatrixXd b_minus;
  Eigen::MatrixXd b_plus;
  Eigen::VectorXd drift;
  double dt = 0.0;
  double t_f = 0.0;
  int nodes = 0;

  double node_time(int k) const { return k * dt; }
  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u_k,
                       const Eigen::VectorXd& u_next) const;
};

/// Augmented-matrix-exponential discretization. Throws for nodes < 2 or t_f <= 0.
DiscreteDynamics discretize_foh(const QuadModel& model, double t_f, int nodes);

/// Closed-form discretization for the drag-free model (nilpotent A).
DiscreteDynamics discretize_foh_drag_free(const QuadModel& model, double t_f, int nodes);

/// Exact continuous solution on [0, dt] under linear control interpolation,
/// evaluated at `samples` uniformly spaced instants (both ends included).
/// Columns of the result are states.
Eigen::MatrixXd propagate_dense(const QuadModel& model, const Eigen::VectorXd& x0,
                                const Eigen::VectorXd& u_k, const Eigen::VectorXd& u_next,
                                double dt, int samples);

/// Exact state at time tau in [0, dt] (same solution as propagate_dense).
Eigen::VectorXd propagate_to(const QuadModel& model, const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& u_k, const Eigen::VectorXd& u_next,
                             double dt, double tau);

/// Variables created by build_control_cone for one vehicle at one node.
struct ControlConeVars {
  Index thrust_bound;  // Gamma
};

/// Adds the lossless-convexified thrust set for control variables `u`:
///   ||u|| <= Gamma,  T_min <= Gamma <= T_max,  cos(theta_max) Gamma <= e_up'u.
/// With altitude hold the control is the horizontal thrust, and Gamma bounds
/// the full thrust vector (m g, u):  ||(m g, u)|| <= Gamma,
/// cos(theta_max) Gamma <= m g. The fuel objective coefficient is left to the
/// caller.
ControlConeVars build_control_cone(ConicProgram& program, const ControlSetParams& params,
                                   const QuadModel& model, std::span<const Index> u);

/// Shared constant m g used by altitude-hold cones; created lazily per program.
struct ControlConeContext {
  Index weight_var = -1;
};
ControlConeVars build_control_cone(ConicProgram& program, const ControlSetParams& params,
                                   const QuadModel& model, std::span<const Index> u,
                                   ControlConeContext& ctx);

/// Radius of the admissible horizontal thrust disk under altitude hold:
/// min(sqrt(T_max^2 - (m g)^2), m g tan(theta_max)).
double horizontal_thrust_bound(const ControlSetParams& params, const QuadModel& model);

/// Membership in the original (nonconvex) thrust set, within `tol`.
bool thrust_admissible(const ControlSetParams& params, const QuadModel& model,
                       const Eigen::VectorXd& u, double tol = 1e-9);

/// Full thrust vector magnitude: ||u|| in 3-D, ||(m g, u)|| under altitude hold.
double thrust_magnitude(const ControlSetParams& params, const QuadModel& model,
                        const Eigen::VectorXd& u);

}  // namespace quadstc
