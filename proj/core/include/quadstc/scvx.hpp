#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "quadstc/conic.hpp"
#include "quadstc/dynamics.hpp"
#include "quadstc/scenarios.hpp"

namespace quadstc {

/// How a single-constraint inequality STC enters the subproblem.
///   Linearized: h* + grad h*' dz <= 0.
///   ConvexFactor: when the constraint is a known convex quadratic
///     sublevel set |L (z - center)|^2 <= rho^2, it is kept exactly in its
///     norm form n(z) = |L (z - center)| - rho and only the trigger factor
///     is linearized: S* n(z) + n* grad S*' dz <= 0 (a second-order cone).
///     Falls back to Linearized otherwise.
enum class StcSubproblemForm { Linearized, ConvexFactor };

/// Soft trust region / virtual control settings.
///
/// `trust_weight` acts on the leading block of each node vector
/// z_k = (x_k, u_k, alpha_k); coordinates past its size carry no penalty.
/// `virtual_weight` is the diagonal of W_vc (one entry per stacked state).
/// Each inequality STC row carries a nonnegative buffer penalized by
/// `buffer_weight`; buffers count toward J_vc.
struct ScvxConfig {
  Eigen::MatrixXd trust_weight;
  Eigen::VectorXd virtual_weight;
  double buffer_weight = 1e5;
  double eps_tr = 1e-3;
  double eps_vc = 1e-4;
  int max_iters = 20;
  double tf_growth = 1.25;
  int max_tf_retries = 3;
  // Tighter than the conic default: Gamma - ||u|| at the optimum scales with
  // the complementarity tolerance and must stay below 1e-6.
  double solver_tol = 1e-9;
  StcSubproblemForm stc_form = StcSubproblemForm::ConvexFactor;

  void validate(const NonconvexProblem& problem) const;
};

/// Weights used for the hoop and beam campaigns.
ScvxConfig default_config(const NonconvexProblem& problem);

/// Node values of one iterate. Columns index nodes (intervals for nu).
struct Trajectory {
  Eigen::MatrixXd states;            // n_x x K
  Eigen::MatrixXd controls;          // n_u x K
  Eigen::MatrixXd slacks;            // n_alpha x K
  Eigen::MatrixXd thrust_bounds;     // vehicles x K
  Eigen::MatrixXd virtual_controls;  // n_x x (K - 1)
  Eigen::VectorXd stc_buffers;       // one per inequality STC row
  double t_f = 0.0;

  int nodes() const { return static_cast<int>(states.cols()); }
  double dt() const { return t_f / (nodes() - 1); }
  double node_time(int k) const { return k * dt(); }
  Eigen::VectorXd node_vector(int k) const;
};

/// Straight-line positions, constant finite-difference velocities, hover
/// controls, zero slacks.
Trajectory initialize(const NonconvexProblem& problem, int nodes, double t_f);

/// Trapezoidal fuel sum over the thrust bounds.
double fuel_cost(const Trajectory& traj);

/// (J_tr, J_vc) of `iter` measured against `prev`.
std::pair<double, double> convergence_metrics(const Trajectory& iter, const Trajectory& prev,
                                              const ScvxConfig& cfg);

/// Variable map of an assembled subproblem.
struct SubproblemLayout {
  int nodes = 0;
  int node_size = 0;  // n_x + n_u + n_alpha
  int nx = 0;
  int nu = 0;
  int nalpha = 0;
  int vehicles = 0;
  std::vector<Index> thrust_bound;  // k * vehicles + v
  Index virtual_begin = 0;          // k * n_x + i
  std::vector<Index> stc_buffer;

  Index state(int k, int i) const { return static_cast<Index>(k) * node_size + i; }
  Index control(int k, int i) const { return state(k, nx + i); }
  Index slack(int k, int i) const { return state(k, nx + nu + i); }
  Index virtual_control(int k, int i) const { return virtual_begin + static_cast<Index>(k) * nx + i; }
};

struct Subproblem {
  ConicProgram program;
  SubproblemLayout layout;
};

Subproblem build_subproblem(const NonconvexProblem& problem, const Trajectory& prev,
                            const DiscreteDynamics& dyn, const ScvxConfig& cfg);

Trajectory extract_trajectory(const Subproblem& sub, const Eigen::VectorXd& primal, double t_f);

struct IterationRecord {
  int attempt = 0;  // t_f retry index
  int iteration = 0;
  double t_f = 0.0;
  double fuel = 0.0;
  double j_tr = 0.0;
  double j_vc = 0.0;
  double solve_time = 0.0;  // s
  SolveStatus status = SolveStatus::Optimal;
};

struct ConvergenceReport {
  bool converged = false;
  bool backend_failure = false;
  int iterations = 0;  // all attempts
  int tf_retries = 0;
  double t_f = 0.0;
  double fuel = 0.0;
  double final_j_vc = 0.0;
  double total_solve_time = 0.0;  // sum of subproblem solve times, s
  std::string message;
  std::vector<IterationRecord> history;

  void write_text(std::ostream& out) const;
};

struct ScvxResult {
  Trajectory trajectory;
  ConvergenceReport report;
};

/// Successive convexification with t_f growth on non-convergence. The first
/// attempt uses `dyn`; later attempts re-discretize and re-initialize.
ScvxResult solve_scvx(const NonconvexProblem& problem, const DiscreteDynamics& dyn,
                      const ScvxConfig& cfg);
ScvxResult solve_scvx(const NonconvexProblem& problem, const ScvxConfig& cfg);

}  // namespace quadstc
