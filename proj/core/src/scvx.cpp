#include "quadstc/scvx.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "quadstc/stc.hpp"

namespace quadstc {

void ScvxConfig::validate(const NonconvexProblem& problem) const {
  const int node_size = problem.state_dim() + problem.control_dim() + problem.slack_dim();
  if (trust_weight.rows() != trust_weight.cols() || trust_weight.rows() > node_size) {
    throw ValidationError("solver: trust weight must be square and at most the node size (" +
                          std::to_string(node_size) + ")");
  }
  if (virtual_weight.size() != problem.state_dim()) {
    throw ValidationError("solver: virtual-control weight needs one entry per state (" +
                          std::to_string(problem.state_dim()) + ")");
  }
  if ((virtual_weight.array() < 0.0).any()) {
    throw ValidationError("solver: virtual-control weights must be nonnegative");
  }
  if (!(buffer_weight >= 0.0)) throw ValidationError("solver: buffer weight must be nonnegative");
  if (!(eps_tr > 0.0) || !(eps_vc > 0.0)) throw ValidationError("solver: eps_tr and eps_vc must be positive");
  if (max_iters < 1) throw ValidationError("solver: max_iters must be at least 1");
  if (!(tf_growth > 1.0)) throw ValidationError("solver: tf_growth must exceed 1");
  if (max_tf_retries < 0) throw ValidationError("solver: max_tf_retries must be nonnegative");
  if (!(solver_tol > 0.0)) throw ValidationError("solver: tolerance must be positive");
}

ScvxConfig default_config(const NonconvexProblem& problem) {
  ScvxConfig cfg;
  if (problem.kind == ScenarioKind::Hoop) {
    cfg.trust_weight = 0.1 * Eigen::MatrixXd::Identity(3, 3);
  } else {
    cfg.trust_weight = 50.0 * Eigen::MatrixXd::Identity(problem.state_dim(), problem.state_dim());
  }
  cfg.virtual_weight = Eigen::VectorXd::Constant(problem.state_dim(), 1e5);
  return cfg;
}

Eigen::VectorXd Trajectory::node_vector(int k) const {
  Eigen::VectorXd z(states.rows() + controls.rows() + slacks.rows());
  z << states.col(k), controls.col(k), slacks.col(k);
  return z;
}

Trajectory initialize(const NonconvexProblem& problem, int nodes, double t_f) {
  if (nodes < 2) throw ValidationError("initialize: K must be at least 2");
  const int d = problem.model.spatial_dim;
  const int nxv = problem.model.state_dim();
  Trajectory traj;
  traj.t_f = t_f;
  traj.states = Eigen::MatrixXd::Zero(problem.state_dim(), nodes);
  traj.controls = problem.hover_control().replicate(1, nodes);
  traj.slacks = Eigen::MatrixXd::Zero(problem.slack_dim(), nodes);
  traj.virtual_controls = Eigen::MatrixXd::Zero(problem.state_dim(), nodes - 1);
  traj.stc_buffers = Eigen::VectorXd::Zero(0);
  traj.thrust_bounds = Eigen::MatrixXd::Zero(problem.vehicles(), nodes);
  const Eigen::VectorXd u0 = problem.hover_control().head(problem.model.control_dim());
  const double hover_thrust = thrust_magnitude(problem.control, problem.model, u0);
  for (int v = 0; v < problem.vehicles(); ++v) {
    const Eigen::VectorXd& ri = problem.boundary.initial_positions[static_cast<std::size_t>(v)];
    const Eigen::VectorXd& rf = problem.boundary.final_positions[static_cast<std::size_t>(v)];
    const Eigen::VectorXd vel = (rf - ri) / t_f;
    for (int k = 0; k < nodes; ++k) {
      const double s = static_cast<double>(k) / (nodes - 1);
      traj.states.block(v * nxv, k, d, 1) = ri + s * (rf - ri);
      traj.states.block(v * nxv + d, k, d, 1) = vel;
      traj.thrust_bounds(v, k) = hover_thrust;
    }
  }
  return traj;
}

double fuel_cost(const Trajectory& traj) {
  const int n = traj.nodes();
  const double dt = traj.dt();
  double j = 0.0;
  for (int k = 0; k < n; ++k) {
    const double w = (k == 0 || k == n - 1) ? 0.5 * dt : dt;
    j += w * traj.thrust_bounds.col(k).sum();
  }
  return j;
}

std::pair<double, double> convergence_metrics(const Trajectory& iter, const Trajectory& prev,
                                              const ScvxConfig& cfg) {
  if (iter.nodes() != prev.nodes() || iter.states.rows() != prev.states.rows()) {
    throw ValidationError("convergence metrics: iterate dimensions differ");
  }
  const Eigen::Index m = cfg.trust_weight.rows();
  double j_tr = 0.0;
  if (m > 0) {
    for (int k = 0; k < iter.nodes(); ++k) {
      const Eigen::VectorXd dz = (iter.node_vector(k) - prev.node_vector(k)).head(m);
      j_tr += dz.dot(cfg.trust_weight * dz);
    }
  }
  double j_vc = 0.0;
  for (Eigen::Index k = 0; k < iter.virtual_controls.cols(); ++k) {
    j_vc += cfg.virtual_weight.dot(iter.virtual_controls.col(k).cwiseAbs());
  }
  j_vc += cfg.buffer_weight * iter.stc_buffers.sum();
  return {std::max(0.0, j_tr), j_vc};
}

namespace {

Index add_buffer(ConicProgram& p, SubproblemLayout& lay) {
  const Index b = p.add_variable();
  p.add_nonneg(b);
  lay.stc_buffer.push_back(b);
  return b;
}

// The constraint q(z) = (z - center)' W (z - center) - rho^2 <= 0 is used in
// its norm form n(z) = |L (z - center)| - rho, W = L'L, which has the same
// sublevel set and keeps a nonzero subgradient on the axis when rho = 0:
//   S* n(z) + n* grad S*' (z - z*) <= b
// becomes the cone
//   |S* L (z - center)| <= S* rho - n* grad S*' (z - z*) + b.
void add_convex_factor_row(ConicProgram& p, const NodeStc& ns, SubproblemLayout& lay, int k,
                           const Eigen::VectorXd& z) {
  const QuadraticForm& q = *ns.stc.constraints.front().quadratic;
  const TriggerLinearization tl = linearize_trigger_factor(ns.stc, z);
  if (tl.value == 0.0 && tl.dz.isZero(0.0)) return;
  const double rho = std::sqrt(std::max(0.0, -q.offset));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q.weight);
  const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd l = lambda.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
  const double n = (l * (z - q.center)).norm() - rho;

  // head = S* rho - n* grad S*' (z - z*) + b
  std::vector<Index> vars;
  std::vector<double> coeffs;
  double rhs = tl.value * rho;
  for (std::size_t j = 0; j < ns.state_indices.size(); ++j) {
    const double g = n * tl.dz[static_cast<Eigen::Index>(j)];
    vars.push_back(lay.state(k, ns.state_indices[j]));
    coeffs.push_back(g);
    rhs += g * z[static_cast<Eigen::Index>(j)];
  }
  vars.push_back(add_buffer(p, lay));
  coeffs.push_back(-1.0);
  if (!(tl.value > 0.0)) {
    p.add_less_equal(vars, coeffs, rhs);
    return;
  }
  const Index head = p.add_variable();
  vars.push_back(head);
  coeffs.push_back(1.0);
  p.add_equality(vars, coeffs, rhs);

  const double scale = std::max(1.0, lambda.maxCoeff());
  std::vector<Index> tail;
  for (Eigen::Index r = 0; r < l.rows(); ++r) {
    if (lambda[r] <= 1e-14 * scale) continue;
    // y_r = S* l_r' (z - center)
    const Index y = p.add_variable();
    std::vector<Index> idx{y};
    std::vector<double> coef{1.0};
    double row_rhs = 0.0;
    for (std::size_t j = 0; j < ns.state_indices.size(); ++j) {
      const double g = tl.value * l(r, static_cast<Eigen::Index>(j));
      if (g == 0.0) continue;
      idx.push_back(lay.state(k, ns.state_indices[j]));
      coef.push_back(-g);
      row_rhs -= g * q.center[static_cast<Eigen::Index>(j)];
    }
    p.add_equality(idx, coef, row_rhs);
    tail.push_back(y);
  }
  p.add_cone(head, std::move(tail));
}

}  // namespace

Subproblem build_subproblem(const NonconvexProblem& problem, const Trajectory& prev,
                            const DiscreteDynamics& dyn, const ScvxConfig& cfg) {
  const int K = dyn.nodes;
  const int nxv = problem.model.state_dim();
  const int nuv = problem.model.control_dim();
  const int vehicles = problem.vehicles();

  SubproblemLayout lay;
  lay.nodes = K;
  lay.nx = problem.state_dim();
  lay.nu = problem.control_dim();
  lay.nalpha = problem.slack_dim();
  lay.node_size = lay.nx + lay.nu + lay.nalpha;
  lay.vehicles = vehicles;
  if (prev.nodes() != K || prev.states.rows() != lay.nx || prev.controls.rows() != lay.nu ||
      prev.slacks.rows() != lay.nalpha) {
    throw ValidationError("subproblem: reference iterate does not match the problem dimensions");
  }
  if (dyn.a_d.rows() != nxv || dyn.b_minus.cols() != nuv) {
    throw ValidationError("subproblem: discretization does not match the vehicle model");
  }

  ConicProgram p(static_cast<Index>(K) * lay.node_size);
  lay.virtual_begin = p.add_variables(static_cast<Index>(K - 1) * lay.nx);
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < lay.nalpha; ++i) p.add_nonneg(lay.slack(k, i));
  }

  // Boundary states and hover controls.
  const Eigen::VectorXd hover = problem.hover_control();
  const int d = problem.model.spatial_dim;
  for (int v = 0; v < vehicles; ++v) {
    const auto& ri = problem.boundary.initial_positions[static_cast<std::size_t>(v)];
    const auto& rf = problem.boundary.final_positions[static_cast<std::size_t>(v)];
    for (int i = 0; i < nxv; ++i) {
      const double x0 = i < d ? ri[i] : 0.0;
      const double xf = i < d ? rf[i] : 0.0;
      p.add_equality({lay.state(0, v * nxv + i)}, {1.0}, x0);
      p.add_equality({lay.state(K - 1, v * nxv + i)}, {1.0}, xf);
    }
  }
  for (int i = 0; i < lay.nu; ++i) {
    p.add_equality({lay.control(0, i)}, {1.0}, hover[i]);
    p.add_equality({lay.control(K - 1, i)}, {1.0}, hover[i]);
  }

  // x_{k+1} = A x_k + B- u_k + B+ u_{k+1} + w + nu_k, per vehicle.
  std::vector<Index> vars;
  std::vector<double> coeffs;
  for (int k = 0; k + 1 < K; ++k) {
    for (int v = 0; v < vehicles; ++v) {
      for (int r = 0; r < nxv; ++r) {
        vars.clear();
        coeffs.clear();
        vars.push_back(lay.state(k + 1, v * nxv + r));
        coeffs.push_back(1.0);
        for (int c = 0; c < nxv; ++c) {
          vars.push_back(lay.state(k, v * nxv + c));
          coeffs.push_back(-dyn.a_d(r, c));
        }
        for (int c = 0; c < nuv; ++c) {
          vars.push_back(lay.control(k, v * nuv + c));
          coeffs.push_back(-dyn.b_minus(r, c));
          vars.push_back(lay.control(k + 1, v * nuv + c));
          coeffs.push_back(-dyn.b_plus(r, c));
        }
        vars.push_back(lay.virtual_control(k, v * nxv + r));
        coeffs.push_back(-1.0);
        p.add_equality(vars, coeffs, dyn.drift[r]);
      }
    }
  }

  // Linearized state-triggered constraints and payload link. Boundary nodes
  // are pinned and validated up front, so only interior nodes get rows.
  const auto link = problem.payload_link();
  // Slacks that no row touches (dormant STC, boundary node) would be free
  // and unbounded; pin them to their previous values instead.
  std::vector<char> slack_used(static_cast<std::size_t>(lay.nalpha));
  auto pin_unused_slacks = [&](int k) {
    for (int i = 0; i < lay.nalpha; ++i) {
      if (slack_used[static_cast<std::size_t>(i)]) continue;
      p.add_equality({lay.slack(k, i)}, {1.0}, prev.slacks(i, k));
    }
  };
  std::fill(slack_used.begin(), slack_used.end(), 0);
  pin_unused_slacks(0);
  pin_unused_slacks(K - 1);
  for (int k = 1; k + 1 < K; ++k) {
    std::fill(slack_used.begin(), slack_used.end(), 0);
    for (const NodeStc& ns : problem.stcs_at(dyn.node_time(k))) {
      const int na = ns.stc.slack_count();
      Eigen::VectorXd z(static_cast<Eigen::Index>(ns.state_indices.size()));
      for (std::size_t j = 0; j < ns.state_indices.size(); ++j) {
        z[static_cast<Eigen::Index>(j)] = prev.states(ns.state_indices[j], k);
      }
      const Eigen::VectorXd alpha = prev.slacks.col(k).segment(ns.slack_offset, na);
      if (cfg.stc_form == StcSubproblemForm::ConvexFactor &&
          ns.stc.constraint_form == ConstraintForm::InequalityNoSlack &&
          ns.stc.constraints.front().quadratic) {
        add_convex_factor_row(p, ns, lay, k, z);
        continue;
      }
      const StcLinearization lin = linearize_compound(ns.stc, z, alpha);
      if (lin.dz.isZero(0.0) && (na == 0 || lin.dalpha.isZero(0.0))) continue;

      vars.clear();
      coeffs.clear();
      double rhs = lin.dz.dot(z) - lin.value;
      for (std::size_t j = 0; j < ns.state_indices.size(); ++j) {
        vars.push_back(lay.state(k, ns.state_indices[j]));
        coeffs.push_back(lin.dz[static_cast<Eigen::Index>(j)]);
      }
      for (int j = 0; j < na; ++j) {
        if (lin.dalpha[j] == 0.0) continue;
        vars.push_back(lay.slack(k, ns.slack_offset + j));
        coeffs.push_back(lin.dalpha[j]);
        rhs += lin.dalpha[j] * alpha[j];
        slack_used[static_cast<std::size_t>(ns.slack_offset + j)] = 1;
      }
      if (ns.stc.constraint_form == ConstraintForm::InequalityNoSlack) {
        vars.push_back(add_buffer(p, lay));
        coeffs.push_back(-1.0);
        p.add_less_equal(vars, coeffs, rhs);
      } else {
        p.add_equality(vars, coeffs, rhs);
      }
    }
    pin_unused_slacks(k);
    if (link) {
      const PayloadLink::Row row = link->linearize(problem.position(prev.states.col(k), 0),
                                                   problem.position(prev.states.col(k), 1));
      vars.clear();
      coeffs.clear();
      for (int i = 0; i < d; ++i) {
        vars.push_back(lay.state(k, i));
        coeffs.push_back(row.coeff_r1[i]);
        vars.push_back(lay.state(k, nxv + i));
        coeffs.push_back(row.coeff_r2[i]);
      }
      p.add_equality(vars, coeffs, row.rhs);
    }
  }

  // Speed and control cones, fuel.
  const Index vmax = p.add_constant(problem.speed_limit(dyn.dt));
  ControlConeContext ctx;
  std::vector<Index> tail(static_cast<std::size_t>(d));
  std::vector<Index> u(static_cast<std::size_t>(nuv));
  for (int k = 0; k < K; ++k) {
    const double w = (k == 0 || k == K - 1) ? 0.5 * dyn.dt : dyn.dt;
    for (int v = 0; v < vehicles; ++v) {
      for (int i = 0; i < d; ++i) tail[static_cast<std::size_t>(i)] = lay.state(k, v * nxv + d + i);
      p.add_cone(vmax, tail);
      for (int i = 0; i < nuv; ++i) u[static_cast<std::size_t>(i)] = lay.control(k, v * nuv + i);
      const ControlConeVars cone = build_control_cone(p, problem.control, problem.model, u, ctx);
      lay.thrust_bound.push_back(cone.thrust_bound);
      p.add_cost(cone.thrust_bound, w);
    }
  }

  // Soft trust region on the leading block of each node vector.
  const Eigen::Index m = cfg.trust_weight.rows();
  if (m > 0 && !cfg.trust_weight.isZero(0.0)) {
    std::vector<Index> block(static_cast<std::size_t>(m));
    for (int k = 0; k < K; ++k) {
      for (Eigen::Index i = 0; i < m; ++i) block[static_cast<std::size_t>(i)] = lay.state(k, static_cast<int>(i));
      const Eigen::VectorXd center = prev.node_vector(k).head(m);
      const Index s = p.add_variable();
      p.set_cost(s, 1.0);
      add_quadratic_epigraph(p, cfg.trust_weight, block,
                             s, std::span<const double>(center.data(), static_cast<std::size_t>(m)));
    }
  }

  // Virtual-control 1-norm.
  std::vector<double> weights;
  std::vector<Index> nu_vars;
  for (int k = 0; k + 1 < K; ++k) {
    for (int i = 0; i < lay.nx; ++i) {
      weights.push_back(cfg.virtual_weight[i]);
      nu_vars.push_back(lay.virtual_control(k, i));
    }
  }
  add_abs_penalty(p, weights, nu_vars);
  for (Index b : lay.stc_buffer) p.add_cost(b, cfg.buffer_weight);

  return {std::move(p), std::move(lay)};
}

Trajectory extract_trajectory(const Subproblem& sub, const Eigen::VectorXd& primal, double t_f) {
  const SubproblemLayout& lay = sub.layout;
  Trajectory t;
  t.t_f = t_f;
  t.states.resize(lay.nx, lay.nodes);
  t.controls.resize(lay.nu, lay.nodes);
  t.slacks.resize(lay.nalpha, lay.nodes);
  t.thrust_bounds.resize(lay.vehicles, lay.nodes);
  t.virtual_controls.resize(lay.nx, lay.nodes - 1);
  t.stc_buffers.resize(static_cast<Eigen::Index>(lay.stc_buffer.size()));
  for (std::size_t i = 0; i < lay.stc_buffer.size(); ++i) {
    t.stc_buffers[static_cast<Eigen::Index>(i)] = std::max(0.0, primal[lay.stc_buffer[i]]);
  }
  for (int k = 0; k < lay.nodes; ++k) {
    for (int i = 0; i < lay.nx; ++i) t.states(i, k) = primal[lay.state(k, i)];
    for (int i = 0; i < lay.nu; ++i) t.controls(i, k) = primal[lay.control(k, i)];
    // Interior-point slacks can sit a rounding error below zero.
    for (int i = 0; i < lay.nalpha; ++i) t.slacks(i, k) = std::max(0.0, primal[lay.slack(k, i)]);
    for (int v = 0; v < lay.vehicles; ++v) {
      t.thrust_bounds(v, k) = primal[lay.thrust_bound[static_cast<std::size_t>(k * lay.vehicles + v)]];
    }
    if (k + 1 < lay.nodes) {
      for (int i = 0; i < lay.nx; ++i) t.virtual_controls(i, k) = primal[lay.virtual_control(k, i)];
    }
  }
  return t;
}

void ConvergenceReport::write_text(std::ostream& out) const {
  char buf[256];
  out << "converged " << (converged ? 1 : 0) << '\n';
  out << "backend_failure " << (backend_failure ? 1 : 0) << '\n';
  out << "iterations " << iterations << '\n';
  out << "tf_retries " << tf_retries << '\n';
  std::snprintf(buf, sizeof buf, "t_f %.17g\nfuel %.17g\nfinal_j_vc %.17g\ntotal_solve_time %.9f\n",
                t_f, fuel, final_j_vc, total_solve_time);
  out << buf;
  out << "message " << message << '\n';
  out << "attempt iteration t_f fuel j_tr j_vc solve_time status\n";
  for (const IterationRecord& r : history) {
    std::snprintf(buf, sizeof buf, "%d %d %.17g %.17g %.17g %.17g %.9f %s\n", r.attempt, r.iteration,
                  r.t_f, r.fuel, r.j_tr, r.j_vc, r.solve_time, to_string(r.status));
    out << buf;
  }
}

ScvxResult solve_scvx(const NonconvexProblem& problem, const DiscreteDynamics& dyn,
                      const ScvxConfig& cfg) {
  cfg.validate(problem);
  if (dyn.nodes != problem.nodes) throw ValidationError("solve: discretization node count differs from K");
  const int K = dyn.nodes;
  const SolverSettings settings{cfg.solver_tol, 100};

  ScvxResult out;
  ConvergenceReport& rep = out.report;
  DiscreteDynamics d = dyn;
  for (int attempt = 0; attempt <= cfg.max_tf_retries; ++attempt) {
    if (attempt > 0) d = discretize_foh(problem.model, d.t_f * cfg.tf_growth, K);
    rep.tf_retries = attempt;
    rep.t_f = d.t_f;
    rep.backend_failure = false;
    Trajectory prev = initialize(problem, K, d.t_f);
    for (int it = 1; it <= cfg.max_iters; ++it) {
      const Subproblem sub = build_subproblem(problem, prev, d, cfg);
      const SolveResult res = solve(sub.program, settings);
      rep.iterations += 1;
      rep.total_solve_time += res.solve_time;

      IterationRecord rec;
      rec.attempt = attempt;
      rec.iteration = it;
      rec.t_f = d.t_f;
      rec.solve_time = res.solve_time;
      rec.status = res.status;
      if (res.status != SolveStatus::Optimal) {
        rep.history.push_back(rec);
        rep.backend_failure = true;
        break;
      }
      Trajectory next = extract_trajectory(sub, *res.primal, d.t_f);
      const auto [j_tr, j_vc] = convergence_metrics(next, prev, cfg);
      rec.fuel = fuel_cost(next);
      rec.j_tr = j_tr;
      rec.j_vc = j_vc;
      rep.history.push_back(rec);
      rep.fuel = rec.fuel;
      rep.final_j_vc = j_vc;
      prev = std::move(next);
      if (j_tr < cfg.eps_tr && j_vc < cfg.eps_vc) {
        rep.converged = true;
        rep.message = "converged";
        out.trajectory = std::move(prev);
        return out;
      }
    }
    out.trajectory = std::move(prev);
  }

  char buf[160];
  if (rep.backend_failure) {
    std::snprintf(buf, sizeof buf, "subproblem solve failed (%s) after %d t_f retries",
                  to_string(rep.history.back().status), rep.tf_retries);
  } else {
    std::snprintf(buf, sizeof buf, "not converged after %d t_f retries; final J_vc = %.6g",
                  rep.tf_retries, rep.final_j_vc);
  }
  rep.message = buf;
  return out;
}

ScvxResult solve_scvx(const NonconvexProblem& problem, const ScvxConfig& cfg) {
  return solve_scvx(problem, discretize_foh(problem.model, problem.boundary.t_f, problem.nodes), cfg);
}

}  // namespace quadstc
