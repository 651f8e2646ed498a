#include "quadstc/dynamics.hpp"

#include <cmath>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

namespace quadstc {

void QuadModel::validate() const {
  if (!(mass > 0.0)) throw ValidationError("model: mass must be positive");
  if (!(drag >= 0.0)) throw ValidationError("model: drag must be nonnegative");
  if (!(gravity > 0.0)) throw ValidationError("model: gravity must be positive");
  if (spatial_dim != 2 && spatial_dim != 3) throw ValidationError("model: spatial_dim must be 2 or 3");
}

Eigen::MatrixXd QuadModel::a() const {
  const int d = spatial_dim;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  a.topRightCorner(d, d).setIdentity();
  a.bottomRightCorner(d, d) = -drag * Eigen::MatrixXd::Identity(d, d);
  return a;
}

Eigen::MatrixXd QuadModel::b() const {
  const int d = spatial_dim;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2 * d, d);
  b.bottomRows(d) = Eigen::MatrixXd::Identity(d, d) / mass;
  return b;
}

Eigen::VectorXd QuadModel::drift() const {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(2 * spatial_dim);
  if (spatial_dim == 3) w[3] = -gravity;
  return w;
}

void ControlSetParams::validate(const QuadModel& model) const {
  if (!(thrust_min > 0.0)) throw ValidationError("control: thrust_min must be positive");
  if (!(thrust_max >= thrust_min)) throw ValidationError("control: thrust_max must be >= thrust_min");
  if (!(tilt_max > 0.0 && tilt_max < M_PI)) throw ValidationError("control: tilt_max must lie in (0, pi)");
  if (altitude_hold) {
    const double w = model.weight();
    if (!(thrust_min <= w && w < thrust_max)) {
      throw ValidationError("control: altitude hold requires T_min <= m g < T_max (m g = " +
                            std::to_string(w) + " N)");
    }
  }
}

Eigen::VectorXd DiscreteDynamics::step(const Eigen::VectorXd& x, const Eigen::VectorXd& u_k,
                                       const Eigen::VectorXd& u_next) const {
  return a_d * x + b_minus * u_k + b_plus * u_next + drift;
}

DiscreteDynamics discretize_foh(const QuadModel& model, double t_f, int nodes) {
  model.validate();
  if (nodes < 2) throw ValidationError("discretization needs at least 2 nodes");
  if (!(t_f > 0.0)) throw ValidationError("final time must be positive");

  const int nx = model.state_dim();
  const int nu = model.control_dim();
  const double dt = t_f / (nodes - 1);

  // Augmented state (x, u(t), du/dt, 1): x' = A x + B u + E w, u' = du/dt.
  const int na = nx + 2 * nu + 1;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(na, na);
  m.topLeftCorner(nx, nx) = model.a();
  m.block(0, nx, nx, nu) = model.b();
  m.block(0, na - 1, nx, 1) = model.drift();
  m.block(nx, nx + nu, nu, nu).setIdentity();
  const Eigen::MatrixXd phi = (m * dt).exp();

  DiscreteDynamics d;
  d.dt = dt;
  d.t_f = t_f;
  d.nodes = nodes;
  d.a_d = phi.topLeftCorner(nx, nx);
  const Eigen::MatrixXd phi_u = phi.block(0, nx, nx, nu);
  const Eigen::MatrixXd phi_rate = phi.block(0, nx + nu, nx, nu);
  d.b_plus = phi_rate / dt;
  d.b_minus = phi_u - d.b_plus;
  d.drift = phi.block(0, na - 1, nx, 1);
  return d;
}

DiscreteDynamics discretize_foh_drag_free(const QuadModel& model, double t_f, int nodes) {
  model.validate();
  if (model.drag != 0.0) throw ValidationError("closed-form discretization requires zero drag");
  if (nodes < 2) throw ValidationError("discretization needs at least 2 nodes");
  if (!(t_f > 0.0)) throw ValidationError("final time must be positive");
  const int d = model.spatial_dim;
  const double dt = t_f / (nodes - 1);
  const double m = model.mass;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);

  DiscreteDynamics out;
  out.dt = dt;
  out.t_f = t_f;
  out.nodes = nodes;
  out.a_d = Eigen::MatrixXd::Identity(2 * d, 2 * d);
  out.a_d.topRightCorner(d, d) = dt * eye;
  out.b_minus = Eigen::MatrixXd::Zero(2 * d, d);
  out.b_minus.topRows(d) = dt * dt / (3.0 * m) * eye;
  out.b_minus.bottomRows(d) = dt / (2.0 * m) * eye;
  out.b_plus = Eigen::MatrixXd::Zero(2 * d, d);
  out.b_plus.topRows(d) = dt * dt / (6.0 * m) * eye;
  out.b_plus.bottomRows(d) = dt / (2.0 * m) * eye;
  out.drift = Eigen::VectorXd::Zero(2 * d);
  if (d == 3) {
    out.drift[0] = -model.gravity * dt * dt / 2.0;
    out.drift[3] = -model.gravity * dt;
  }
  return out;
}

namespace {

// phi_j(x) = sum_{i>=0} (-x)^i / (i + j)!, so that
//   int_0^t e^{-k(t-s)} ds = t phi_1(kt), etc.
double phi(int j, double x) {
  if (std::abs(x) < 0.1) {
    double fact = 1.0;
    for (int i = 2; i <= j; ++i) fact *= i;
    double term = 1.0 / fact;
    double sum = term;
    for (int i = 1; i < 20; ++i) {
      term *= -x / (i + j);
      sum += term;
    }
    return sum;
  }
  const double em = std::exp(-x);
  switch (j) {
    case 1: return -std::expm1(-x) / x;
    case 2: return (x - 1.0 + em) / (x * x);
    case 3: return (0.5 * x * x - x + 1.0 - em) / (x * x * x);
    default: break;
  }
  return 0.0;
}

}  // namespace

Eigen::VectorXd propagate_to(const QuadModel& model, const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& u_k, const Eigen::VectorXd& u_next,
                             double dt, double tau) {
  const int d = model.spatial_dim;
  const double k = model.drag;
  const double kt = k * tau;
  const double p1 = phi(1, kt);
  const double p2 = phi(2, kt);
  const double p3 = phi(3, kt);
  const double decay = std::exp(-kt);
  Eigen::VectorXd x(2 * d);
  for (int i = 0; i < d; ++i) {
    // Per-axis acceleration a0 + a1 s on [0, dt].
    double a0 = u_k[i] / model.mass;
    if (d == 3 && i == 0) a0 -= model.gravity;
    const double a1 = (u_next[i] - u_k[i]) / (model.mass * dt);
    const double r0 = x0[i];
    const double v0 = x0[d + i];
    x[d + i] = decay * v0 + a0 * tau * p1 + a1 * tau * tau * p2;
    x[i] = r0 + v0 * tau * p1 + a0 * tau * tau * p2 + a1 * tau * tau * tau * p3;
  }
  return x;
}

Eigen::MatrixXd propagate_dense(const QuadModel& model, const Eigen::VectorXd& x0,
                                const Eigen::VectorXd& u_k, const Eigen::VectorXd& u_next,
                                double dt, int samples) {
  if (samples < 2) throw ValidationError("dense propagation needs at least 2 samples");
  Eigen::MatrixXd out(model.state_dim(), samples);
  out.col(0) = x0;
  for (int i = 1; i < samples; ++i) {
    const double tau = dt * static_cast<double>(i) / (samples - 1);
    out.col(i) = propagate_to(model, x0, u_k, u_next, dt, tau);
  }
  return out;
}

ControlConeVars build_control_cone(ConicProgram& program, const ControlSetParams& params,
                                   const QuadModel& model, std::span<const Index> u) {
  ControlConeContext ctx;
  return build_control_cone(program, params, model, u, ctx);
}

ControlConeVars build_control_cone(ConicProgram& program, const ControlSetParams& params,
                                   const QuadModel& model, std::span<const Index> u,
                                   ControlConeContext& ctx) {
  params.validate(model);
  if (static_cast<int>(u.size()) != model.control_dim()) {
    throw ValidationError("control cone: control dimension mismatch");
  }
  const Index gamma = program.add_variable();
  const double cos_tilt = std::cos(params.tilt_max);

  std::vector<Index> tail;
  if (params.altitude_hold) {
    if (ctx.weight_var < 0) ctx.weight_var = program.add_constant(model.weight());
    tail.push_back(ctx.weight_var);
  }
  tail.insert(tail.end(), u.begin(), u.end());
  program.add_cone(gamma, tail);

  const Index g1[] = {gamma};
  const double minus_one[] = {-1.0};
  const double plus_one[] = {1.0};
  program.add_less_equal(g1, minus_one, -params.thrust_min);
  program.add_less_equal(g1, plus_one, params.thrust_max);

  if (params.altitude_hold) {
    // cos(theta) Gamma <= m g
    const double c[] = {cos_tilt};
    program.add_less_equal(g1, c, model.weight());
  } else {
    // cos(theta) Gamma - e_up'u <= 0
    const Index v[] = {gamma, u[0]};
    const double c[] = {cos_tilt, -1.0};
    program.add_less_equal(v, c, 0.0);
  }
  return {gamma};
}

double horizontal_thrust_bound(const ControlSetParams& params, const QuadModel& model) {
  const double w = model.weight();
  return std::min(std::sqrt(params.thrust_max * params.thrust_max - w * w),
                  w * std::tan(params.tilt_max));
}

double thrust_magnitude(const ControlSetParams& params, const QuadModel& model,
                        const Eigen::VectorXd& u) {
  if (params.altitude_hold) return std::hypot(model.weight(), u.norm());
  return u.norm();
}

bool thrust_admissible(const ControlSetParams& params, const QuadModel& model,
                       const Eigen::VectorXd& u, double tol) {
  const double mag = thrust_magnitude(params, model, u);
  const double vertical = params.altitude_hold ? model.weight() : u[0];
  if (mag < params.thrust_min - tol || mag > params.thrust_max + tol) return false;
  return std::cos(params.tilt_max) * mag <= vertical + tol;
}

}  // namespace quadstc
