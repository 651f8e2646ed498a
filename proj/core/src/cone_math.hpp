#pragma once

// Jordan-algebra helpers for the nonnegative orthant and second-order cones,
// plus Nesterov-Todd scaling. A "block" is either a run of orthant entries or
// one second-order cone (head first).

#include <cmath>
#include <limits>

#include <Eigen/Core>

namespace quadstc::detail {

using Vec = Eigen::VectorXd;
using Seg = Eigen::Ref<Vec>;
using CSeg = Eigen::Ref<const Vec>;

/// u0^2 - |u1|^2, factored to keep its sign accurate near the boundary.
inline double soc_residual(CSeg u) {
  const double n1 = u.tail(u.size() - 1).norm();
  return (u[0] - n1) * (u[0] + n1);
}

/// u o v for a second-order cone.
inline void soc_product(CSeg u, CSeg v, Seg out) {
  const Eigen::Index n = u.size();
  const double u0 = u[0];
  const double v0 = v[0];
  const double head = u.dot(v);
  out.tail(n - 1) = u0 * v.tail(n - 1) + v0 * u.tail(n - 1);
  out[0] = head;
}

/// Solves lambda o x = v for x (lambda in the cone interior).
inline void soc_division(CSeg lambda, CSeg v, Seg out) {
  const Eigen::Index n = lambda.size();
  const double rho = soc_residual(lambda);
  const double l0 = lambda[0];
  const double x0 = (l0 * v[0] - lambda.tail(n - 1).dot(v.tail(n - 1))) / rho;
  out.tail(n - 1) = (v.tail(n - 1) - x0 * lambda.tail(n - 1)) / l0;
  out[0] = x0;
}

/// Largest alpha >= 0 with u + alpha d in the cone (u interior). +inf when
/// the ray never leaves.
inline double soc_max_step(CSeg u, CSeg d) {
  const Eigen::Index n = u.size();
  const double a = d[0] * d[0] - d.tail(n - 1).squaredNorm();
  const double b = u[0] * d[0] - u.tail(n - 1).dot(d.tail(n - 1));
  const double c = std::max(soc_residual(u), 0.0);
  constexpr double inf = std::numeric_limits<double>::infinity();
  double best = inf;
  if (a == 0.0) {
    if (b < 0.0) best = -c / (2.0 * b);
  } else {
    const double disc = b * b - a * c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      const double q = -(b + std::copysign(sq, b));
      const double r1 = q / a;
      const double r2 = q != 0.0 ? c / q : inf;
      if (r1 > 0.0) best = std::min(best, r1);
      if (r2 > 0.0) best = std::min(best, r2);
    }
  }
  // Head must stay positive as well; it can only fail through the far nappe.
  if (d[0] < 0.0) best = std::min(best, -u[0] / d[0]);
  return best;
}

inline double orthant_max_step(CSeg u, CSeg d) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (d[i] < 0.0) best = std::min(best, -u[i] / d[i]);
  }
  return best;
}

/// Nesterov-Todd scaling of one second-order cone: W = eta * Wbar with
/// Wbar = [w0 w1'; w1 I + w1 w1'/(1+w0)], w0^2 - |w1|^2 = 1, so that
/// W z = W^{-1} s = lambda.
struct SocScaling {
  double eta = 1.0;
  Vec w;  // normalized wbar

  bool update(CSeg s, CSeg z) {
    const double js = soc_residual(s);
    const double jz = soc_residual(z);
    if (!(js > 0.0) || !(jz > 0.0) || s[0] <= 0.0 || z[0] <= 0.0) return false;
    const double ns = std::sqrt(js);
    const double nz = std::sqrt(jz);
    const Eigen::Index n = s.size();
    const Vec sb = s / ns;
    const Vec zb = z / nz;
    const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
    w.resize(n);
    w[0] = (sb[0] + zb[0]) / (2.0 * gamma);
    w.tail(n - 1) = (sb.tail(n - 1) - zb.tail(n - 1)) / (2.0 * gamma);
    eta = std::sqrt(ns / nz);
    return true;
  }

  void apply(CSeg v, Seg out) const {
    const Eigen::Index n = v.size();
    const double w0 = w[0];
    const double dot1 = w.tail(n - 1).dot(v.tail(n - 1));
    const double v0 = v[0];
    out.tail(n - 1) = eta * (v.tail(n - 1) + (dot1 / (1.0 + w0) + v0) * w.tail(n - 1));
    out[0] = eta * (w0 * v0 + dot1);
  }

  void apply_inverse(CSeg v, Seg out) const {
    const Eigen::Index n = v.size();
    const double w0 = w[0];
    const double dot1 = w.tail(n - 1).dot(v.tail(n - 1));
    const double v0 = v[0];
    out.tail(n - 1) = (v.tail(n - 1) + (dot1 / (1.0 + w0) - v0) * w.tail(n - 1)) / eta;
    out[0] = (w0 * v0 - dot1) / eta;
  }

  /// Dense W^2 = eta^2 (2 w w' - J).
  Eigen::MatrixXd squared() const {
    const Eigen::Index n = w.size();
    Eigen::MatrixXd m = 2.0 * w * w.transpose();
    m(0, 0) -= 1.0;
    for (Eigen::Index i = 1; i < n; ++i) m(i, i) += 1.0;
    return eta * eta * m;
  }
};

}  // namespace quadstc::detail
