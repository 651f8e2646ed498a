#pragma once

// Independent reference computations used by the tests. None of these call
// into the library code they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace oracle {

/// Right-hand side of r' = v, v' = -kd v + u/m - g e_up (e_up = axis 0 in 3-D,
/// no gravity in the 2-D horizontal model).
inline Eigen::VectorXd quad_rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double m,
                                double kd, double g) {
  const Eigen::Index d = x.size() / 2;
  Eigen::VectorXd dx(x.size());
  dx.head(d) = x.tail(d);
  dx.tail(d) = -kd * x.tail(d) + u / m;
  if (d == 3) dx[d] -= g;
  return dx;
}

/// Classical RK4 over [0, dt] with u linearly interpolated from u0 to u1.
inline Eigen::VectorXd rk4_foh(Eigen::VectorXd x, const Eigen::VectorXd& u0,
                               const Eigen::VectorXd& u1, double dt, double m, double kd, double g,
                               int steps = 2000) {
  const double h = dt / steps;
  auto u = [&](double t) -> Eigen::VectorXd { return u0 + (t / dt) * (u1 - u0); };
  for (int i = 0; i < steps; ++i) {
    const double t = i * h;
    const Eigen::VectorXd k1 = quad_rhs(x, u(t), m, kd, g);
    const Eigen::VectorXd k2 = quad_rhs(x + 0.5 * h * k1, u(t + 0.5 * h), m, kd, g);
    const Eigen::VectorXd k3 = quad_rhs(x + 0.5 * h * k2, u(t + 0.5 * h), m, kd, g);
    const Eigen::VectorXd k4 = quad_rhs(x + h * k3, u(t + h), m, kd, g);
    x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return x;
}

/// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

inline double sigma_hat(double g) { return g < 0.0 ? -g : 0.0; }

/// Truth table of  (AND_j g_j < 0  |  OR_j g_j < 0)  =>  OR_j c_j <= 0.
inline bool implication(bool and_mode, const std::vector<double>& g, const std::vector<double>& c) {
  bool trig = and_mode;
  for (double gj : g) trig = and_mode ? (trig && gj < 0.0) : (trig || gj < 0.0);
  if (!trig) return true;
  return std::any_of(c.begin(), c.end(), [](double v) { return v <= 0.0; });
}

/// Witness search for the slack form: does some alpha >= 0 make
/// S * prod(c_j + alpha_j) == 0? Tries alpha_j = -c_j (when nonnegative) for
/// each j with the others zero, plus the all-zero vector.
inline bool slack_witness(double trigger_factor, const std::vector<double>& c) {
  auto h = [&](const std::vector<double>& a) {
    double p = trigger_factor;
    for (std::size_t j = 0; j < c.size(); ++j) p *= c[j] + a[j];
    return p;
  };
  std::vector<double> a(c.size(), 0.0);
  if (h(a) == 0.0) return true;
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (-c[j] >= 0.0) {
      std::fill(a.begin(), a.end(), 0.0);
      a[j] = -c[j];
      if (h(a) == 0.0) return true;
    }
  }
  return false;
}

inline double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                                     const Eigen::Vector2d& b, int samples = 200001) {
  // Brute force over a fine parametrization of the segment.
  double best = INFINITY;
  for (int i = 0; i < samples; ++i) {
    const double s = static_cast<double>(i) / (samples - 1);
    best = std::min(best, (a + s * (b - a) - p).norm());
  }
  return best;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace oracle
