// Primal-dual interior-point method for
//
//   minimize c'x  s.t.  A x = b,  G x + s = h,  s in K
//
// K is a product of one nonnegative orthant and second-order cones. The
// iteration follows the homogeneous self-dual embedding with Nesterov-Todd
// scaling and a Mehrotra predictor-corrector step; the scaled KKT system is
// factored by a sparse LDL' with static and dynamic regularization plus
// iterative refinement.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>

#include <Eigen/SparseCore>

#include "cone_math.hpp"
#include "ldl.hpp"
#include "quadstc/conic.hpp"

namespace quadstc {

namespace {

using detail::SocScaling;
using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

constexpr double kStaticReg = 1e-8;
constexpr double kStepFraction = 0.99;
constexpr int kRefineSteps = 10;
constexpr int kStallIters = 5;
constexpr int kRuizPasses = 10;

class InteriorPoint {
 public:
  InteriorPoint(const ConicProgram& program, const SolverSettings& settings)
      : program_(program), settings_(settings) {}

  SolveResult run();

 private:
  bool presolve(SolveResult& early);
  void equilibrate();
  void assemble_kkt();
  bool update_scaling();
  void write_scaling_into_kkt();
  bool factor();
  VectorXd solve_kkt(const VectorXd& rhs) const;
  VectorXd kkt_times(const VectorXd& v) const;

  // Cone-wise operations over vectors of length m_.
  VectorXd apply_w(const VectorXd& v) const;
  VectorXd apply_w_inverse(const VectorXd& v) const;
  VectorXd cone_product(const VectorXd& u, const VectorXd& v) const;
  VectorXd cone_division(const VectorXd& lambda, const VectorXd& v) const;
  VectorXd identity() const;
  double max_step(const VectorXd& u, const VectorXd& d) const;
  bool interior(const VectorXd& u) const;
  void bring_to_cone(VectorXd& v) const;

  struct Direction {
    VectorXd dx, dy, dz, ds;
    double dtau = 0.0;
    double dkappa = 0.0;
  };
  Direction direction(double sigma_complement, const VectorXd& ds_target, double dkappa_target,
                      const VectorXd& u1);

  const ConicProgram& program_;
  SolverSettings settings_;

  Index n_ = 0;  // variables
  Index p_ = 0;  // equalities kept after presolve
  Index m_ = 0;  // cone rows
  Index lp_ = 0;
  std::vector<Index> soc_start_;
  std::vector<Index> soc_size_;
  Index degree_ = 0;

  // Equilibrated data: a_ = E A D, g_ = F G D, b_ = E b, h_ = F h, c_ = D c,
  // with F constant over each second-order cone.
  SpMat a_, at_, g_, gt_;
  VectorXd b_, c_, h_;
  VectorXd col_scale_, eq_scale_, cone_scale_;
  double cost_scale_ = 1.0;  // c_ also carries this factor, as do y_ and z_
  double bh_norm_ = 0.0;  // of the unscaled data
  double c_norm_ = 0.0;

  SpMat kkt_;
  std::vector<double*> lp_diag_;
  std::vector<std::vector<double*>> soc_entries_;  // lower-triangle, column-major
  detail::QuasiDefiniteLdl ldl_;

  VectorXd x_, y_, z_, s_, lambda_;
  double tau_ = 1.0;
  double kappa_ = 1.0;
  VectorXd lp_w_;  // sqrt(s/z)
  std::vector<SocScaling> soc_w_;
};

bool InteriorPoint::presolve(SolveResult& early) {
  program_.validate();
  n_ = program_.num_vars();
  const Index rows = program_.num_equalities();

  std::vector<Index> row_count(static_cast<std::size_t>(rows), 0);
  std::vector<char> col_used(static_cast<std::size_t>(n_), 0);
  for (const auto& t : program_.equality_triplets()) {
    ++row_count[static_cast<std::size_t>(t.row)];
    col_used[static_cast<std::size_t>(t.col)] = 1;
  }
  std::vector<Index> row_map(static_cast<std::size_t>(rows), -1);
  std::vector<double> rhs;
  const auto& b_in = program_.equality_rhs();
  for (Index r = 0; r < rows; ++r) {
    if (row_count[static_cast<std::size_t>(r)] == 0) {
      if (std::abs(b_in[static_cast<std::size_t>(r)]) > settings_.tol) {
        early.status = SolveStatus::Infeasible;
        return false;
      }
      continue;
    }
    row_map[static_cast<std::size_t>(r)] = static_cast<Index>(rhs.size());
    rhs.push_back(b_in[static_cast<std::size_t>(r)]);
  }
  p_ = static_cast<Index>(rhs.size());

  std::vector<Eigen::Triplet<double>> at;
  at.reserve(program_.equality_triplets().size());
  for (const auto& t : program_.equality_triplets()) {
    at.emplace_back(static_cast<int>(row_map[static_cast<std::size_t>(t.row)]),
                    static_cast<int>(t.col), t.value);
  }
  a_.resize(p_, n_);
  a_.setFromTriplets(at.begin(), at.end());
  b_ = Eigen::Map<const VectorXd>(rhs.data(), p_);

  std::vector<Eigen::Triplet<double>> gt;
  Index row = 0;
  for (Index i : program_.nonneg()) {
    gt.emplace_back(static_cast<int>(row++), static_cast<int>(i), -1.0);
    col_used[static_cast<std::size_t>(i)] = 1;
  }
  lp_ = row;
  for (const auto& cone : program_.cones()) {
    soc_start_.push_back(row);
    soc_size_.push_back(static_cast<Index>(cone.tail.size()) + 1);
    gt.emplace_back(static_cast<int>(row++), static_cast<int>(cone.head), -1.0);
    col_used[static_cast<std::size_t>(cone.head)] = 1;
    for (Index i : cone.tail) {
      gt.emplace_back(static_cast<int>(row++), static_cast<int>(i), -1.0);
      col_used[static_cast<std::size_t>(i)] = 1;
    }
  }
  m_ = row;
  degree_ = lp_ + static_cast<Index>(soc_start_.size());
  g_.resize(m_, n_);
  g_.setFromTriplets(gt.begin(), gt.end());
  h_ = VectorXd::Zero(m_);
  at_ = a_.transpose();
  gt_ = g_.transpose();

  c_ = Eigen::Map<const VectorXd>(program_.cost().data(), n_);
  for (Index j = 0; j < n_; ++j) {
    // A variable appearing in no constraint with nonzero cost is an unbounded ray.
    if (!col_used[static_cast<std::size_t>(j)] && c_[j] != 0.0) {
      early.status = SolveStatus::Unbounded;
      return false;
    }
  }
  bh_norm_ = std::max(b_.size() ? b_.lpNorm<Eigen::Infinity>() : 0.0,
                      h_.size() ? h_.lpNorm<Eigen::Infinity>() : 0.0);
  c_norm_ = c_.size() ? c_.lpNorm<Eigen::Infinity>() : 0.0;
  equilibrate();
  return true;
}

void InteriorPoint::equilibrate() {
  col_scale_ = VectorXd::Ones(n_);
  eq_scale_ = VectorXd::Ones(p_);
  cone_scale_ = VectorXd::Ones(m_);
  auto clamp = [](double v) { return std::clamp(v, 1e-4, 1e4); };
  for (int pass = 0; pass < kRuizPasses; ++pass) {
    VectorXd col_max = VectorXd::Zero(n_);
    VectorXd eq_max = VectorXd::Zero(p_);
    VectorXd cone_max = VectorXd::Zero(m_);
    for (int k = 0; k < a_.outerSize(); ++k) {
      for (SpMat::InnerIterator it(a_, k); it; ++it) {
        const double v = std::abs(it.value());
        col_max[it.col()] = std::max(col_max[it.col()], v);
        eq_max[it.row()] = std::max(eq_max[it.row()], v);
      }
    }
    for (int k = 0; k < g_.outerSize(); ++k) {
      for (SpMat::InnerIterator it(g_, k); it; ++it) {
        const double v = std::abs(it.value());
        col_max[it.col()] = std::max(col_max[it.col()], v);
        cone_max[it.row()] = std::max(cone_max[it.row()], v);
      }
    }
    for (std::size_t c = 0; c < soc_start_.size(); ++c) {
      auto seg = cone_max.segment(soc_start_[c], soc_size_[c]);
      seg.setConstant(seg.maxCoeff());
    }
    VectorXd dc(n_), de(p_), dg(m_);
    for (Index j = 0; j < n_; ++j) dc[j] = col_max[j] > 0.0 ? 1.0 / std::sqrt(col_max[j]) : 1.0;
    for (Index i = 0; i < p_; ++i) de[i] = eq_max[i] > 0.0 ? 1.0 / std::sqrt(eq_max[i]) : 1.0;
    for (Index i = 0; i < m_; ++i) dg[i] = cone_max[i] > 0.0 ? 1.0 / std::sqrt(cone_max[i]) : 1.0;
    for (Index j = 0; j < n_; ++j) dc[j] = clamp(col_scale_[j] * dc[j]) / col_scale_[j];
    for (Index i = 0; i < p_; ++i) de[i] = clamp(eq_scale_[i] * de[i]) / eq_scale_[i];
    for (Index i = 0; i < m_; ++i) dg[i] = clamp(cone_scale_[i] * dg[i]) / cone_scale_[i];
    a_ = de.asDiagonal() * a_ * dc.asDiagonal();
    g_ = dg.asDiagonal() * g_ * dc.asDiagonal();
    col_scale_ = col_scale_.cwiseProduct(dc);
    eq_scale_ = eq_scale_.cwiseProduct(de);
    cone_scale_ = cone_scale_.cwiseProduct(dg);
  }
  b_ = eq_scale_.cwiseProduct(b_);
  h_ = cone_scale_.cwiseProduct(h_);
  c_ = col_scale_.cwiseProduct(c_);
  const double c_max = c_.size() ? c_.lpNorm<Eigen::Infinity>() : 0.0;
  cost_scale_ = c_max > 0.0 ? std::clamp(1.0 / c_max, 1e-4, 1e4) : 1.0;
  c_ *= cost_scale_;
  at_ = a_.transpose();
  gt_ = g_.transpose();
}

void InteriorPoint::assemble_kkt() {
  const Index dim = n_ + p_ + m_;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(n_ + p_ + a_.nonZeros() + g_.nonZeros() + 4 * m_));
  for (Index i = 0; i < n_; ++i) t.emplace_back(i, i, kStaticReg);
  for (Index i = 0; i < p_; ++i) t.emplace_back(n_ + i, n_ + i, -kStaticReg);
  for (int k = 0; k < a_.outerSize(); ++k) {
    for (SpMat::InnerIterator it(a_, k); it; ++it) t.emplace_back(n_ + it.row(), it.col(), it.value());
  }
  for (int k = 0; k < g_.outerSize(); ++k) {
    for (SpMat::InnerIterator it(g_, k); it; ++it) {
      t.emplace_back(n_ + p_ + it.row(), it.col(), it.value());
    }
  }
  const Index z0 = n_ + p_;
  for (Index i = 0; i < lp_; ++i) t.emplace_back(z0 + i, z0 + i, -1.0);
  for (std::size_t c = 0; c < soc_start_.size(); ++c) {
    const Index off = z0 + soc_start_[c];
    for (Index j = 0; j < soc_size_[c]; ++j) {
      for (Index i = j; i < soc_size_[c]; ++i) t.emplace_back(off + i, off + j, i == j ? -1.0 : 0.0);
    }
  }
  kkt_.resize(dim, dim);
  kkt_.setFromTriplets(t.begin(), t.end());
  kkt_.makeCompressed();

  lp_diag_.clear();
  for (Index i = 0; i < lp_; ++i) lp_diag_.push_back(&kkt_.coeffRef(z0 + i, z0 + i));
  soc_entries_.assign(soc_start_.size(), {});
  for (std::size_t c = 0; c < soc_start_.size(); ++c) {
    const Index off = z0 + soc_start_[c];
    for (Index j = 0; j < soc_size_[c]; ++j) {
      for (Index i = j; i < soc_size_[c]; ++i) soc_entries_[c].push_back(&kkt_.coeffRef(off + i, off + j));
    }
  }
  std::vector<int> signs(static_cast<std::size_t>(dim), -1);
  std::fill(signs.begin(), signs.begin() + n_, 1);
  ldl_.analyze(kkt_, signs);
}

bool InteriorPoint::update_scaling() {
  lp_w_.resize(lp_);
  lambda_.resize(m_);
  for (Index i = 0; i < lp_; ++i) {
    if (!(s_[i] > 0.0) || !(z_[i] > 0.0)) return false;
    lp_w_[i] = std::sqrt(s_[i] / z_[i]);
    lambda_[i] = std::sqrt(s_[i] * z_[i]);
  }
  soc_w_.resize(soc_start_.size());
  for (std::size_t c = 0; c < soc_start_.size(); ++c) {
    const Index off = soc_start_[c];
    const Index sz = soc_size_[c];
    if (!soc_w_[c].update(s_.segment(off, sz), z_.segment(off, sz))) return false;
    VectorXd l(sz);
    soc_w_[c].apply(z_.segment(off, sz), l);
    lambda_.segment(off, sz) = l;
  }
  return true;
}

void InteriorPoint::write_scaling_into_kkt() {
  for (Index i = 0; i < lp_; ++i) *lp_diag_[static_cast<std::size_t>(i)] = -lp_w_[i] * lp_w_[i];
  for (std::size_t c = 0; c < soc_start_.size(); ++c) {
    const Eigen::MatrixXd w2 = soc_w_[c].squared();
    std::size_t k = 0;
    for (Index j = 0; j < soc_size_[c]; ++j) {
      for (Index i = j; i < soc_size_[c]; ++i) *soc_entries_[c][k++] = -w2(i, j);
    }
  }
}

bool InteriorPoint::factor() {
  write_scaling_into_kkt();
  return ldl_.factor(kkt_);
}

VectorXd InteriorPoint::kkt_times(const VectorXd& v) const {
  const auto vx = v.head(n_);
  const auto vy = v.segment(n_, p_);
  const VectorXd vz = v.tail(m_);
  VectorXd out(n_ + p_ + m_);
  out.head(n_) = at_ * vy + gt_ * vz;
  out.segment(n_, p_) = a_ * vx;
  out.tail(m_) = g_ * vx - apply_w(apply_w(vz));
  return out;
}

VectorXd InteriorPoint::solve_kkt(const VectorXd& rhs) const {
  VectorXd sol = ldl_.solve(rhs);
  const double scale = 1.0 + rhs.lpNorm<Eigen::Infinity>();
  VectorXd err = rhs - kkt_times(sol);
  double err_norm = err.lpNorm<Eigen::Infinity>();
  for (int k = 0; k < kRefineSteps && err_norm > 1e-14 * scale; ++k) {
    const VectorXd next = sol + ldl_.solve(err);
    VectorXd next_err = rhs - kkt_times(next);
    const double next_norm = next_err.lpNorm<Eigen::Infinity>();
    if (!(next_norm < 0.9 * err_norm)) {
      if (next_norm < err_norm) sol = next;
      break;
    }
    sol = next;
    err = std::move(next_err);
    err_norm = next_norm;
  }
  return sol;
}

VectorXd InteriorPoint::apply_w(const VectorXd& v) const {
  VectorXd out(m_);
  out.head(lp_) = lp_w_.cwiseProduct(v.head(lp_));
  for (std::size_t c = 0; c < soc_start_.size(); ++c) {
    const Index off = soc_start_[c];
    const Index sz = soc_size_[c];
    VectorXd tmp(sz);
    soc_w_[c].apply(v.segment(off, sz), tmp);
    out.segment(off, sz) = tmp;
  }
  return out;
}

VectorXd InteriorPoint::apply_w_inverse(const VectorXd& v) const {
  VectorXd out(m_);
  out.head(lp_) = v.head(lp_).cwiseQuotient(lp_w_);
  for (std::size_t c = 0; c < soc_start_.size(); ++c) {
    const Index off = soc_start_[c];
    const Index sz = soc_size_[c];
    VectorXd tmp(sz);
    soc_w_[c].apply_inverse(v.segment(off, sz), tmp);
    out.segment(off, sz) = tmp;
  }
  return out;
}

VectorXd InteriorPoint::cone_product(const VectorXd& u, const VectorXd& v) const {
  VectorXd out(m_);
  out.head(lp_) = u.head(lp_).cwiseProduct(v.head(lp_));
  for (std::size_t c = 0; c < soc_start_.size(); ++c) {
    const Index off = soc_start_[c];
    const Index sz = soc_size_[c];
    VectorXd tmp(sz);
    detail::soc_product(u.segment(off, sz), v.segment(off, sz), tmp);
    out.segment(off, sz) = tmp;
  }
  return out;
}

VectorXd InteriorPoint::cone_division(const VectorXd& lambda, const VectorXd& v) const {
  VectorXd out(m_);
  out.head(lp_) = v.head(lp_).cwiseQuotient(lambda.head(lp_));
  for (std::size_t c = 0; c < soc_start_.size(); ++c) {
    const Index off = soc_start_[c];
    const Index sz = soc_size_[c];
    VectorXd tmp(sz);
    detail::soc_division(lambda.segment(off, sz), v.segment(off, sz), tmp);
    out.segment(off, sz) = tmp;
  }
  return out;
}

VectorXd InteriorPoint::identity() const {
  VectorXd e = VectorXd::Zero(m_);
  e.head(lp_).setOnes();
  for (Index off : soc_start_) e[off] = 1.0;
  return e;
}

bool InteriorPoint::interior(const VectorXd& u) const {
  for (Index i = 0; i < lp_; ++i) {
    if (!(u[i] > 0.0)) return false;
  }
  for (std::size_t c = 0; c < soc_start_.size(); ++c) {
    const auto seg = u.segment(soc_start_[c], soc_size_[c]);
    if (!(seg[0] > 0.0) || !(detail::soc_residual(seg) > 0.0)) return false;
  }
  return true;
}

double InteriorPoint::max_step(const VectorXd& u, const VectorXd& d) const {
  double best = detail::orthant_max_step(u.head(lp_), d.head(lp_));
  for (std::size_t c = 0; c < soc_start_.size(); ++c) {
    const Index off = soc_start_[c];
    const Index sz = soc_size_[c];
    best = std::min(best, detail::soc_max_step(u.segment(off, sz), d.segment(off, sz)));
  }
  return best;
}

void InteriorPoint::bring_to_cone(VectorXd& v) const {
  // alpha = smallest shift along e that lands on the cone boundary.
  double alpha = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < lp_; ++i) alpha = std::max(alpha, -v[i]);
  for (std::size_t c = 0; c < soc_start_.size(); ++c) {
    const Index off = soc_start_[c];
    const Index sz = soc_size_[c];
    alpha = std::max(alpha, v.segment(off + 1, sz - 1).norm() - v[off]);
  }
  if (alpha >= -1e-7) v += (1.0 + alpha) * identity();
}

InteriorPoint::Direction InteriorPoint::direction(double sigma_complement, const VectorXd& ds_target,
                                                  double dkappa_target, const VectorXd& u1) {
  // Residuals of the embedding at the current point.
  const VectorXd f1 = at_ * y_ + gt_ * z_ + c_ * tau_;
  const VectorXd f2 = -(a_ * x_) + b_ * tau_;
  const VectorXd f3 = -(g_ * x_) + h_ * tau_ - s_;
  const double f4 = -c_.dot(x_) - b_.dot(y_) - h_.dot(z_) - kappa_;

  const VectorXd w_div = apply_w(cone_division(lambda_, ds_target));
  VectorXd rhs(n_ + p_ + m_);
  rhs.head(n_) = -sigma_complement * f1;
  rhs.segment(n_, p_) = sigma_complement * f2;
  rhs.tail(m_) = sigma_complement * f3 - w_div;
  const VectorXd u2 = solve_kkt(rhs);

  const auto x1 = u1.head(n_);
  const auto y1 = u1.segment(n_, p_);
  const auto z1 = u1.tail(m_);
  const auto x2 = u2.head(n_);
  const auto y2 = u2.segment(n_, p_);
  const auto z2 = u2.tail(m_);

  Direction d;
  const double num = -sigma_complement * f4 + dkappa_target / tau_ + c_.dot(x2) + b_.dot(y2) +
                     h_.dot(z2);
  const double den = -c_.dot(x1) - b_.dot(y1) - h_.dot(z1) + kappa_ / tau_;
  d.dtau = num / den;
  d.dx = x2 + d.dtau * x1;
  d.dy = y2 + d.dtau * y1;
  d.dz = z2 + d.dtau * z1;
  d.ds = w_div - apply_w(apply_w(d.dz));
  d.dkappa = (dkappa_target - kappa_ * d.dtau) / tau_;
  return d;
}

SolveResult InteriorPoint::run() {
  const auto start = std::chrono::steady_clock::now();
  SolveResult result;
  auto finish = [&](SolveResult& r) -> SolveResult {
    r.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
  };

  if (!presolve(result)) return finish(result);

  assemble_kkt();

  // Initial point: least-squares primal and dual with identity scaling.
  lp_w_ = VectorXd::Ones(lp_);
  soc_w_.assign(soc_start_.size(), SocScaling{});
  for (std::size_t c = 0; c < soc_start_.size(); ++c) {
    soc_w_[c].w = VectorXd::Zero(soc_size_[c]);
    soc_w_[c].w[0] = 1.0;
  }
  if (!factor()) {
    result.status = SolveStatus::MaxIterations;
    return finish(result);
  }
  {
    VectorXd rhs(n_ + p_ + m_);
    rhs << VectorXd::Zero(n_), b_, h_;
    const VectorXd primal = solve_kkt(rhs);
    x_ = primal.head(n_);
    s_ = -primal.tail(m_);
    bring_to_cone(s_);

    rhs << -c_, VectorXd::Zero(p_), VectorXd::Zero(m_);
    const VectorXd dual = solve_kkt(rhs);
    y_ = dual.segment(n_, p_);
    z_ = dual.tail(m_);
    bring_to_cone(z_);
  }
  tau_ = 1.0;
  kappa_ = 1.0;

  const double tol = settings_.tol;
  const VectorXd e = identity();

  auto inf_norm = [](const VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; };

  std::optional<VectorXd> fallback;
  double fallback_dres = 0.0;
  double fallback_cost = 0.0;
  int stalled = 0;

  for (int iter = 0; iter <= settings_.max_iters; ++iter) {
    result.iterations = iter;
    if (!update_scaling()) {
      if (settings_.verbose) std::fprintf(stderr, "scaling update failed\n");
      break;
    }

    // Convergence and certificate tests.
    // Residuals and certificates are measured on the unscaled data.
    const VectorXd ax = (a_ * x_).cwiseQuotient(eq_scale_);
    const VectorXd gxs = (g_ * x_ + s_).cwiseQuotient(cone_scale_);
    const VectorXd aty_gtz = (at_ * y_ + gt_ * z_).cwiseQuotient(col_scale_) / cost_scale_;
    const VectorXd b_raw = b_.cwiseQuotient(eq_scale_);
    const VectorXd h_raw = h_.cwiseQuotient(cone_scale_);
    const VectorXd c_raw = c_.cwiseQuotient(col_scale_) / cost_scale_;
    const double pres = std::max(inf_norm(ax - b_raw * tau_), inf_norm(gxs - h_raw * tau_)) / tau_;
    const double dres = inf_norm(aty_gtz + c_raw * tau_) / tau_;
    const double pcost = c_.dot(x_) / tau_ / cost_scale_;
    const double dcost = -(b_.dot(y_) + h_.dot(z_)) / tau_ / cost_scale_;
    const double gap = std::abs(pcost - dcost);
    const double rel_gap = gap / std::max(1.0, std::min(std::abs(pcost), std::abs(dcost)));
    if (settings_.verbose) {
      std::fprintf(stderr, "%3d pcost %+.6e dcost %+.6e gap %.2e pres %.2e dres %.2e tau %.2e kap %.2e\n",
                   iter, pcost, dcost, gap, pres, dres, tau_, kappa_);
    }
    // The dual test is relative to the iterate too: large penalty weights
    // leave multipliers far above the cost vector.
    const double dual_scale = 1.0 + c_norm_ + inf_norm(col_scale_.cwiseProduct(x_)) / tau_ +
                              inf_norm(z_.cwiseProduct(cone_scale_)) / tau_ / cost_scale_;
    const bool primal_ok = pres <= tol * (1.0 + bh_norm_) && (gap <= tol || rel_gap <= tol);
    if (primal_ok && dres <= tol * dual_scale) {
      result.status = SolveStatus::Optimal;
      result.primal = col_scale_.cwiseProduct(x_) / tau_;
      result.objective_value = pcost;
      return finish(result);
    }
    // Near the end the KKT solves can hit their accuracy floor and the dual
    // residual stalls. Remember the best point that is primal feasible and
    // dual feasible to sqrt(tol), and fall back to it once progress stops.
    if (primal_ok && dres <= std::sqrt(tol) * dual_scale && (!fallback || dres < fallback_dres)) {
      fallback = col_scale_.cwiseProduct(x_) / tau_;
      fallback_dres = dres;
      fallback_cost = pcost;
      stalled = 0;
    } else if (fallback && ++stalled >= kStallIters) {
      break;
    }
    const double dual_obj = b_.dot(y_) + h_.dot(z_);
    if (dual_obj < 0.0 && inf_norm(aty_gtz) / -dual_obj <= tol) {
      result.status = SolveStatus::Infeasible;
      return finish(result);
    }
    const double primal_obj = c_.dot(x_);
    if (primal_obj < 0.0 && std::max(inf_norm(ax), inf_norm(gxs)) / -primal_obj <= tol) {
      result.status = SolveStatus::Unbounded;
      return finish(result);
    }
    if (iter == settings_.max_iters) break;

    if (!factor()) {
      if (settings_.verbose) std::fprintf(stderr, "KKT factorization failed\n");
      break;
    }
    VectorXd rhs1(n_ + p_ + m_);
    rhs1 << -c_, b_, h_;
    const VectorXd u1 = solve_kkt(rhs1);

    const double mu = (s_.dot(z_) + tau_ * kappa_) / static_cast<double>(degree_ + 1);

    // Predictor.
    const VectorXd ll = cone_product(lambda_, lambda_);
    const Direction aff = direction(1.0, -ll, -tau_ * kappa_, u1);
    double step_aff = std::min(max_step(s_, aff.ds), max_step(z_, aff.dz));
    if (aff.dtau < 0.0) step_aff = std::min(step_aff, -tau_ / aff.dtau);
    if (aff.dkappa < 0.0) step_aff = std::min(step_aff, -kappa_ / aff.dkappa);
    step_aff = std::min(step_aff, 1.0);
    const double sigma = std::clamp(std::pow(1.0 - step_aff, 3), 1e-4, 1.0);

    // Corrector.
    const VectorXd ds_target = -ll - cone_product(apply_w_inverse(aff.ds), apply_w(aff.dz)) +
                               sigma * mu * e;
    const double dkappa_target = -tau_ * kappa_ - aff.dtau * aff.dkappa + sigma * mu;
    const Direction d = direction(1.0 - sigma, ds_target, dkappa_target, u1);
    double step = std::min(max_step(s_, d.ds), max_step(z_, d.dz));
    if (d.dtau < 0.0) step = std::min(step, -tau_ / d.dtau);
    if (d.dkappa < 0.0) step = std::min(step, -kappa_ / d.dkappa);
    step = std::min(1.0, kStepFraction * step);
    // Rounding can leave the ratio-test step a hair outside a cone.
    for (int backtrack = 0; backtrack < 40 && step > 0.0; ++backtrack) {
      if (interior(s_ + step * d.ds) && interior(z_ + step * d.dz)) break;
      step *= 0.8;
    }
    if (!(step > 0.0) || !std::isfinite(step)) {
      if (settings_.verbose) std::fprintf(stderr, "no admissible step\n");
      break;
    }

    x_ += step * d.dx;
    y_ += step * d.dy;
    z_ += step * d.dz;
    s_ += step * d.ds;
    tau_ += step * d.dtau;
    kappa_ += step * d.dkappa;
    if (!std::isfinite(tau_) || !x_.allFinite() || !z_.allFinite()) {
      if (settings_.verbose) std::fprintf(stderr, "iterate is not finite\n");
      break;
    }
  }
  if (fallback) {
    if (settings_.verbose) std::fprintf(stderr, "stalled; returning best iterate (dres %.2e)\n", fallback_dres);
    result.status = SolveStatus::Optimal;
    result.primal = std::move(*fallback);
    result.objective_value = fallback_cost;
    return finish(result);
  }
  result.status = SolveStatus::MaxIterations;
  return finish(result);
}

}  // namespace

SolveResult solve(const ConicProgram& program, const SolverSettings& settings) {
  if (!(settings.tol > 0.0)) throw ValidationError("solver tolerance must be positive");
  InteriorPoint ipm(program, settings);
  return ipm.run();
}

SolveResult solve(const ConicProgram& program, double tol) {
  SolverSettings settings;
  settings.tol = tol;
  return solve(program, settings);
}

}  // namespace quadstc
