#include "ldl.hpp"

#include <cmath>

#include <Eigen/OrderingMethods>

namespace quadstc::detail {

void QuasiDefiniteLdl::permute(const SpMat& lower) {
  upper_.resize(n_, n_);
  upper_.selfadjointView<Eigen::Upper>() = lower.selfadjointView<Eigen::Lower>().twistedBy(perm_);
  upper_.makeCompressed();
}

void QuasiDefiniteLdl::analyze(const SpMat& lower, const std::vector<int>& signs) {
  n_ = static_cast<int>(lower.rows());
  {
    const SpMat full = lower.selfadjointView<Eigen::Lower>();
    Eigen::AMDOrdering<int> amd;
    amd(full, perm_inv_);
    perm_ = perm_inv_.inverse();
  }
  sign_.assign(static_cast<std::size_t>(n_), 1);
  for (int i = 0; i < n_; ++i) sign_[static_cast<std::size_t>(perm_.indices()[i])] = signs[static_cast<std::size_t>(i)];
  permute(lower);

  // Elimination tree and column counts of L.
  etree_.assign(static_cast<std::size_t>(n_), -1);
  lnz_.assign(static_cast<std::size_t>(n_), 0);
  std::vector<int> work(static_cast<std::size_t>(n_), -1);
  for (int j = 0; j < n_; ++j) {
    work[static_cast<std::size_t>(j)] = j;
    for (SpMat::InnerIterator it(upper_, j); it; ++it) {
      int i = static_cast<int>(it.row());
      if (i >= j) continue;
      while (work[static_cast<std::size_t>(i)] != j) {
        if (etree_[static_cast<std::size_t>(i)] == -1) etree_[static_cast<std::size_t>(i)] = j;
        ++lnz_[static_cast<std::size_t>(i)];
        work[static_cast<std::size_t>(i)] = j;
        i = etree_[static_cast<std::size_t>(i)];
      }
    }
  }
  lp_.assign(static_cast<std::size_t>(n_) + 1, 0);
  for (int i = 0; i < n_; ++i) {
    lp_[static_cast<std::size_t>(i) + 1] = lp_[static_cast<std::size_t>(i)] + lnz_[static_cast<std::size_t>(i)];
  }
  li_.assign(static_cast<std::size_t>(lp_.back()), 0);
  lx_.assign(static_cast<std::size_t>(lp_.back()), 0.0);
  d_.assign(static_cast<std::size_t>(n_), 0.0);
  dinv_.assign(static_cast<std::size_t>(n_), 0.0);
}

bool QuasiDefiniteLdl::factor(const SpMat& lower) {
  permute(lower);
  regularized_ = 0;
  const auto n = static_cast<std::size_t>(n_);
  std::vector<char> marked(n, 0);
  std::vector<double> y(n, 0.0);
  std::vector<int> y_idx(n), stack(n);
  std::vector<int> next(lp_.begin(), lp_.end() - 1);

  auto fix_pivot = [&](int k) {
    const double s = sign_[static_cast<std::size_t>(k)];
    double& dk = d_[static_cast<std::size_t>(k)];
    if (!(s * dk > pivot_eps)) {
      dk = s * delta;
      ++regularized_;
    }
    dinv_[static_cast<std::size_t>(k)] = 1.0 / dk;
  };

  for (int k = 0; k < n_; ++k) {
    d_[static_cast<std::size_t>(k)] = 0.0;
    int ny = 0;
    for (SpMat::InnerIterator it(upper_, k); it; ++it) {
      const int i = static_cast<int>(it.row());
      if (i == k) {
        d_[static_cast<std::size_t>(k)] = it.value();
        continue;
      }
      if (i > k) continue;
      y[static_cast<std::size_t>(i)] = it.value();
      if (marked[static_cast<std::size_t>(i)]) continue;
      // Walk the elimination tree to collect the nonzero pattern of row k.
      int top = 0;
      int j = i;
      while (j != -1 && j < k && !marked[static_cast<std::size_t>(j)]) {
        marked[static_cast<std::size_t>(j)] = 1;
        stack[static_cast<std::size_t>(top++)] = j;
        j = etree_[static_cast<std::size_t>(j)];
      }
      while (top > 0) y_idx[static_cast<std::size_t>(ny++)] = stack[static_cast<std::size_t>(--top)];
    }
    for (int t = ny - 1; t >= 0; --t) {
      const int c = y_idx[static_cast<std::size_t>(t)];
      const auto cu = static_cast<std::size_t>(c);
      const double yc = y[cu];
      const int end = next[cu];
      for (int p = lp_[cu]; p < end; ++p) {
        y[static_cast<std::size_t>(li_[static_cast<std::size_t>(p)])] -= lx_[static_cast<std::size_t>(p)] * yc;
      }
      const double l = yc * dinv_[cu];
      li_[static_cast<std::size_t>(end)] = k;
      lx_[static_cast<std::size_t>(end)] = l;
      d_[static_cast<std::size_t>(k)] -= yc * l;
      ++next[cu];
      y[cu] = 0.0;
      marked[cu] = 0;
    }
    fix_pivot(k);
  }
  for (double v : d_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Eigen::VectorXd QuasiDefiniteLdl::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd x = perm_ * rhs;
  for (int i = 0; i < n_; ++i) {
    const double xi = x[i];
    for (int p = lp_[static_cast<std::size_t>(i)]; p < lp_[static_cast<std::size_t>(i) + 1]; ++p) {
      x[li_[static_cast<std::size_t>(p)]] -= lx_[static_cast<std::size_t>(p)] * xi;
    }
  }
  for (int i = 0; i < n_; ++i) x[i] *= dinv_[static_cast<std::size_t>(i)];
  for (int i = n_ - 1; i >= 0; --i) {
    double xi = x[i];
    for (int p = lp_[static_cast<std::size_t>(i)]; p < lp_[static_cast<std::size_t>(i) + 1]; ++p) {
      xi -= lx_[static_cast<std::size_t>(p)] * x[li_[static_cast<std::size_t>(p)]];
    }
    x[i] = xi;
  }
  return perm_inv_ * x;
}

}  // namespace quadstc::detail
