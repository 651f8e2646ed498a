#pragma once

// Up-looking LDL' for quasi-definite matrices with AMD fill-reducing ordering
// and sign-aware dynamic regularization: a pivot whose sign disagrees with
// the expected one, or whose signed value is not above `pivot_eps`, is
// replaced by sign * delta. Iterative refinement against the unperturbed matrix is the
// caller's job.

#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace quadstc::detail {

class QuasiDefiniteLdl {
 public:
  using SpMat = Eigen::SparseMatrix<double>;

  double pivot_eps = 0.0;  // only zero or wrong-sign pivots by default
  double delta = 2e-7;

  /// `lower` holds the lower triangle (diagonal included) of the matrix;
  /// `signs` is +1 or -1 per row.
  void analyze(const SpMat& lower, const std::vector<int>& signs);
  bool factor(const SpMat& lower);
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  int regularized_pivots() const { return regularized_; }

 private:
  void permute(const SpMat& lower);

  int n_ = 0;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm_;  // P
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm_inv_;
  SpMat upper_;  // upper triangle of P A P'
  std::vector<int> sign_;  // permuted
  std::vector<int> etree_;
  std::vector<int> lnz_;
  std::vector<int> lp_, li_;
  std::vector<double> lx_;
  std::vector<double> d_, dinv_;
  int regularized_ = 0;
};

}  // namespace quadstc::detail
