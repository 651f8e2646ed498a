#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace quadstc {

using Index = std::ptrdiff_t;

/// Raised whenever caller-supplied data violates a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Triplet {
  Index row;
  Index col;
  double value;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// head >= || tail ||_2 over decision variables.
struct SocConstraint {
  Index head;
  std::vector<Index> tail;

  friend bool operator==(const SocConstraint&, const SocConstraint&) = default;
};

/// Linear-cost program over linear equalities, nonnegative variables and
/// second-order cones:
///
///   minimize    c'x
///   subject to  A x = b
///               x_i >= 0            for i in nonneg
///               x_h >= ||x_T||_2    for each cone (h, T)
///
/// Constraints reference decision variables by index. Affine cone members are
/// expressed by the caller through auxiliary variables tied down by equality
/// rows (see the add_* helpers below).
class ConicProgram {
 public:
  ConicProgram() = default;
  explicit ConicProgram(Index num_vars);

  Index num_vars() const { return static_cast<Index>(cost_.size()); }
  Index num_equalities() const { return static_cast<Index>(rhs_.size()); }

  /// Appends `count` free variables and returns the index of the first.
  Index add_variables(Index count);
  Index add_variable() { return add_variables(1); }

  void set_cost(Index var, double value);
  void add_cost(Index var, double value);

  /// Appends sum_j coeffs[j] * x[vars[j]] = rhs and returns the row index.
  Index add_equality(std::span<const Index> vars, std::span<const double> coeffs,
                     double rhs);
  Index add_equality(std::initializer_list<Index> vars,
                     std::initializer_list<double> coeffs, double rhs);

  void add_nonneg(Index var);
  void add_cone(Index head, std::vector<Index> tail);

  /// Appends a fresh variable s >= 0 with sum coeffs*x + s = rhs, i.e. the
  /// inequality sum coeffs*x <= rhs. Returns the slack index.
  Index add_less_equal(std::span<const Index> vars, std::span<const double> coeffs,
                       double rhs);

  /// Appends a fresh variable pinned to `value` by an equality row.
  Index add_constant(double value);

  const std::vector<double>& cost() const { return cost_; }
  const std::vector<Triplet>& equality_triplets() const { return triplets_; }
  const std::vector<double>& equality_rhs() const { return rhs_; }
  const std::vector<SocConstraint>& cones() const { return cones_; }
  const std::vector<Index>& nonneg() const { return nonneg_; }

  /// Throws ValidationError when an index is out of range or a cone is empty.
  void validate() const;

  double objective(const Eigen::VectorXd& x) const;

  /// Infinity-norm residuals of x against each constraint family.
  struct Residuals {
    double equality = 0.0;
    double cone = 0.0;
    double nonneg = 0.0;
  };
  Residuals residuals(const Eigen::VectorXd& x) const;

  /// Text dump: one line per nonzero plus cone/nonneg membership lists.
  void write_text(std::ostream& out) const;
  static ConicProgram read_text(std::istream& in);

  friend bool operator==(const ConicProgram&, const ConicProgram&) = default;

 private:
  std::vector<double> cost_;
  std::vector<Triplet> triplets_;
  std::vector<double> rhs_;
  std::vector<SocConstraint> cones_;
  std::vector<Index> nonneg_;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, MaxIterations };

const char* to_string(SolveStatus status);

struct SolveResult {
  SolveStatus status = SolveStatus::MaxIterations;
  std::optional<Eigen::VectorXd> primal;
  std::optional<double> objective_value;
  double solve_time = 0.0;  // seconds
  int iterations = 0;
};

struct SolverSettings {
  double tol = 1e-8;
  int max_iters = 100;
  bool verbose = false;  // per-iteration trace on stderr
};

/// Solves with the built-in primal-dual interior-point method (homogeneous
/// self-dual embedding, Nesterov-Todd scaling, Mehrotra predictor-corrector).
/// Reentrant. Malformed programs throw ValidationError before any work.
SolveResult solve(const ConicProgram& program, const SolverSettings& settings = {});
SolveResult solve(const ConicProgram& program, double tol);

/// Adds the epigraph s >= (x_v - center)' W (x_v - center) for the variables
/// `vars`, where W = L'L is symmetric positive semidefinite. Encoded as the
/// cone || (2 L (x_v - center), s - 1) || <= s + 1 through auxiliary variables.
/// An empty `center` means zero.
void add_quadratic_epigraph(ConicProgram& program, const Eigen::MatrixXd& weight,
                            std::span<const Index> vars, Index epigraph,
                            std::span<const double> center = {});

/// Adds sum_i w_i |x_{vars[i]}| to the objective by splitting each variable
/// into a difference of nonnegative parts. Zero weights add nothing.
void add_abs_penalty(ConicProgram& program, std::span<const double> weights,
                     std::span<const Index> vars);

}  // namespace quadstc
