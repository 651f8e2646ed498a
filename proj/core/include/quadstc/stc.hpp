#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace quadstc {

/// value(z) = (z - center)' W (z - center) + offset with W positive
/// semidefinite.
struct QuadraticForm {
  Eigen::MatrixXd weight;
  Eigen::VectorXd center;
  double offset = 0.0;
};

/// Differentiable scalar function of the STC argument vector. `quadratic` is
/// set when the function is a known convex quadratic, which lets the
/// subproblem keep it exact instead of linearizing it.
struct ScalarFunction {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::optional<QuadraticForm> quadratic;
};

/// g(z) < 0  =>  c(z) <= 0
struct ScalarStc {
  ScalarFunction trigger;
  ScalarFunction constraint;
};

enum class TriggerMode { And, Or };

/// InequalityNoSlack: single constraint, enforced as h <= 0.
/// EqualityWithSlacks: "or"-constraint with one slack alpha_j >= 0 per
/// constraint, enforced as h = 0.
enum class ConstraintForm { InequalityNoSlack, EqualityWithSlacks };

struct CompoundStc {
  std::vector<ScalarFunction> triggers;
  std::vector<ScalarFunction> constraints;
  TriggerMode trigger_mode = TriggerMode::And;
  ConstraintForm constraint_form = ConstraintForm::InequalityNoSlack;

  int slack_count() const {
    return constraint_form == ConstraintForm::EqualityWithSlacks
               ? static_cast<int>(constraints.size())
               : 0;
  }
  void validate() const;
};

/// -min(0, g)
double sigma_hat(double g);

/// Derivative of sigma_hat with the inactive side taken at the kink:
/// -1 for g < 0, 0 for g >= 0.
double sigma_hat_slope(double g);

double eval_scalar_stc(const ScalarStc& stc, const Eigen::VectorXd& z);

/// Product form h = S * P with S = prod sigma_j (And) or sum sigma_j (Or) and
/// P = prod (c_j + alpha_j) (c_1 without slack). Negative slack throws.
double eval_compound(const CompoundStc& stc, const Eigen::VectorXd& z,
                     const Eigen::VectorXd& alpha);

/// Same composition evaluated directly on trigger/constraint values.
double compound_value(TriggerMode mode, const Eigen::VectorXd& g, const Eigen::VectorXd& c,
                      const Eigen::VectorXd& alpha);

struct StcLinearization {
  double value = 0.0;
  Eigen::VectorXd dz;
  Eigen::VectorXd dalpha;  // empty for InequalityNoSlack
};

StcLinearization linearize_compound(const CompoundStc& stc, const Eigen::VectorXd& z,
                                    const Eigen::VectorXd& alpha);

/// Trigger factor S (product or sum of sigma_hat) and its gradient under the
/// kink rule.
struct TriggerLinearization {
  double value = 0.0;
  Eigen::VectorXd dz;
};

TriggerLinearization linearize_trigger_factor(const CompoundStc& stc, const Eigen::VectorXd& z);

/// Truth value of the Boolean implication with strict triggers and
/// non-strict constraints.
bool logical_oracle(const CompoundStc& stc, const Eigen::VectorXd& z);
bool logical_value(TriggerMode mode, const Eigen::VectorXd& g, const Eigen::VectorXd& c);

}  // namespace quadstc
