#include "quadstc/stc.hpp"

#include <algorithm>

#include "quadstc/conic.hpp"

namespace quadstc {

namespace {

Eigen::VectorXd evaluate_all(const std::vector<ScalarFunction>& fns, const Eigen::VectorXd& z) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(fns.size()));
  for (std::size_t j = 0; j < fns.size(); ++j) out[static_cast<Eigen::Index>(j)] = fns[j].value(z);
  return out;
}

double trigger_factor(TriggerMode mode, const Eigen::VectorXd& g) {
  double s = mode == TriggerMode::And ? 1.0 : 0.0;
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    if (mode == TriggerMode::And) {
      s *= sigma_hat(g[j]);
    } else {
      s += sigma_hat(g[j]);
    }
  }
  return s;
}

// Product of all entries except index `skip`.
double product_except(const Eigen::VectorXd& v, Eigen::Index skip) {
  double p = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i != skip) p *= v[i];
  }
  return p;
}

}  // namespace

void CompoundStc::validate() const {
  if (triggers.empty()) throw ValidationError("compound STC needs at least one trigger");
  if (constraints.empty()) throw ValidationError("compound STC needs at least one constraint");
  if (constraint_form == ConstraintForm::InequalityNoSlack && constraints.size() != 1) {
    throw ValidationError("inequality-form STC must have exactly one constraint");
  }
}

double sigma_hat(double g) { return -std::min(0.0, g); }

double sigma_hat_slope(double g) { return g < 0.0 ? -1.0 : 0.0; }

double eval_scalar_stc(const ScalarStc& stc, const Eigen::VectorXd& z) {
  return sigma_hat(stc.trigger.value(z)) * stc.constraint.value(z);
}

double compound_value(TriggerMode mode, const Eigen::VectorXd& g, const Eigen::VectorXd& c,
                      const Eigen::VectorXd& alpha) {
  double p = 1.0;
  for (Eigen::Index j = 0; j < c.size(); ++j) p *= c[j] + (alpha.size() ? alpha[j] : 0.0);
  return trigger_factor(mode, g) * p;
}

double eval_compound(const CompoundStc& stc, const Eigen::VectorXd& z,
                     const Eigen::VectorXd& alpha) {
  stc.validate();
  const Eigen::VectorXd g = evaluate_all(stc.triggers, z);
  const Eigen::VectorXd c = evaluate_all(stc.constraints, z);
  if (stc.constraint_form == ConstraintForm::InequalityNoSlack) {
    return compound_value(stc.trigger_mode, g, c, Eigen::VectorXd());
  }
  if (alpha.size() != c.size()) throw ValidationError("STC slack vector has wrong length");
  if ((alpha.array() < 0.0).any()) throw ValidationError("STC slack must be nonnegative");
  return compound_value(stc.trigger_mode, g, c, alpha);
}

StcLinearization linearize_compound(const CompoundStc& stc, const Eigen::VectorXd& z,
                                    const Eigen::VectorXd& alpha) {
  stc.validate();
  const bool slacks = stc.constraint_form == ConstraintForm::EqualityWithSlacks;
  if (slacks && alpha.size() != static_cast<Eigen::Index>(stc.constraints.size())) {
    throw ValidationError("STC slack vector has wrong length");
  }
  if (slacks && (alpha.array() < 0.0).any()) throw ValidationError("STC slack must be nonnegative");

  const Eigen::VectorXd c = evaluate_all(stc.constraints, z);
  Eigen::VectorXd shifted = c;
  if (slacks) shifted += alpha;

  const TriggerLinearization tl = linearize_trigger_factor(stc, z);
  const double trig = tl.value;
  const Eigen::VectorXd& dtrig = tl.dz;
  double prod = 1.0;
  for (Eigen::Index j = 0; j < shifted.size(); ++j) prod *= shifted[j];

  StcLinearization lin;
  lin.value = trig * prod;
  lin.dz = Eigen::VectorXd::Zero(z.size());
  lin.dalpha = slacks ? Eigen::VectorXd::Zero(alpha.size()) : Eigen::VectorXd();

  if (trig == 0.0 && dtrig.isZero(0.0)) return lin;

  Eigen::VectorXd dprod = Eigen::VectorXd::Zero(z.size());
  for (Eigen::Index j = 0; j < shifted.size(); ++j) {
    const double others = product_except(shifted, j);
    if (others != 0.0) dprod += others * stc.constraints[static_cast<std::size_t>(j)].gradient(z);
    if (slacks) lin.dalpha[j] = trig * others;
  }
  lin.dz = prod * dtrig + trig * dprod;
  return lin;
}

TriggerLinearization linearize_trigger_factor(const CompoundStc& stc, const Eigen::VectorXd& z) {
  const Eigen::VectorXd g = evaluate_all(stc.triggers, z);
  Eigen::VectorXd sig(g.size());
  for (Eigen::Index j = 0; j < g.size(); ++j) sig[j] = sigma_hat(g[j]);

  TriggerLinearization out;
  out.value = trigger_factor(stc.trigger_mode, g);
  out.dz = Eigen::VectorXd::Zero(z.size());
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    const double slope = sigma_hat_slope(g[j]);
    if (slope == 0.0) continue;
    const double weight =
        stc.trigger_mode == TriggerMode::And ? product_except(sig, j) * slope : slope;
    if (weight == 0.0) continue;
    out.dz += weight * stc.triggers[static_cast<std::size_t>(j)].gradient(z);
  }
  return out;
}

bool logical_value(TriggerMode mode, const Eigen::VectorXd& g, const Eigen::VectorXd& c) {
  bool triggered = mode == TriggerMode::And;
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    const bool active = g[j] < 0.0;
    triggered = mode == TriggerMode::And ? (triggered && active) : (triggered || active);
  }
  if (!triggered) return true;
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    if (c[j] <= 0.0) return true;
  }
  return false;
}

bool logical_oracle(const CompoundStc& stc, const Eigen::VectorXd& z) {
  stc.validate();
  return logical_value(stc.trigger_mode, evaluate_all(stc.triggers, z),
                       evaluate_all(stc.constraints, z));
}

}  // namespace quadstc
