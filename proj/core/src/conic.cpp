#include "quadstc/conic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace quadstc {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

double parse_double(const std::string& token) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ValidationError("conic program text: bad number '" + token + "'");
  }
  return v;
}

Index parse_index(const std::string& token) {
  Index v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ValidationError("conic program text: bad index '" + token + "'");
  }
  return v;
}

}  // namespace

ConicProgram::ConicProgram(Index num_vars) : cost_(static_cast<std::size_t>(num_vars), 0.0) {
  if (num_vars < 0) throw ValidationError("negative variable count");
}

Index ConicProgram::add_variables(Index count) {
  const Index first = num_vars();
  cost_.resize(static_cast<std::size_t>(first + count), 0.0);
  return first;
}

void ConicProgram::set_cost(Index var, double value) {
  if (var < 0 || var >= num_vars()) throw ValidationError("cost index out of range");
  cost_[static_cast<std::size_t>(var)] = value;
}

void ConicProgram::add_cost(Index var, double value) {
  if (var < 0 || var >= num_vars()) throw ValidationError("cost index out of range");
  cost_[static_cast<std::size_t>(var)] += value;
}

Index ConicProgram::add_equality(std::span<const Index> vars, std::span<const double> coeffs,
                                 double rhs) {
  if (vars.size() != coeffs.size()) {
    throw ValidationError("equality row: variable and coefficient counts differ");
  }
  const Index row = num_equalities();
  for (std::size_t j = 0; j < vars.size(); ++j) {
    if (coeffs[j] != 0.0) triplets_.push_back({row, vars[j], coeffs[j]});
  }
  rhs_.push_back(rhs);
  return row;
}

Index ConicProgram::add_equality(std::initializer_list<Index> vars,
                                 std::initializer_list<double> coeffs, double rhs) {
  return add_equality(std::span<const Index>(vars.begin(), vars.size()),
                      std::span<const double>(coeffs.begin(), coeffs.size()), rhs);
}

void ConicProgram::add_nonneg(Index var) { nonneg_.push_back(var); }

void ConicProgram::add_cone(Index head, std::vector<Index> tail) {
  cones_.push_back({head, std::move(tail)});
}

Index ConicProgram::add_less_equal(std::span<const Index> vars, std::span<const double> coeffs,
                                   double rhs) {
  const Index slack = add_variable();
  std::vector<Index> v(vars.begin(), vars.end());
  std::vector<double> c(coeffs.begin(), coeffs.end());
  v.push_back(slack);
  c.push_back(1.0);
  add_equality(v, c, rhs);
  add_nonneg(slack);
  return slack;
}

Index ConicProgram::add_constant(double value) {
  const Index var = add_variable();
  add_equality({var}, {1.0}, value);
  return var;
}

void ConicProgram::validate() const {
  const Index n = num_vars();
  auto check = [n](Index i, const char* what) {
    if (i < 0 || i >= n) {
      throw ValidationError(std::string(what) + " index " + std::to_string(i) +
                            " out of range (num_vars = " + std::to_string(n) + ")");
    }
  };
  for (const auto& t : triplets_) {
    check(t.col, "equality column");
    if (t.row < 0 || t.row >= num_equalities()) {
      throw ValidationError("equality row index " + std::to_string(t.row) + " out of range");
    }
    if (!std::isfinite(t.value)) throw ValidationError("non-finite equality coefficient");
  }
  for (double v : rhs_) {
    if (!std::isfinite(v)) throw ValidationError("non-finite equality right-hand side");
  }
  for (double v : cost_) {
    if (!std::isfinite(v)) throw ValidationError("non-finite objective coefficient");
  }
  for (const auto& cone : cones_) {
    check(cone.head, "cone head");
    if (cone.tail.empty()) throw ValidationError("cone with empty tail");
    for (Index i : cone.tail) check(i, "cone tail");
  }
  for (Index i : nonneg_) check(i, "nonnegative");
}

double ConicProgram::objective(const Eigen::VectorXd& x) const {
  double v = 0.0;
  for (std::size_t i = 0; i < cost_.size(); ++i) v += cost_[i] * x[static_cast<Index>(i)];
  return v;
}

ConicProgram::Residuals ConicProgram::residuals(const Eigen::VectorXd& x) const {
  Residuals r;
  Eigen::VectorXd ax = Eigen::VectorXd::Zero(num_equalities());
  for (const auto& t : triplets_) ax[t.row] += t.value * x[t.col];
  for (Index i = 0; i < num_equalities(); ++i) {
    r.equality = std::max(r.equality, std::abs(ax[i] - rhs_[static_cast<std::size_t>(i)]));
  }
  for (const auto& cone : cones_) {
    double sq = 0.0;
    for (Index i : cone.tail) sq += x[i] * x[i];
    r.cone = std::max(r.cone, std::sqrt(sq) - x[cone.head]);
  }
  for (Index i : nonneg_) r.nonneg = std::max(r.nonneg, -x[i]);
  return r;
}

void ConicProgram::write_text(std::ostream& out) const {
  out << "conic_program 1\n";
  out << "vars " << num_vars() << "\n";
  for (std::size_t i = 0; i < cost_.size(); ++i) {
    if (cost_[i] != 0.0) out << "cost " << i << ' ' << format_double(cost_[i]) << "\n";
  }
  out << "rows " << num_equalities() << "\n";
  for (std::size_t i = 0; i < rhs_.size(); ++i) {
    if (rhs_[i] != 0.0) out << "rhs " << i << ' ' << format_double(rhs_[i]) << "\n";
  }
  for (const auto& t : triplets_) {
    out << "nz " << t.row << ' ' << t.col << ' ' << format_double(t.value) << "\n";
  }
  for (const auto& cone : cones_) {
    out << "cone " << cone.head;
    for (Index i : cone.tail) out << ' ' << i;
    out << "\n";
  }
  if (!nonneg_.empty()) {
    out << "nonneg";
    for (Index i : nonneg_) out << ' ' << i;
    out << "\n";
  }
  out << "end\n";
}

ConicProgram ConicProgram::read_text(std::istream& in) {
  ConicProgram p;
  std::string line;
  bool header = false;
  bool done = false;
  while (!done && std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(std::move(t));
    auto need = [&](std::size_t n) {
      if (tok.size() != n) throw ValidationError("conic program text: malformed '" + line + "'");
    };
    if (key == "conic_program") {
      need(1);
      if (tok[0] != "1") throw ValidationError("conic program text: unsupported version");
      header = true;
    } else if (!header) {
      throw ValidationError("conic program text: missing header");
    } else if (key == "vars") {
      need(1);
      p.cost_.assign(static_cast<std::size_t>(parse_index(tok[0])), 0.0);
    } else if (key == "cost") {
      need(2);
      p.set_cost(parse_index(tok[0]), parse_double(tok[1]));
    } else if (key == "rows") {
      need(1);
      p.rhs_.assign(static_cast<std::size_t>(parse_index(tok[0])), 0.0);
    } else if (key == "rhs") {
      need(2);
      const Index r = parse_index(tok[0]);
      if (r < 0 || r >= p.num_equalities()) throw ValidationError("conic program text: rhs row");
      p.rhs_[static_cast<std::size_t>(r)] = parse_double(tok[1]);
    } else if (key == "nz") {
      need(3);
      p.triplets_.push_back({parse_index(tok[0]), parse_index(tok[1]), parse_double(tok[2])});
    } else if (key == "cone") {
      if (tok.size() < 2) throw ValidationError("conic program text: malformed cone");
      SocConstraint c{parse_index(tok[0]), {}};
      for (std::size_t i = 1; i < tok.size(); ++i) c.tail.push_back(parse_index(tok[i]));
      p.cones_.push_back(std::move(c));
    } else if (key == "nonneg") {
      for (const auto& t : tok) p.nonneg_.push_back(parse_index(t));
    } else if (key == "end") {
      done = true;
    } else {
      throw ValidationError("conic program text: unknown record '" + key + "'");
    }
  }
  if (!done) throw ValidationError("conic program text: missing 'end'");
  p.validate();
  return p;
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::MaxIterations: return "MaxIterations";
  }
  return "?";
}

void add_quadratic_epigraph(ConicProgram& program, const Eigen::MatrixXd& weight,
                            std::span<const Index> vars, Index epigraph,
                            std::span<const double> center) {
  const Index n = static_cast<Index>(vars.size());
  if (weight.rows() != n || weight.cols() != n) {
    throw ValidationError("quadratic epigraph: weight is not " + std::to_string(n) + "x" +
                          std::to_string(n));
  }
  if (!center.empty() && static_cast<Index>(center.size()) != n) {
    throw ValidationError("quadratic epigraph: center length mismatch");
  }
  const double scale = std::max(1.0, weight.cwiseAbs().maxCoeff());
  if ((weight - weight.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ValidationError("quadratic epigraph: weight is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(weight);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  if (n > 0 && lambda.minCoeff() < -1e-12 * scale) {
    throw ValidationError("quadratic epigraph: weight is not positive semidefinite");
  }

  std::vector<Index> tail;
  for (Index k = 0; k < n; ++k) {
    if (lambda[k] <= 1e-14 * scale) continue;
    // y = 2 sqrt(lambda_k) v_k' (x - center)
    const Eigen::VectorXd row = 2.0 * std::sqrt(lambda[k]) * eig.eigenvectors().col(k);
    const Index y = program.add_variable();
    std::vector<Index> idx{y};
    std::vector<double> coef{1.0};
    double rhs = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (row[j] == 0.0) continue;
      idx.push_back(vars[static_cast<std::size_t>(j)]);
      coef.push_back(-row[j]);
      if (!center.empty()) rhs -= row[j] * center[static_cast<std::size_t>(j)];
    }
    program.add_equality(idx, coef, rhs);
    tail.push_back(y);
  }
  const Index lower = program.add_variable();  // s - 1
  const Index upper = program.add_variable();  // s + 1
  program.add_equality({lower, epigraph}, {1.0, -1.0}, -1.0);
  program.add_equality({upper, epigraph}, {1.0, -1.0}, 1.0);
  tail.push_back(lower);
  program.add_cone(upper, std::move(tail));
}

void add_abs_penalty(ConicProgram& program, std::span<const double> weights,
                     std::span<const Index> vars) {
  if (weights.size() != vars.size()) {
    throw ValidationError("abs penalty: weight and variable counts differ");
  }
  for (double w : weights) {
    if (!(w >= 0.0)) throw ValidationError("abs penalty: negative weight");
  }
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (weights[i] == 0.0) continue;
    const Index pos = program.add_variables(2);
    const Index neg = pos + 1;
    program.add_equality({vars[i], pos, neg}, {1.0, -1.0, 1.0}, 0.0);
    program.add_nonneg(pos);
    program.add_nonneg(neg);
    program.add_cost(pos, weights[i]);
    program.add_cost(neg, weights[i]);
  }
}

}  // namespace quadstc
