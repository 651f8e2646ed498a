#include "quadstc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <thread>
#include <tuple>

namespace quadstc {

using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::VectorXd;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double segment_distance(const Vector2d& p, const Vector2d& a, const Vector2d& b) {
  const Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + s * ab - p).norm();
}

// Dense samples of every vehicle over interval k: one matrix per vehicle,
// columns are states of that vehicle.
std::vector<Eigen::MatrixXd> dense_interval(const NonconvexProblem& problem, const Trajectory& traj,
                                            int k, int samples) {
  const int nx = problem.model.state_dim();
  const int nu = problem.model.control_dim();
  std::vector<Eigen::MatrixXd> out;
  for (int v = 0; v < problem.vehicles(); ++v) {
    out.push_back(propagate_dense(problem.model, traj.states.col(k).segment(v * nx, nx),
                                  traj.controls.col(k).segment(v * nu, nu),
                                  traj.controls.col(k + 1).segment(v * nu, nu), traj.dt(),
                                  samples));
  }
  return out;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const char* scenario_name(ScenarioKind kind) {
  return kind == ScenarioKind::Hoop ? "scenario 1 (hoop)" : "scenario 2 (beam)";
}

void write_stats_table(std::ostream& out, const std::string& title,
                       const std::vector<KSummary>& per_k,
                       SummaryStats KSummary::*field, const char* f) {
  out << "# " << title << "\n";
  out << "K\tMean\tMedian\tStd.Dev.\tMin\tMax\n";
  for (const auto& row : per_k) {
    const SummaryStats& s = row.*field;
    out << row.nodes;
    if (s.count == 0) {
      out << "\t-\t-\t-\t-\t-\n";
      continue;
    }
    out << '\t' << fmt(f, s.mean) << '\t' << fmt(f, s.median) << '\t' << fmt(f, s.stddev) << '\t'
        << fmt(f, s.min) << '\t' << fmt(f, s.max) << '\n';
  }
  out << "\n";
}

}  // namespace

Vector3d hoop_normal(double tilt, double heading) {
  return {std::sin(tilt), std::cos(tilt) * std::sin(heading), std::cos(tilt) * std::cos(heading)};
}

double obstacle_spacing(const BeamSpec& spec) {
  const double w = spec.keepout_half_width;
  return std::max(0.8 * (spec.payload_length + 2.0 * w), 2.0 * w);
}

SampledCase sample_scenario1(Rng& rng, const HoopSpec& base, const BoundaryConditions& boundary,
                             const HoopSampling& ranges) {
  Vector3d c;
  for (int i = 0; i < 3; ++i) c[i] = uniform(rng, ranges.center_min[i], ranges.center_max[i]);
  const double phi = uniform(rng, -ranges.tilt_deg, ranges.tilt_deg) * kDeg;
  const double psi = uniform(rng, -ranges.heading_deg, ranges.heading_deg) * kDeg;
  SampledCase out;
  HoopSpec h = base;
  h.center_schedule = {{0.0, c}};
  h.normal = hoop_normal(phi, psi);
  out.hoop = std::move(h);
  out.boundary = boundary;
  return out;
}

SampledCase sample_scenario2(Rng& rng, const BeamSpec& base, const BoundaryConditions& boundary,
                             const BeamSampling& ranges) {
  if (boundary.final_positions.size() != 2) {
    throw ValidationError("beam sampling: two final positions required");
  }
  const double ell = base.payload_length;
  const Vector2d ctr(uniform(rng, ranges.center_min.x(), ranges.center_max.x()),
                     uniform(rng, ranges.center_min.y(), ranges.center_max.y()));
  const double psi = uniform(rng, -ranges.angle_deg, ranges.angle_deg) * kDeg;
  const Vector2d dir(std::cos(psi), std::sin(psi));
  const Vector2d goal = 0.5 * (boundary.final_positions[0].head<2>() +
                               boundary.final_positions[1].head<2>());

  SampledCase out;
  out.boundary = boundary;
  out.boundary.initial_positions = {VectorXd(ctr - 0.5 * ell * dir), VectorXd(ctr + 0.5 * ell * dir)};

  BeamSpec b = base;
  b.obstacles.clear();
  const double spacing = obstacle_spacing(base);
  const double y_lo = std::max(ranges.obstacle_min.y(), std::min(ctr.y(), goal.y()));
  const double y_hi = std::min(ranges.obstacle_max.y(), std::max(ctr.y(), goal.y()));
  if (ranges.obstacle_count > 0) {
    if (!(y_lo < y_hi) || goal.y() == ctr.y()) {
      throw SamplingError("beam sampling: center segment misses the obstacle box");
    }
    // Blocking obstacle on the segment from the initial to the final center.
    const double y = uniform(rng, y_lo, y_hi);
    b.obstacles.push_back(ctr + (y - ctr.y()) / (goal.y() - ctr.y()) * (goal - ctr));
  }
  int tries = 0;
  while (static_cast<int>(b.obstacles.size()) < ranges.obstacle_count) {
    if (++tries > ranges.rejection_budget) {
      throw SamplingError("beam sampling: obstacle rejection budget exceeded");
    }
    const Vector2d o(uniform(rng, ranges.obstacle_min.x(), ranges.obstacle_max.x()),
                     uniform(rng, ranges.obstacle_min.y(), ranges.obstacle_max.y()));
    bool ok = true;
    for (const auto& q : b.obstacles) ok = ok && (q - o).lpNorm<1>() >= spacing;
    if (ok) b.obstacles.push_back(o);
  }
  out.beam = std::move(b);
  return out;
}

double clipping_scenario1(const NonconvexProblem& problem, const Trajectory& traj,
                          int dense_samples) {
  if (!problem.hoop) throw ValidationError("clipping: hoop scenario required");
  if (dense_samples < 2) throw ValidationError("clipping: at least 2 dense samples per interval");
  const HoopSpec& h = *problem.hoop;
  const Vector3d n = h.normal.normalized();
  const Eigen::Matrix3d lat = h.lateral_projector();
  const double step = traj.dt() / (dense_samples - 1);

  bool crossed = false;
  double worst = 0.0;
  double closest = std::numeric_limits<double>::infinity();
  double closest_lateral = 0.0;
  for (int k = 0; k + 1 < traj.nodes(); ++k) {
    const Eigen::MatrixXd x = dense_interval(problem, traj, k, dense_samples)[0];
    Vector3d r_prev, c_prev;
    double s_prev = 0.0;
    for (int j = 0; j < dense_samples; ++j) {
      const double t = traj.node_time(k) + j * step;
      const Vector3d r = x.col(j).head<3>();
      const Vector3d c = h.center_at(t);
      const double s = n.dot(r - c);
      if (std::abs(s) < closest) {
        closest = std::abs(s);
        closest_lateral = (lat * (r - c)).norm();
      }
      if (j > 0 && ((s_prev <= 0.0 && s > 0.0) || (s_prev >= 0.0 && s < 0.0) ||
                    (s_prev == 0.0 && s == 0.0))) {
        const double lam = s_prev == s ? 0.0 : s_prev / (s_prev - s);
        const Vector3d p = r_prev + lam * (r - r_prev);
        const Vector3d pc = c_prev + lam * (c - c_prev);
        worst = std::max(worst, (lat * (p - pc)).norm() - h.constraint_radius);
        crossed = true;
      }
      r_prev = r;
      c_prev = c;
      s_prev = s;
    }
  }
  if (crossed) return std::max(0.0, worst);
  if (!h.require_passage) return 0.0;
  // Gross violation: the path never reaches the hoop plane.
  return closest_lateral;
}

double clipping_scenario2(const NonconvexProblem& problem, const Trajectory& traj,
                          int dense_samples) {
  if (!problem.beam) throw ValidationError("clipping: beam scenario required");
  if (dense_samples < 2) throw ValidationError("clipping: at least 2 dense samples per interval");
  const BeamSpec& b = *problem.beam;
  double worst = 0.0;
  for (int k = 0; k + 1 < traj.nodes(); ++k) {
    const auto x = dense_interval(problem, traj, k, dense_samples);
    for (int j = 0; j < dense_samples; ++j) {
      const Vector2d r1 = x[0].col(j).head<2>();
      const Vector2d r2 = x[1].col(j).head<2>();
      for (const auto& o : b.obstacles) {
        worst = std::max(worst, b.keepout_half_width - segment_distance(o, r1, r2));
      }
    }
  }
  return worst;
}

double clipping(const NonconvexProblem& problem, const Trajectory& traj, int dense_samples) {
  return problem.kind == ScenarioKind::Hoop ? clipping_scenario1(problem, traj, dense_samples)
                                            : clipping_scenario2(problem, traj, dense_samples);
}

bool NodeCheck::passes(const Tolerances& tol) const {
  return thrust <= tol.thrust && speed <= tol.speed && boundary <= tol.boundary &&
         payload <= tol.payload && dynamics <= tol.dynamics && keepout_containment == 0;
}

NodeCheck check_nodes(const NonconvexProblem& problem, const Trajectory& traj) {
  const int kk = traj.nodes();
  if (kk < 2 || traj.states.rows() != problem.state_dim() ||
      traj.controls.rows() != problem.control_dim() || traj.thrust_bounds.rows() != problem.vehicles()) {
    throw ValidationError("node check: trajectory dimensions do not match the problem");
  }
  const QuadModel& m = problem.model;
  const ControlSetParams& cs = problem.control;
  const int nu = m.control_dim();
  const int d = m.spatial_dim;
  const double v_max = problem.speed_limit(traj.dt());
  NodeCheck out;
  out.thrust = out.speed = out.boundary = out.payload = out.dynamics = out.lossless_gap =
      -std::numeric_limits<double>::infinity();

  for (int k = 0; k < kk; ++k) {
    const VectorXd x = traj.states.col(k);
    for (int v = 0; v < problem.vehicles(); ++v) {
      const VectorXd u = traj.controls.col(k).segment(v * nu, nu);
      const double mag = thrust_magnitude(cs, m, u);
      double tv = std::max(cs.thrust_min - mag, mag - cs.thrust_max);
      // Tilt: angle between the full thrust vector and Up.
      const double up = d == 3 ? u[0] : m.weight();
      tv = std::max(tv, std::cos(cs.tilt_max) * mag - up);
      out.thrust = std::max(out.thrust, tv);
      out.lossless_gap = std::max(out.lossless_gap, std::abs(traj.thrust_bounds(v, k) - mag));
      out.speed = std::max(out.speed, problem.velocity(x, v).norm() - v_max);
    }
    if (auto link = problem.payload_link()) {
      out.payload = std::max(out.payload,
                             std::abs(link->residual(problem.position(x, 0), problem.position(x, 1))));
    }
    if (problem.beam) {
      VectorXd z(4);
      z << problem.position(x, 0), problem.position(x, 1);
      constexpr double tol = 1e-9;
      for (int l = 0; l < static_cast<int>(problem.beam->obstacles.size()); ++l) {
        const CompoundStc stc = build_beam_stc(*problem.beam, l, problem.beam_frame);
        bool inside = true;
        for (const auto& g : stc.triggers) inside = inside && g.value(z) < -tol;
        for (const auto& c : stc.constraints) inside = inside && c.value(z) > tol;
        out.keepout_containment += inside ? 1 : 0;
      }
    }
  }
  if (!problem.payload_link()) out.payload = 0.0;

  const VectorXd hover = problem.hover_control();
  for (int v = 0; v < problem.vehicles(); ++v) {
    const auto& bc = problem.boundary;
    const double e = std::max(
        {(problem.position(traj.states.col(0), v) - bc.initial_positions[static_cast<std::size_t>(v)])
             .lpNorm<Eigen::Infinity>(),
         (problem.position(traj.states.col(kk - 1), v) - bc.final_positions[static_cast<std::size_t>(v)])
             .lpNorm<Eigen::Infinity>(),
         problem.velocity(traj.states.col(0), v).lpNorm<Eigen::Infinity>(),
         problem.velocity(traj.states.col(kk - 1), v).lpNorm<Eigen::Infinity>()});
    out.boundary = std::max(out.boundary, e);
  }
  out.boundary = std::max({out.boundary, (traj.controls.col(0) - hover).lpNorm<Eigen::Infinity>(),
                           (traj.controls.col(kk - 1) - hover).lpNorm<Eigen::Infinity>()});

  const DiscreteDynamics dyn = discretize_foh(m, traj.t_f, kk);
  const int nx = m.state_dim();
  for (int k = 0; k + 1 < kk; ++k) {
    for (int v = 0; v < problem.vehicles(); ++v) {
      const VectorXd pred = dyn.step(traj.states.col(k).segment(v * nx, nx),
                                     traj.controls.col(k).segment(v * nu, nu),
                                     traj.controls.col(k + 1).segment(v * nu, nu));
      out.dynamics = std::max(
          out.dynamics,
          (pred - traj.states.col(k + 1).segment(v * nx, nx)).lpNorm<Eigen::Infinity>());
    }
  }
  return out;
}

void CampaignSpec::validate() const {
  if (k_list.empty()) throw ValidationError("campaign: k_list is empty");
  for (int k : k_list) {
    if (k < 2) throw ValidationError("campaign: every K must be at least 2");
  }
  if (cases_per_k < 1) throw ValidationError("campaign: cases_per_k must be at least 1");
  if (dense_samples < 2) throw ValidationError("campaign: dense_samples must be at least 2");
  if (max_replacements < 0) throw ValidationError("campaign: max_replacements must be nonnegative");
  if (hoop_ranges.tilt_deg < 0 || hoop_ranges.heading_deg < 0 || beam_ranges.angle_deg < 0) {
    throw ValidationError("campaign: angle ranges must be nonnegative");
  }
  for (int i = 0; i < 3; ++i) {
    if (hoop_ranges.center_min[i] > hoop_ranges.center_max[i]) {
      throw ValidationError("campaign: hoop center range is empty");
    }
  }
  for (int i = 0; i < 2; ++i) {
    if (beam_ranges.center_min[i] > beam_ranges.center_max[i] ||
        beam_ranges.obstacle_min[i] > beam_ranges.obstacle_max[i]) {
      throw ValidationError("campaign: beam sampling range is empty");
    }
  }
  if (beam_ranges.obstacle_count < 0 || beam_ranges.rejection_budget < 1) {
    throw ValidationError("campaign: invalid obstacle count or rejection budget");
  }
}

std::uint64_t case_seed(std::uint64_t seed, int nodes, int slot, int attempt) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ static_cast<std::uint64_t>(nodes));
  h = splitmix(h ^ static_cast<std::uint64_t>(slot));
  return splitmix(h ^ static_cast<std::uint64_t>(attempt));
}

NonconvexProblem case_problem(const CampaignSpec& spec, const SampledCase& sampled, int nodes) {
  QuadModel model = spec.model;
  ControlSetParams control = spec.control;
  if (spec.scenario == ScenarioKind::Hoop) {
    model.spatial_dim = 3;
    control.altitude_hold = false;
  } else {
    model.spatial_dim = 2;
    control.altitude_hold = true;
  }
  return assemble_problem(spec.scenario, sampled.hoop, sampled.beam, sampled.boundary, model,
                          control, nodes);
}

SampledCase sample_case(const CampaignSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  return spec.scenario == ScenarioKind::Hoop
             ? sample_scenario1(rng, spec.hoop, spec.boundary, spec.hoop_ranges)
             : sample_scenario2(rng, spec.beam, spec.boundary, spec.beam_ranges);
}

CaseResult run_case(const CampaignSpec& spec, int nodes, int slot, int attempt) {
  CaseResult r;
  r.nodes = nodes;
  r.slot = slot;
  r.attempt = attempt;
  r.case_seed = case_seed(spec.seed, nodes, slot, attempt);
  SampledCase sampled;
  try {
    sampled = sample_case(spec, r.case_seed);
  } catch (const SamplingError& e) {
    r.message = e.what();
    return r;
  }
  NonconvexProblem problem;
  try {
    problem = case_problem(spec, sampled, nodes);
  } catch (const ValidationError& e) {
    r.message = std::string("invalid sampled case: ") + e.what();
    return r;
  }
  ScvxConfig cfg = spec.scvx;
  if (cfg.trust_weight.size() == 0 || cfg.virtual_weight.size() == 0) {
    const ScvxConfig def = default_config(problem);
    if (cfg.trust_weight.size() == 0) cfg.trust_weight = def.trust_weight;
    if (cfg.virtual_weight.size() == 0) cfg.virtual_weight = def.virtual_weight;
  }
  ScvxResult res = solve_scvx(problem, cfg);
  const auto& rep = res.report;
  r.converged = rep.converged;
  r.backend_failure = rep.backend_failure;
  r.iterations = rep.iterations;
  r.tf_retries = rep.tf_retries;
  r.total_solve_time = rep.total_solve_time;
  r.fuel = rep.fuel;
  r.message = rep.message;
  if (r.converged) {
    r.check = check_nodes(problem, res.trajectory);
    r.constraints_ok = r.check.passes();
    r.clipping = clipping(problem, res.trajectory, spec.dense_samples);
  }
  if (spec.keep_trajectories) r.trajectory = std::move(res.trajectory);
  return r;
}

SummaryStats summarize(std::vector<double> values) {
  SummaryStats s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(n);
  s.median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  if (n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(n - 1));
  }
  s.min = values.front();
  s.max = values.back();
  return s;
}

std::vector<KSummary> aggregate(const std::vector<CaseResult>& cases) {
  std::vector<int> ks;
  for (const auto& c : cases) {
    if (std::find(ks.begin(), ks.end(), c.nodes) == ks.end()) ks.push_back(c.nodes);
  }
  std::sort(ks.begin(), ks.end());
  std::vector<KSummary> out;
  for (int k : ks) {
    KSummary s;
    s.nodes = k;
    std::vector<double> rt, cl, it;
    for (const auto& c : cases) {
      if (c.nodes != k) continue;
      if (!c.converged) {
        ++s.failures;
        continue;
      }
      ++s.converged;
      rt.push_back(1e3 * c.total_solve_time);
      cl.push_back(1e2 * c.clipping);
      it.push_back(c.iterations);
    }
    s.runtime_ms = summarize(std::move(rt));
    s.clipping_cm = summarize(std::move(cl));
    s.iterations = summarize(std::move(it));
    out.push_back(s);
  }
  return out;
}

double CampaignResult::convergence_rate() const {
  if (cases.empty()) return 0.0;
  int conv = 0;
  for (const auto& c : cases) conv += c.converged ? 1 : 0;
  return static_cast<double>(conv) / static_cast<double>(cases.size());
}

void CampaignResult::write_runtime_table(std::ostream& out) const {
  write_stats_table(out, std::string("SCvx runtime, ") + scenario_name(scenario) + " [ms]", per_k,
                    &KSummary::runtime_ms, "%.1f");
}

void CampaignResult::write_deterministic_tables(std::ostream& out) const {
  write_stats_table(out, std::string("Constraint clipping, ") + scenario_name(scenario) + " [cm]",
                    per_k, &KSummary::clipping_cm, "%.2f");
  write_stats_table(out, std::string("SCvx iterations, ") + scenario_name(scenario), per_k,
                    &KSummary::iterations, "%.2f");
  out << "# Convergence, " << scenario_name(scenario) << "\n";
  out << "K\tConverged\tFailed\n";
  for (const auto& row : per_k) out << row.nodes << '\t' << row.converged << '\t' << row.failures << '\n';
  out << "\n";
}

void CampaignResult::write_manifest(std::ostream& out) const {
  out << "# K\tslot\tattempt\tseed\tconverged\titerations\ttf_retries\tfuel\tclipping_m\tnodes_ok\tmessage\n";
  for (const auto& c : cases) {
    out << c.nodes << '\t' << c.slot << '\t' << c.attempt << '\t' << c.case_seed << '\t'
        << (c.converged ? 1 : 0) << '\t' << c.iterations << '\t' << c.tf_retries << '\t'
        << fmt("%.17g", c.fuel) << '\t' << fmt("%.17g", c.clipping) << '\t'
        << (c.constraints_ok ? 1 : 0) << '\t' << c.message << '\n';
  }
}

CampaignResult run_campaign(const CampaignSpec& spec, int workers) {
  spec.validate();
  struct Task {
    int nodes;
    int slot;
  };
  std::vector<Task> tasks;
  for (int k : spec.k_list) {
    for (int s = 0; s < spec.cases_per_k; ++s) tasks.push_back({k, s});
  }
  std::vector<std::vector<CaseResult>> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
      for (int a = 0; a <= spec.max_replacements; ++a) {
        results[i].push_back(run_case(spec, tasks[i].nodes, tasks[i].slot, a));
        if (results[i].back().converged) break;
      }
    }
  };
  workers = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(tasks.size(), 1)));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  CampaignResult out;
  out.scenario = spec.scenario;
  for (auto& r : results) {
    for (auto& c : r) out.cases.push_back(std::move(c));
  }
  std::stable_sort(out.cases.begin(), out.cases.end(), [](const CaseResult& a, const CaseResult& b) {
    return std::tie(a.nodes, a.slot, a.attempt) < std::tie(b.nodes, b.slot, b.attempt);
  });
  out.per_k = aggregate(out.cases);
  return out;
}

}  // namespace quadstc
