#pragma once

// Monte-Carlo campaigns: case sampling, batch execution across worker
// threads, statistics, and the inter-sample clipping checks.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "quadstc/scenarios.hpp"
#include "quadstc/scvx.hpp"

namespace quadstc {

using Rng = std::mt19937_64;

/// Hoop placement ranges. Positions are (up, east, north); angles in degrees.
struct HoopSampling {
  Eigen::Vector3d center_min{-1.0, -2.0, 2.0};
  Eigen::Vector3d center_max{1.0, 2.0, 4.0};
  double tilt_deg = 25.0;     // phi in [-tilt, tilt]
  double heading_deg = 35.0;  // psi in [-heading, heading]
};

/// Formation and obstacle ranges in the (east, north) plane.
struct BeamSampling {
  Eigen::Vector2d center_min{-2.0, 0.0};
  Eigen::Vector2d center_max{2.0, 1.0};
  double angle_deg = 70.0;
  int obstacle_count = 4;
  Eigen::Vector2d obstacle_min{-2.0, 2.0};
  Eigen::Vector2d obstacle_max{2.0, 4.5};
  int rejection_budget = 10000;
};

/// Unit hoop normal for tilt phi (about East) then heading psi (about Up),
/// applied to the nominal North axis.
Eigen::Vector3d hoop_normal(double tilt_rad, double heading_rad);

/// max{0.8 (l_o + 2 w_o), 2 w_o}
double obstacle_spacing(const BeamSpec& spec);

struct SamplingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SampledCase {
  std::optional<HoopSpec> hoop;
  std::optional<BeamSpec> beam;
  BoundaryConditions boundary;
};

/// Replaces the hoop center and normal of `base`; boundary data is kept.
SampledCase sample_scenario1(Rng& rng, const HoopSpec& base, const BoundaryConditions& boundary,
                             const HoopSampling& ranges = {});

/// Samples the initial formation and the obstacle field. The final formation,
/// t_f and v_max come from `boundary`. Throws SamplingError when the
/// rejection budget runs out.
SampledCase sample_scenario2(Rng& rng, const BeamSpec& base, const BoundaryConditions& boundary,
                             const BeamSampling& ranges = {});

/// Lateral miss distance beyond rho_c where the dense path crosses the hoop
/// plane (worst crossing). With no crossing, the lateral distance at the
/// closest approach to the plane.
double clipping_scenario1(const NonconvexProblem& problem, const Trajectory& traj,
                          int dense_samples = 50);

/// Deepest penetration of the vehicle-vehicle segment into any disk of
/// radius w_o around an obstacle, over dense samples.
double clipping_scenario2(const NonconvexProblem& problem, const Trajectory& traj,
                          int dense_samples = 50);

double clipping(const NonconvexProblem& problem, const Trajectory& traj, int dense_samples = 50);

/// Node-level recheck of a trajectory against the original nonconvex problem.
/// Each field holds a worst-case violation; a negative or zero value means
/// satisfied.
struct NodeCheck {
  double thrust = 0.0;       // outside [T_min, T_max] or the tilt cone, N
  double speed = 0.0;        // above v_max, m/s
  double boundary = 0.0;     // boundary positions, velocities and controls
  double payload = 0.0;      // | ||r1 - r2|| - l_o |, m
  double dynamics = 0.0;     // FOH one-step residual
  double lossless_gap = 0.0; // max_k | Gamma_k - ||u_k|| |
  int keepout_containment = 0;  // (node, obstacle) pairs with the center inside the rectangle

  struct Tolerances {
    double thrust = 1e-6;
    double speed = 1e-6;
    double boundary = 1e-6;
    double payload = 1e-4;
    double dynamics = 1e-6;
  };
  bool passes(const Tolerances& tol) const;
  bool passes() const { return passes(Tolerances{}); }
};

NodeCheck check_nodes(const NonconvexProblem& problem, const Trajectory& traj);

struct CampaignSpec {
  ScenarioKind scenario = ScenarioKind::Hoop;
  std::vector<int> k_list{15, 20, 25, 30};
  int cases_per_k = 100;
  std::uint64_t seed = 1;
  int dense_samples = 50;
  /// Failed cases are replaced by fresh samples up to this many times per
  /// slot; every failure is counted.
  int max_replacements = 3;
  HoopSampling hoop_ranges;
  BeamSampling beam_ranges;

  // Fixed parameters shared by every case.
  QuadModel model;
  ControlSetParams control;
  HoopSpec hoop;
  BeamSpec beam;
  BoundaryConditions boundary;
  /// Per-case SCvx settings; empty weight matrices select the scenario
  /// defaults.
  ScvxConfig scvx;
  bool keep_trajectories = false;

  void validate() const;
};

struct CaseResult {
  int nodes = 0;
  int slot = 0;
  int attempt = 0;  // replacement index within the slot
  std::uint64_t case_seed = 0;
  bool converged = false;
  bool backend_failure = false;
  int iterations = 0;
  int tf_retries = 0;
  double total_solve_time = 0.0;  // s
  double fuel = 0.0;
  double clipping = 0.0;  // m, converged cases only
  bool constraints_ok = false;
  NodeCheck check;
  std::string message;
  std::optional<Trajectory> trajectory;
};

/// Mean, median, sample standard deviation, min, max.
struct SummaryStats {
  int count = 0;
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
};

SummaryStats summarize(std::vector<double> values);

struct KSummary {
  int nodes = 0;
  int converged = 0;
  int failures = 0;
  SummaryStats runtime_ms;   // converged cases
  SummaryStats clipping_cm;  // converged cases
  SummaryStats iterations;   // converged cases
};

struct CampaignResult {
  ScenarioKind scenario = ScenarioKind::Hoop;
  std::vector<CaseResult> cases;  // ordered by (K, slot, attempt)
  std::vector<KSummary> per_k;

  double convergence_rate() const;
  /// Runtime table (wall-clock, not reproducible).
  void write_runtime_table(std::ostream& out) const;
  /// Clipping, iteration and count tables: a pure function of the case
  /// outcomes, bit-identical across runs and worker counts.
  void write_deterministic_tables(std::ostream& out) const;
  void write_manifest(std::ostream& out) const;
};

/// Deterministic per-case seed from (campaign seed, K, slot, attempt).
std::uint64_t case_seed(std::uint64_t seed, int nodes, int slot, int attempt);

/// Reproduces the sample drawn for a case seed. Throws SamplingError.
SampledCase sample_case(const CampaignSpec& spec, std::uint64_t case_seed);

/// Builds the problem for one sampled case.
NonconvexProblem case_problem(const CampaignSpec& spec, const SampledCase& sampled, int nodes);

/// Samples and solves one case.
CaseResult run_case(const CampaignSpec& spec, int nodes, int slot, int attempt);

CampaignResult run_campaign(const CampaignSpec& spec, int workers = 1);

/// Recomputes per-K summaries from case results.
std::vector<KSummary> aggregate(const std::vector<CaseResult>& cases);

}  // namespace quadstc
