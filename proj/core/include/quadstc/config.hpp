#pragma once

// Scenario configuration files (YAML). The key reference lives in
// docs/format.md. Parsing rejects unknown keys and reports the line.

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>
#include <optional>
#include <string>

#include "quadstc/harness.hpp"
#include "quadstc/scenarios.hpp"
#include "quadstc/scvx.hpp"

namespace quadstc {

/// Parse or semantic error in a config file; `line` is 1-based, 0 when the
/// error has no single location.
class ConfigError : public ValidationError {
 public:
  ConfigError(const std::string& message, int line);
  int line() const { return line_; }

 private:
  int line_;
};

struct ModelSection {
  double mass = 0.35;     // kg
  double drag = 0.0;      // 1/s
  double gravity = 9.81;  // m/s^2
};

struct ControlSection {
  double thrust_min = 2.0;     // N
  double thrust_max = 5.0;     // N
  double tilt_max_deg = 45.0;  // deg
};

/// Hoop as written in the file: the normal need not be unit length.
struct HoopSection {
  std::vector<std::pair<double, Eigen::Vector3d>> center_schedule;
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double hoop_radius = 0.25;
  double trigger_radius = std::numeric_limits<double>::infinity();
  double constraint_radius = 0.0;
  double half_length = 0.5;
  bool require_passage = true;

  HoopSpec to_spec() const;
};

struct SolverSection {
  int nodes = 30;
  double t_f = 4.0;  // s
  /// Diagonal of W_tr over the leading block of z_k; empty = scenario default.
  Eigen::VectorXd trust_weight;
  /// Diagonal of W_vc; empty = scenario default.
  Eigen::VectorXd virtual_weight;
  double buffer_weight = 1e5;
  double eps_tr = 1e-3;
  double eps_vc = 1e-4;
  int max_iters = 20;
  double tf_growth = 1.25;
  int max_tf_retries = 3;
  double solver_tol = 1e-9;
  StcSubproblemForm stc_form = StcSubproblemForm::ConvexFactor;
  FrameLinearization beam_frame = FrameLinearization::Full;
};

struct CampaignSection {
  std::vector<int> k_list{15, 20, 25, 30};
  int cases_per_k = 100;
  std::uint64_t seed = 1;
  int dense_samples = 50;
  int max_replacements = 3;
  HoopSampling hoop_ranges;
  BeamSampling beam_ranges;
};

struct Config {
  ScenarioKind scenario = ScenarioKind::Hoop;
  ModelSection model;
  ControlSection control;
  std::optional<HoopSection> hoop;
  std::optional<BeamSpec> beam;
  BoundaryConditions boundary;
  SolverSection solver;
  std::optional<CampaignSection> campaign;
};

/// Field-wise equality, compared through the round-trip serialization.
bool operator==(const Config& a, const Config& b);

QuadModel make_model(const Config& config);
ControlSetParams make_control(const Config& config);

Config parse_config(const std::string& text);
Config load_config(const std::string& path);

/// Emits every field, optional ones included, at round-trip precision.
std::string serialize_config(const Config& config);

/// Assembled problem with optional K / t_f overrides. Throws ValidationError.
NonconvexProblem build_problem(const Config& config, std::optional<int> nodes = std::nullopt,
                               std::optional<double> t_f = std::nullopt);

ScvxConfig build_scvx_config(const Config& config, const NonconvexProblem& problem);

/// Requires a campaign section.
CampaignSpec build_campaign(const Config& config);

}  // namespace quadstc
