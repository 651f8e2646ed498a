#pragma once

// Line-oriented trajectory files: a key/value header, a node table and an
// optional dense inter-sample track. Layout documented in docs/format.md.

#include <iosfwd>
#include <string>

#include "quadstc/scenarios.hpp"
#include "quadstc/scvx.hpp"

namespace quadstc {

struct TrajectoryFile {
  ScenarioKind scenario = ScenarioKind::Hoop;
  int vehicles = 1;
  int spatial_dim = 3;
  bool converged = false;
  int iterations = 0;
  int tf_retries = 0;
  double fuel = 0.0;
  double final_j_vc = 0.0;
  std::string message;
  Trajectory trajectory;
  /// Samples per interval of the dense track, 0 when absent. Columns of
  /// `dense` are [t, stacked state]; rows are samples.
  int dense_samples = 0;
  Eigen::MatrixXd dense;
};

TrajectoryFile make_trajectory_file(const NonconvexProblem& problem, const ScvxResult& result,
                                    int dense_samples);

void write_trajectory(std::ostream& out, const TrajectoryFile& file);
/// Throws ValidationError on malformed input, naming the line.
TrajectoryFile read_trajectory(std::istream& in);

void save_trajectory(const std::string& path, const TrajectoryFile& file);
TrajectoryFile load_trajectory(const std::string& path);

}  // namespace quadstc
