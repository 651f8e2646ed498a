#include <doctest.h>

#include <sstream>

#include "quadstc/config.hpp"
#include "quadstc/harness.hpp"
#include "quadstc/trajectory_io.hpp"

using namespace quadstc;

TEST_SUITE("trajectory_io") {

TEST_CASE("write, reload and recheck a converged trajectory") {
  const Config cfg = load_config(std::string(QUADSTC_CONFIG_DIR) + "/scenario1.yaml");
  const auto problem = build_problem(cfg);
  const auto res = solve_scvx(problem, build_scvx_config(cfg, problem));
  REQUIRE(res.report.converged);
  const auto file = make_trajectory_file(problem, res, 50);
  CHECK(file.dense.rows() == 29 * 50);

  std::stringstream ss;
  write_trajectory(ss, file);
  const auto back = read_trajectory(ss);
  CHECK(back.converged);
  CHECK(back.trajectory.nodes() == problem.nodes);
  CHECK(back.trajectory.t_f == res.trajectory.t_f);
  CHECK(back.trajectory.states == res.trajectory.states);
  CHECK(back.trajectory.controls == res.trajectory.controls);
  CHECK(back.trajectory.thrust_bounds == res.trajectory.thrust_bounds);
  CHECK(back.dense == file.dense);
  CHECK(back.fuel == res.report.fuel);

  const auto chk = check_nodes(problem, back.trajectory);
  CHECK(chk.passes());
  CHECK(clipping(problem, back.trajectory) == clipping(problem, res.trajectory));
}

TEST_CASE("malformed files are rejected with a line number") {
  std::istringstream bad("quadstc-trajectory 1\nscenario hoop\nvehicles one\n");
  try {
    read_trajectory(bad);
    FAIL("expected rejection");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  std::istringstream wrong("not a trajectory\n");
  CHECK_THROWS_AS(read_trajectory(wrong), ValidationError);
}

TEST_CASE("node times must increase") {
  Trajectory t;
  t.t_f = 1.0;
  t.states = Eigen::MatrixXd::Zero(6, 2);
  t.controls = Eigen::MatrixXd::Zero(3, 2);
  t.thrust_bounds = Eigen::MatrixXd::Zero(1, 2);
  t.slacks.resize(0, 2);
  TrajectoryFile f;
  f.trajectory = t;
  std::stringstream ss;
  write_trajectory(ss, f);
  std::string text = ss.str();
  text.replace(text.find("\n1 "), 3, "\n0 ");
  std::istringstream in(text);
  CHECK_THROWS_AS(read_trajectory(in), ValidationError);
}

}  // TEST_SUITE
