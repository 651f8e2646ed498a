// quadstc command-line tool: solve, campaign, validate, replay.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "quadstc/config.hpp"
#include "quadstc/harness.hpp"
#include "quadstc/scvx.hpp"
#include "quadstc/trajectory_io.hpp"

namespace fs = std::filesystem;
using namespace quadstc;

namespace {

enum Exit { kConverged = 0, kValidation = 2, kNotConverged = 3, kBackend = 4 };

struct Common {
  std::string config;
  std::optional<int> nodes;
  std::optional<double> t_f;
};

void print_check(std::ostream& out, const NodeCheck& c) {
  out << "thrust violation      " << c.thrust << " N\n"
      << "speed violation       " << c.speed << " m/s\n"
      << "boundary error        " << c.boundary << "\n"
      << "payload length error  " << c.payload << " m\n"
      << "dynamics residual     " << c.dynamics << "\n"
      << "lossless gap          " << c.lossless_gap << " N\n"
      << "keep-out containment  " << c.keepout_containment << "\n";
}

void write_file(const fs::path& path, const std::string& what,
                const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + what + " '" + path.string() + "'");
  body(out);
}

int cmd_solve(const Common& c, const std::string& out_path, const std::string& report_path,
              int dense) {
  const Config cfg = load_config(c.config);
  const NonconvexProblem problem = build_problem(cfg, c.nodes, c.t_f);
  const ScvxConfig scvx = build_scvx_config(cfg, problem);
  const ScvxResult res = solve_scvx(problem, scvx);
  save_trajectory(out_path, make_trajectory_file(problem, res, dense));
  write_file(report_path, "report", [&](std::ostream& o) { res.report.write_text(o); });

  const auto& rep = res.report;
  std::cout << (rep.converged ? "converged" : "not converged") << ": " << rep.iterations
            << " iterations, " << rep.tf_retries << " t_f retries, t_f = " << rep.t_f
            << " s, fuel = " << rep.fuel << " N s, solve time = " << 1e3 * rep.total_solve_time
            << " ms\n";
  if (rep.converged) {
    std::cout << "clipping " << 1e2 * clipping(problem, res.trajectory) << " cm\n";
    return kConverged;
  }
  std::cerr << "error: " << rep.message << "\n";
  return rep.backend_failure ? kBackend : kNotConverged;
}

int cmd_campaign(const Common& c, int workers, std::optional<std::uint64_t> seed,
                 const std::string& out_dir, int dense, bool save_cases) {
  const Config cfg = load_config(c.config);
  CampaignSpec spec = build_campaign(cfg);
  if (seed) spec.seed = *seed;
  if (c.nodes) spec.k_list = {*c.nodes};
  if (c.t_f) spec.boundary.t_f = *c.t_f;
  spec.keep_trajectories = save_cases;
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  const CampaignResult res = run_campaign(spec, workers);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_file(dir / "runtime.txt", "table", [&](std::ostream& o) { res.write_runtime_table(o); });
  write_file(dir / "tables.txt", "table", [&](std::ostream& o) { res.write_deterministic_tables(o); });
  write_file(dir / "manifest.txt", "manifest", [&](std::ostream& o) { res.write_manifest(o); });

  if (save_cases) {
    fs::create_directories(dir / "cases");
    for (const auto& cr : res.cases) {
      if (!cr.trajectory) continue;
      const NonconvexProblem problem = case_problem(spec, sample_case(spec, cr.case_seed), cr.nodes);
      ScvxResult r;
      r.trajectory = *cr.trajectory;
      r.report.converged = cr.converged;
      r.report.iterations = cr.iterations;
      r.report.tf_retries = cr.tf_retries;
      r.report.fuel = cr.fuel;
      r.report.message = cr.message;
      const std::string name = "K" + std::to_string(cr.nodes) + "_case" + std::to_string(cr.slot) +
                               "_" + std::to_string(cr.attempt) + ".txt";
      save_trajectory((dir / "cases" / name).string(), make_trajectory_file(problem, r, dense));
    }
  }

  res.write_runtime_table(std::cout);
  res.write_deterministic_tables(std::cout);
  std::cout << "convergence rate " << res.convergence_rate() << " over " << res.cases.size()
            << " attempts\n";
  return kConverged;
}

int cmd_validate(const Common& c) {
  const Config cfg = load_config(c.config);
  const NonconvexProblem problem = build_problem(cfg, c.nodes, c.t_f);
  build_scvx_config(cfg, problem);
  if (cfg.campaign) build_campaign(cfg);
  std::cout << "ok: " << (problem.kind == ScenarioKind::Hoop ? "hoop" : "beam") << " scenario, K = "
            << problem.nodes << ", t_f = " << problem.boundary.t_f << " s"
            << (cfg.campaign ? ", campaign section valid" : "") << "\n";
  return kConverged;
}

int cmd_replay(const Common& c, const std::string& traj_path, int dense) {
  const Config cfg = load_config(c.config);
  const TrajectoryFile f = load_trajectory(traj_path);
  if (f.scenario != cfg.scenario) throw ValidationError("trajectory scenario does not match the config");
  const Trajectory& t = f.trajectory;
  const NonconvexProblem problem = build_problem(cfg, t.nodes(), t.t_f);
  if (t.states.rows() != problem.state_dim() || t.slacks.rows() != problem.slack_dim()) {
    throw ValidationError("trajectory dimensions do not match the config");
  }
  const NodeCheck chk = check_nodes(problem, t);
  print_check(std::cout, chk);
  std::cout << "clipping              " << 1e2 * clipping(problem, t, dense) << " cm\n";
  const bool ok = chk.passes();
  std::cout << (ok ? "node constraints: pass\n" : "node constraints: FAIL\n");
  return ok ? kConverged : kNotConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory optimization with compound state-triggered constraints"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", common.config, "Scenario config (YAML)")->required()->check(CLI::ExistingFile);
    sub->add_option("--k", common.nodes, "Override the node count K")->check(CLI::Range(2, 100000));
    sub->add_option("--tf", common.t_f, "Override the final time t_f [s]")->check(CLI::PositiveNumber);
  };

  std::string out_path = "trajectory.txt";
  std::string report_path = "report.txt";
  int dense = 0;
  auto* solve = app.add_subcommand("solve", "Solve one scenario");
  add_common(solve);
  solve->add_option("-o,--out", out_path, "Trajectory file");
  solve->add_option("--report", report_path, "Convergence report file");
  solve->add_option("--emit-dense", dense, "Dense samples per interval in the trajectory file (0 = none)")
      ->check(CLI::NonNegativeNumber);

  int workers = 0;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "campaign_out";
  int campaign_dense = 0;
  auto* campaign = app.add_subcommand("campaign", "Run a Monte-Carlo campaign");
  add_common(campaign);
  campaign->add_option("--workers", workers, "Worker threads (0 = all cores)");
  campaign->add_option("--seed", seed, "Override the campaign seed");
  campaign->add_option("-o,--out", out_dir, "Output directory");
  campaign->add_option("--emit-dense", campaign_dense,
                       "Write one trajectory file per converged case with this many dense samples per interval")
      ->check(CLI::NonNegativeNumber);

  auto* validate = app.add_subcommand("validate", "Parse and check a config");
  add_common(validate);

  std::string traj_path;
  int replay_dense = 50;
  auto* replay = app.add_subcommand("replay", "Recheck a trajectory file against a config");
  add_common(replay);
  replay->add_option("trajectory", traj_path, "Trajectory file")->required()->check(CLI::ExistingFile);
  replay->add_option("--emit-dense", replay_dense, "Dense samples per interval for the clipping check")
      ->check(CLI::Range(2, 100000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kValidation;
  }

  try {
    if (*solve) return cmd_solve(common, out_path, report_path, dense);
    if (*campaign) {
      return cmd_campaign(common, workers, seed, out_dir, campaign_dense, campaign_dense > 0);
    }
    if (*validate) return cmd_validate(common);
    if (*replay) return cmd_replay(common, traj_path, replay_dense);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBackend;
  }
  return kValidation;
}
