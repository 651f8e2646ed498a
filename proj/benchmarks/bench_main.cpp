#include <benchmark/benchmark.h>

#include "quadstc/config.hpp"
#include "quadstc/dynamics.hpp"
#include "quadstc/scvx.hpp"

using namespace quadstc;

namespace {

Config scenario1() { return load_config(std::string(QUADSTC_CONFIG_DIR) + "/scenario1.yaml"); }

void BM_DiscretizeFoh(benchmark::State& state) {
  QuadModel m;
  m.drag = 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(discretize_foh(m, 4.0, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_DiscretizeFoh)->Arg(15)->Arg(30);

// First subproblem of a hoop solve: one interior-point solve.
void BM_Subproblem(benchmark::State& state) {
  const Config cfg = scenario1();
  const auto p = build_problem(cfg, static_cast<int>(state.range(0)));
  const auto scvx = build_scvx_config(cfg, p);
  const auto dyn = discretize_foh(p.model, p.boundary.t_f, p.nodes);
  const auto sub = build_subproblem(p, initialize(p, p.nodes, p.boundary.t_f), dyn, scvx);
  for (auto _ : state) benchmark::DoNotOptimize(solve(sub.program, scvx.solver_tol));
}
BENCHMARK(BM_Subproblem)->Arg(15)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_HoopSolve(benchmark::State& state) {
  const Config cfg = scenario1();
  const auto p = build_problem(cfg, static_cast<int>(state.range(0)));
  const auto scvx = build_scvx_config(cfg, p);
  for (auto _ : state) benchmark::DoNotOptimize(solve_scvx(p, scvx));
}
BENCHMARK(BM_HoopSolve)->Arg(15)->Arg(30)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
