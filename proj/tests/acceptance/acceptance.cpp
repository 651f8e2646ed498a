// Acceptance checks. Prints one PASS/FAIL line per criterion; the exit code
// is nonzero when any selected criterion fails.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "quadstc/config.hpp"
#include "quadstc/dynamics.hpp"
#include "quadstc/harness.hpp"
#include "quadstc/stc.hpp"

using namespace quadstc;
using Eigen::VectorXd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

Config bundled(const std::string& name) { return load_config(std::string(QUADSTC_CONFIG_DIR) + "/" + name); }

CampaignSpec campaign_spec(const std::string& config, std::vector<int> k_list, int cases, int replacements) {
  CampaignSpec s = build_campaign(bundled(config));
  s.k_list = std::move(k_list);
  s.cases_per_k = cases;
  s.max_replacements = replacements;
  return s;
}

const KSummary* summary_for(const CampaignResult& r, int k) {
  for (const auto& s : r.per_k)
    if (s.nodes == k) return &s;
  return nullptr;
}

std::string median_text(const CampaignResult& r, int k, int converged) {
  if (converged == 0) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f cm", summary_for(r, k)->clipping_cm.median);
  return buf;
}

// --- 1: STC encodings ------------------------------------------------------

ScalarFunction coord(int i, int n) {
  return {[i](const VectorXd& z) { return z[i]; },
          [i, n](const VectorXd&) -> VectorXd { return VectorXd::Unit(n, i); }, std::nullopt};
}

double draw(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 7);
  std::uniform_real_distribution<double> u(-3, 3);
  switch (pick(rng)) {
    case 0: return 0.0;
    case 1: return -1.0;
    case 2: return 1.0;
    default: return u(rng);
  }
}

Outcome criterion1() {
  constexpr int kTrials = 100000;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240101);
  long mismatches = 0;

  const ScalarStc sc{coord(0, 2), coord(1, 2)};
  for (int i = 0; i < kTrials; ++i) {
    const Eigen::Vector2d z(draw(rng), draw(rng));
    mismatches += (eval_scalar_stc(sc, z) <= 0.0) != oracle::implication(true, {z[0]}, {z[1]});
  }

  constexpr int ng = 3, nc = 2;
  for (auto mode : {TriggerMode::And, TriggerMode::Or}) {
    CompoundStc s;
    for (int j = 0; j < ng; ++j) s.triggers.push_back(coord(j, ng + nc));
    for (int j = 0; j < nc; ++j) s.constraints.push_back(coord(ng + j, ng + nc));
    s.trigger_mode = mode;
    s.constraint_form = ConstraintForm::EqualityWithSlacks;
    for (int i = 0; i < kTrials; ++i) {
      VectorXd z(ng + nc);
      for (int j = 0; j < ng + nc; ++j) z[j] = draw(rng);
      const std::vector<double> g(z.data(), z.data() + ng), c(z.data() + ng, z.data() + ng + nc);
      const bool truth = oracle::implication(mode == TriggerMode::And, g, c);
      bool witness = eval_compound(s, z, VectorXd::Zero(nc)) == 0.0;
      for (int j = 0; j < nc && !witness; ++j) {
        if (c[static_cast<std::size_t>(j)] > 0.0) continue;
        VectorXd al = VectorXd::Zero(nc);
        al[j] = -c[static_cast<std::size_t>(j)];
        witness = eval_compound(s, z, al) == 0.0;
      }
      mismatches += witness != truth;
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 10.0,
          fmt("STC equivalence, 3 forms x %d trials: %ld mismatches in %.2f s", kTrials, mismatches, secs)};
}

// --- 2: discretization -----------------------------------------------------

Outcome criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_real_distribution<double> tf(0.5, 6.0);
  std::uniform_int_distribution<int> nodes(5, 40);
  const double kd_values[] = {0.0, 0.1, 0.5};
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    QuadModel m;
    m.drag = kd_values[i % 3];
    const auto d = discretize_foh(m, tf(rng), nodes(rng));
    VectorXd x0(6), u0(3), u1(3);
    for (int j = 0; j < 3; ++j) {
      x0[j] = 5 * u(rng);
      x0[3 + j] = 3 * u(rng);
      u0[j] = 4 * u(rng);
      u1[j] = 4 * u(rng);
    }
    const VectorXd step = d.step(x0, u0, u1);
    const VectorXd rk4 = oracle::rk4_foh(x0, u0, u1, d.dt, m.mass, m.drag, m.gravity);
    const VectorXd dense = propagate_dense(m, x0, u0, u1, d.dt, 2).col(1);
    worst = std::max({worst, (step - rk4).norm() / rk4.norm(), (step - dense).norm() / dense.norm()});
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 30.0,
          fmt("1000 FOH steps vs RK4 and dense propagation: worst relative error %.2e in %.2f s", worst, secs)};
}

// --- 3 and 7 share one campaign --------------------------------------------

const CampaignResult& s1_k30() {
  static const CampaignResult r = run_campaign(campaign_spec("scenario1_campaign.yaml", {30}, 50, 0), workers());
  return r;
}

Outcome criterion3() {
  const auto& r = s1_k30();
  int converged = 0, bad = 0;
  for (const auto& c : r.cases) {
    if (!c.converged) continue;
    ++converged;
    bad += !(c.constraints_ok && c.check.passes());
  }
  const double rate = static_cast<double>(converged) / static_cast<double>(r.cases.size());
  const bool clip_ok = converged > 0 && summary_for(r, 30)->clipping_cm.median <= 10.0;
  return {rate >= 0.90 && bad == 0 && clip_ok,
          fmt("scenario 1, K=30: %d/%zu converged (%.0f%%), %d node-check failures, median clipping %s",
              converged, r.cases.size(), 100 * rate, bad, median_text(r, 30, converged).c_str())};
}

Outcome criterion7() {
  const auto& r = s1_k30();
  int converged = 0, loose = 0;
  double worst = 0.0;
  for (const auto& c : r.cases) {
    if (!c.converged) continue;
    ++converged;
    worst = std::max(worst, c.check.lossless_gap);
    loose += c.check.lossless_gap > 1e-6;
  }
  return {converged > 0 && loose == 0,
          fmt("lossless gap over %d converged scenario 1 cases: worst %.2e, %d above 1e-6", converged, worst, loose)};
}

// --- 4: clipping trend -----------------------------------------------------

Outcome criterion4() {
  const std::vector<int> ks{15, 20, 25, 30};
  bool pass = true;
  std::string detail = "median clipping (cm) by K:";
  for (const auto& [name, file] : {std::pair{"scenario 1", "scenario1_campaign.yaml"},
                                   std::pair{"scenario 2", "scenario2_campaign.yaml"}}) {
    const auto r = run_campaign(campaign_spec(file, ks, 25, 0), workers());
    detail += std::string(" ") + name + " [";
    double prev = std::numeric_limits<double>::infinity();
    for (int k : ks) {
      const auto* s = summary_for(r, k);
      if (!s || s->converged == 0) {
        detail += fmt(" K%d: none converged", k);
        pass = false;
        continue;
      }
      detail += fmt(" K%d: %.2f", k, s->clipping_cm.median);
      if (s->clipping_cm.median > prev) pass = false;
      prev = s->clipping_cm.median;
    }
    detail += " ]";
  }
  return {pass, detail};
}

// --- 5: runtime ------------------------------------------------------------

Outcome criterion5() {
  const std::vector<int> ks{15, 20, 25, 30};
  // One worker: concurrent cases on shared cores would inflate solve times.
  const auto r = run_campaign(campaign_spec("scenario1_campaign.yaml", ks, 25, 0), 1);
  bool increasing = true;
  double prev = 0.0;
  std::string means;
  for (int k : ks) {
    const auto* s = summary_for(r, k);
    const double mean = s && s->converged ? s->runtime_ms.mean : -1.0;
    means += fmt(" K%d %.1f", k, mean);
    if (!(mean > prev)) increasing = false;
    prev = mean;
  }
  const Config cfg = bundled("scenario1.yaml");
  const auto problem = build_problem(cfg, 30);
  const auto single = solve_scvx(problem, build_scvx_config(cfg, problem));
  const double t = single.report.total_solve_time;
  return {increasing && single.report.converged && t < 1.0,
          fmt("mean runtime ms:%s; K=30 single solve %.0f ms (%s)", means.c_str(), 1e3 * t,
              single.report.converged ? "converged" : "not converged")};
}

// --- 6: scenario 2 ---------------------------------------------------------

Outcome criterion6() {
  const auto r = run_campaign(campaign_spec("scenario2_campaign.yaml", {30}, 25, 0), workers());
  int converged = 0, payload_bad = 0, contained = 0;
  for (const auto& c : r.cases) {
    if (!c.converged) continue;
    ++converged;
    payload_bad += c.check.payload > 1e-4;
    contained += c.check.keepout_containment;
  }
  const double rate = static_cast<double>(converged) / static_cast<double>(r.cases.size());
  const bool clip_ok = converged > 0 && summary_for(r, 30)->clipping_cm.median <= 5.0;
  return {rate >= 0.85 && payload_bad == 0 && contained == 0 && clip_ok,
          fmt("scenario 2, K=30: %d/%zu converged (%.0f%%), %d payload violations, %d contained obstacles, "
              "median clipping %s",
              converged, r.cases.size(), 100 * rate, payload_bad, contained, median_text(r, 30, converged).c_str())};
}

// --- 8: hover --------------------------------------------------------------

Outcome criterion8() {
  BoundaryConditions bc;
  bc.initial_positions = {Eigen::Vector3d(2, 1, -1)};
  bc.final_positions = bc.initial_positions;
  bc.v_max = 3.0;
  const QuadModel m;
  const auto p = assemble_problem(ScenarioKind::Hoop, std::nullopt, std::nullopt, bc, m, ControlSetParams{}, 30);
  const auto res = solve_scvx(p, default_config(p));
  const double expect = m.mass * m.gravity * bc.t_f;
  const double rel = std::abs(res.report.fuel - expect) / expect;
  return {res.report.converged && rel <= 1e-6,
          fmt("hover fuel %.10f vs m g t_f = %.10f N s, relative error %.2e", res.report.fuel, expect, rel)};
}

// --- 9: determinism --------------------------------------------------------

Outcome criterion9() {
  const auto spec = campaign_spec("scenario1_campaign.yaml", {15, 30}, 8, 1);
  auto render = [&](int w) {
    const auto r = run_campaign(spec, w);
    std::ostringstream out;
    r.write_deterministic_tables(out);
    r.write_manifest(out);
    return out.str();
  };
  const std::string a = render(1), b = render(3), c = render(1);
  return {a == b && a == c && !a.empty(),
          fmt("campaign tables and manifest (%zu bytes) identical for workers 1, 3, 1: %s", a.size(),
              a == b && a == c ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quadstc acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9};
  int failed = 0;
  for (int n = 1; n <= 9; ++n) {
    if (only && n != only) continue;
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(n - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", n, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
