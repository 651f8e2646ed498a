#include <doctest.h>

#include <string>

#include "quadstc/config.hpp"

using namespace quadstc;

namespace {

const char* kHoop = R"(model:
  mass: 0.35
control:
  thrust_min: 2.0
  thrust_max: 5.0
  tilt_max_deg: 45.0
scenario:
  hoop:
    center: [0.1, 0.2, 3.0]
    normal: [0.1, 0.2, 1.0]
    hoop_radius: 0.25
    half_length: 0.5
boundary:
  initial_positions: [[0, 0, 0]]
  final_positions: [[0, 0, 6]]
solver:
  nodes: 25
  t_f: 4.0
  trust_weight: [0.1, 0.1, 0.1]
campaign:
  k_list: [15, 30]
  cases_per_k: 7
  seed: 12345678901234
  hoop_tilt_deg: 10.5
)";

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  s.replace(s.find(from), from.size(), to);
  return s;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("parse fills documented defaults and builds the problem") {
  const Config c = parse_config(kHoop);
  CHECK(c.scenario == ScenarioKind::Hoop);
  CHECK(c.model.gravity == 9.81);
  CHECK(c.model.drag == 0.0);
  CHECK(c.solver.nodes == 25);
  CHECK(c.solver.eps_tr == 1e-3);
  CHECK(c.campaign->seed == 12345678901234ULL);
  CHECK(c.campaign->max_replacements == 3);
  CHECK(c.campaign->hoop_ranges.tilt_deg == 10.5);
  const auto p = build_problem(c);
  CHECK(p.nodes == 25);
  CHECK(p.hoop->normal.norm() == doctest::Approx(1.0));
  CHECK(build_problem(c, 40, 5.0).boundary.t_f == 5.0);
  const auto cfg = build_scvx_config(c, p);
  CHECK(cfg.trust_weight.rows() == 3);
  CHECK(cfg.trust_weight(1, 1) == 0.1);
  const auto spec = build_campaign(c);
  CHECK(spec.cases_per_k == 7);
  CHECK(spec.scvx.virtual_weight.size() == 0);  // scenario default per case
}

TEST_CASE("round trip: parse, serialize, parse gives the same configuration") {
  const Config a = parse_config(kHoop);
  const std::string text = serialize_config(a);
  const Config b = parse_config(text);
  CHECK(a == b);
  CHECK(serialize_config(b) == text);
  CHECK(b.hoop->trigger_radius == std::numeric_limits<double>::infinity());
  CHECK(b.hoop->normal == a.hoop->normal);

  // Awkward decimals survive.
  Config c = a;
  c.model.mass = 0.1 + 0.2;
  c.boundary.v_max = 1.0 / 3.0;
  c.solver.virtual_weight = Eigen::VectorXd::Constant(6, 1e5 / 7.0);
  const Config d = parse_config(serialize_config(c));
  CHECK(d.model.mass == c.model.mass);
  CHECK(*d.boundary.v_max == *c.boundary.v_max);
  CHECK(d == c);
}

TEST_CASE("bundled configs parse and round-trip") {
  for (const char* name : {"scenario1.yaml", "scenario1_campaign.yaml", "scenario2.yaml",
                           "scenario2_campaign.yaml"}) {
    CAPTURE(name);
    const Config c = load_config(std::string(QUADSTC_CONFIG_DIR) + "/" + name);
    CHECK(parse_config(serialize_config(c)) == c);
    CHECK_NOTHROW(build_problem(c));
  }
}

TEST_CASE("errors name the key and the line") {
  CHECK(error_of(replace(kHoop, "  mass: 0.35\n", "  mass: 0.35\n  masss: 1\n")) ==
        "line 3: unknown key 'model.masss'");
  CHECK(error_of(replace(kHoop, "  t_f: 4.0\n", "")).find("missing key 'solver.t_f'") != std::string::npos);
  CHECK(error_of(replace(kHoop, "nodes: 25", "nodes: many")) == "line 17: invalid value for 'solver.nodes'");
  CHECK(error_of(replace(kHoop, "center: [0.1, 0.2, 3.0]", "center: [0.1, 3.0]"))
            .find("'scenario.hoop.center' needs 3 entries") != std::string::npos);
  CHECK(error_of(replace(kHoop, "campaign:", "campain:")).find("unknown key 'campain'") != std::string::npos);
  CHECK(error_of("model: [1, 2\n").find("syntax error") != std::string::npos);
  CHECK(error_of(replace(kHoop, "scenario:\n", "scenario:\n  beam: {payload_length: 1, keepout_half_width: 0.43, obstacle_radius: 0.08}\n"))
            .find("exactly one of") != std::string::npos);
}

TEST_CASE("payload length violation is rejected at problem build") {
  const std::string beam = R"(model: {mass: 0.35}
control: {thrust_min: 2, thrust_max: 5, tilt_max_deg: 45}
scenario:
  beam: {payload_length: 1.0, keepout_half_width: 0.43, obstacle_radius: 0.08, obstacles: [[0, 3]]}
boundary:
  initial_positions: [[-0.6, 0.5], [0.6, 0.5]]
  final_positions: [[-0.5, 5.5], [0.5, 5.5]]
  v_max: 3
solver: {nodes: 20, t_f: 4}
)";
  const Config c = parse_config(beam);
  try {
    build_problem(c);
    FAIL("expected rejection");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("rigid payload length") != std::string::npos);
  }
}

}  // TEST_SUITE
