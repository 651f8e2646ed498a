#include "quadstc/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace quadstc {

using Eigen::VectorXd;

ConfigError::ConfigError(const std::string& message, int line)
    : ValidationError(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      line_(line) {}

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

// A YAML mapping whose keys are checked off as they are read; finish()
// rejects whatever is left.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (!node_.IsMap()) throw ConfigError("section '" + path_ + "' must be a mapping", line_of(node_));
  }

  bool has(const std::string& key) {
    allowed_.insert(key);
    return static_cast<bool>(node_[key]);
  }

  YAML::Node raw(const std::string& key) {
    if (!has(key)) throw ConfigError("missing key '" + qualified(key) + "'", line_of(node_));
    return node_[key];
  }

  template <class T>
  T req(const std::string& key) {
    return convert<T>(raw(key), key);
  }

  template <class T>
  T opt(const std::string& key, T fallback) {
    return has(key) ? convert<T>(node_[key], key) : fallback;
  }

  template <class T>
  T convert(const YAML::Node& n, const std::string& key) {
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError("invalid value for '" + qualified(key) + "'", line_of(n));
    }
  }

  VectorXd vec(const YAML::Node& n, const std::string& key, int size) {
    const auto v = convert<std::vector<double>>(n, key);
    if (size >= 0 && static_cast<int>(v.size()) != size) {
      throw ConfigError("'" + qualified(key) + "' needs " + std::to_string(size) + " entries",
                        line_of(n));
    }
    return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  VectorXd vec(const std::string& key, int size) { return vec(raw(key), key, size); }

  std::vector<VectorXd> vec_list(const std::string& key, int size) {
    const YAML::Node n = raw(key);
    if (!n.IsSequence()) throw ConfigError("'" + qualified(key) + "' must be a list", line_of(n));
    std::vector<VectorXd> out;
    for (const auto& item : n) out.push_back(vec(item, key, size));
    return out;
  }

  Section sub(const std::string& key) { return Section(raw(key), qualified(key)); }

  void finish() const {
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!allowed_.count(key)) {
        throw ConfigError("unknown key '" + qualified(key) + "'", line_of(kv.first));
      }
    }
  }

  int line() const { return line_of(node_); }
  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> allowed_;
};

template <class T>
void positive(T v, const std::string& what, int line) {
  if (!(v > 0)) throw ConfigError("'" + what + "' must be positive", line);
}

HoopSection parse_hoop(Section s) {
  HoopSection h;
  const bool single = s.has("center");
  const bool sched = s.has("center_schedule");
  if (single == sched) {
    throw ConfigError("'scenario.hoop' needs exactly one of 'center' and 'center_schedule'", s.line());
  }
  if (single) {
    h.center_schedule = {{0.0, s.vec("center", 3)}};
  } else {
    for (const auto& row : s.vec_list("center_schedule", 4)) {
      h.center_schedule.emplace_back(row[0], row.tail<3>());
    }
  }
  h.normal = s.vec("normal", 3);
  h.hoop_radius = s.req<double>("hoop_radius");
  h.half_length = s.req<double>("half_length");
  h.constraint_radius = s.opt<double>("constraint_radius", 0.0);
  h.trigger_radius = s.opt<double>("trigger_radius", std::numeric_limits<double>::infinity());
  h.require_passage = s.opt<bool>("require_passage", true);
  s.finish();
  return h;
}

BeamSpec parse_beam(Section s) {
  BeamSpec b;
  b.payload_length = s.req<double>("payload_length");
  b.keepout_half_width = s.req<double>("keepout_half_width");
  b.obstacle_radius = s.req<double>("obstacle_radius");
  if (s.has("obstacles")) {
    for (const auto& o : s.vec_list("obstacles", 2)) b.obstacles.emplace_back(o);
  }
  s.finish();
  return b;
}

StcSubproblemForm parse_form(const std::string& v, int line) {
  if (v == "convex_factor") return StcSubproblemForm::ConvexFactor;
  if (v == "linearized") return StcSubproblemForm::Linearized;
  throw ConfigError("'solver.stc_form' must be convex_factor or linearized", line);
}

FrameLinearization parse_frame(const std::string& v, int line) {
  if (v == "full") return FrameLinearization::Full;
  if (v == "frozen") return FrameLinearization::Frozen;
  throw ConfigError("'solver.beam_frame' must be full or frozen", line);
}

CampaignSection parse_campaign(Section s) {
  CampaignSection c;
  c.k_list = s.req<std::vector<int>>("k_list");
  c.cases_per_k = s.req<int>("cases_per_k");
  c.seed = s.req<std::uint64_t>("seed");
  c.dense_samples = s.opt<int>("dense_samples", 50);
  c.max_replacements = s.opt<int>("max_replacements", 3);
  auto& h = c.hoop_ranges;
  if (s.has("hoop_center_min")) h.center_min = s.vec("hoop_center_min", 3);
  if (s.has("hoop_center_max")) h.center_max = s.vec("hoop_center_max", 3);
  h.tilt_deg = s.opt<double>("hoop_tilt_deg", h.tilt_deg);
  h.heading_deg = s.opt<double>("hoop_heading_deg", h.heading_deg);
  auto& b = c.beam_ranges;
  if (s.has("formation_center_min")) b.center_min = s.vec("formation_center_min", 2);
  if (s.has("formation_center_max")) b.center_max = s.vec("formation_center_max", 2);
  b.angle_deg = s.opt<double>("formation_angle_deg", b.angle_deg);
  b.obstacle_count = s.opt<int>("obstacle_count", b.obstacle_count);
  if (s.has("obstacle_min")) b.obstacle_min = s.vec("obstacle_min", 2);
  if (s.has("obstacle_max")) b.obstacle_max = s.vec("obstacle_max", 2);
  b.rejection_budget = s.opt<int>("rejection_budget", b.rejection_budget);
  s.finish();
  if (c.k_list.empty()) throw ConfigError("'campaign.k_list' is empty", s.line());
  for (int k : c.k_list) {
    if (k < 2) throw ConfigError("'campaign.k_list' entries must be at least 2", s.line());
  }
  positive(c.cases_per_k, "campaign.cases_per_k", s.line());
  if (c.dense_samples < 2) throw ConfigError("'campaign.dense_samples' must be at least 2", s.line());
  if (c.max_replacements < 0) throw ConfigError("'campaign.max_replacements' must be nonnegative", s.line());
  return c;
}

// Emitter helpers.
void emit_vec(YAML::Emitter& e, const VectorXd& v) {
  e << YAML::Flow << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < v.size(); ++i) e << v[i];
  e << YAML::EndSeq;
}

}  // namespace

HoopSpec HoopSection::to_spec() const {
  HoopSpec h;
  h.center_schedule = center_schedule;
  const double n = normal.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw ValidationError("hoop: normal must be nonzero");
  h.normal = normal / n;
  h.hoop_radius = hoop_radius;
  h.trigger_radius = trigger_radius;
  h.constraint_radius = constraint_radius;
  h.half_length = half_length;
  h.require_passage = require_passage;
  h.validate();
  return h;
}

Config parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("syntax error: " + e.msg, e.mark.line + 1);
  }
  if (!root || root.IsNull()) throw ConfigError("empty config", 0);
  Section top(root, "");
  Config c;

  {
    Section s = top.sub("model");
    c.model.mass = s.req<double>("mass");
    c.model.drag = s.opt<double>("drag", 0.0);
    c.model.gravity = s.opt<double>("gravity", 9.81);
    s.finish();
    positive(c.model.mass, "model.mass", s.line());
    positive(c.model.gravity, "model.gravity", s.line());
    if (!(c.model.drag >= 0.0)) throw ConfigError("'model.drag' must be nonnegative", s.line());
  }
  {
    Section s = top.sub("control");
    c.control.thrust_min = s.req<double>("thrust_min");
    c.control.thrust_max = s.req<double>("thrust_max");
    c.control.tilt_max_deg = s.req<double>("tilt_max_deg");
    s.finish();
  }
  {
    Section s = top.sub("scenario");
    const bool hoop = s.has("hoop");
    const bool beam = s.has("beam");
    if (hoop == beam) throw ConfigError("'scenario' needs exactly one of 'hoop' and 'beam'", s.line());
    if (hoop) {
      c.scenario = ScenarioKind::Hoop;
      c.hoop = parse_hoop(s.sub("hoop"));
    } else {
      c.scenario = ScenarioKind::Beam;
      c.beam = parse_beam(s.sub("beam"));
    }
    s.finish();
  }
  const int dim = c.scenario == ScenarioKind::Hoop ? 3 : 2;
  {
    Section s = top.sub("boundary");
    c.boundary.initial_positions = s.vec_list("initial_positions", dim);
    c.boundary.final_positions = s.vec_list("final_positions", dim);
    if (s.has("v_max")) c.boundary.v_max = s.req<double>("v_max");
    s.finish();
  }
  {
    Section s = top.sub("solver");
    auto& v = c.solver;
    v.nodes = s.req<int>("nodes");
    v.t_f = s.req<double>("t_f");
    if (s.has("trust_weight")) v.trust_weight = s.vec("trust_weight", -1);
    if (s.has("virtual_weight")) v.virtual_weight = s.vec("virtual_weight", -1);
    v.buffer_weight = s.opt<double>("buffer_weight", v.buffer_weight);
    v.eps_tr = s.opt<double>("eps_tr", v.eps_tr);
    v.eps_vc = s.opt<double>("eps_vc", v.eps_vc);
    v.max_iters = s.opt<int>("max_iters", v.max_iters);
    v.tf_growth = s.opt<double>("tf_growth", v.tf_growth);
    v.max_tf_retries = s.opt<int>("max_tf_retries", v.max_tf_retries);
    v.solver_tol = s.opt<double>("solver_tol", v.solver_tol);
    if (s.has("stc_form")) v.stc_form = parse_form(s.req<std::string>("stc_form"), s.line());
    if (s.has("beam_frame")) v.beam_frame = parse_frame(s.req<std::string>("beam_frame"), s.line());
    s.finish();
    if (v.nodes < 2) throw ConfigError("'solver.nodes' must be at least 2", s.line());
    positive(v.t_f, "solver.t_f", s.line());
    c.boundary.t_f = v.t_f;
  }
  if (top.has("campaign")) c.campaign = parse_campaign(top.sub("campaign"));
  top.finish();
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'", 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const Config& c) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;

  e << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "mass" << YAML::Value << c.model.mass;
  e << YAML::Key << "drag" << YAML::Value << c.model.drag;
  e << YAML::Key << "gravity" << YAML::Value << c.model.gravity;
  e << YAML::EndMap;

  e << YAML::Key << "control" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "thrust_min" << YAML::Value << c.control.thrust_min;
  e << YAML::Key << "thrust_max" << YAML::Value << c.control.thrust_max;
  e << YAML::Key << "tilt_max_deg" << YAML::Value << c.control.tilt_max_deg;
  e << YAML::EndMap;

  e << YAML::Key << "scenario" << YAML::Value << YAML::BeginMap;
  if (c.hoop) {
    const auto& h = *c.hoop;
    e << YAML::Key << "hoop" << YAML::Value << YAML::BeginMap;
    if (h.center_schedule.size() == 1 && h.center_schedule[0].first == 0.0) {
      e << YAML::Key << "center" << YAML::Value;
      emit_vec(e, h.center_schedule[0].second);
    } else {
      e << YAML::Key << "center_schedule" << YAML::Value << YAML::BeginSeq;
      for (const auto& [t, r] : h.center_schedule) {
        VectorXd row(4);
        row << t, r;
        emit_vec(e, row);
      }
      e << YAML::EndSeq;
    }
    e << YAML::Key << "normal" << YAML::Value;
    emit_vec(e, h.normal);
    e << YAML::Key << "hoop_radius" << YAML::Value << h.hoop_radius;
    e << YAML::Key << "half_length" << YAML::Value << h.half_length;
    e << YAML::Key << "constraint_radius" << YAML::Value << h.constraint_radius;
    e << YAML::Key << "trigger_radius" << YAML::Value << h.trigger_radius;
    e << YAML::Key << "require_passage" << YAML::Value << h.require_passage;
    e << YAML::EndMap;
  }
  if (c.beam) {
    const auto& b = *c.beam;
    e << YAML::Key << "beam" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "payload_length" << YAML::Value << b.payload_length;
    e << YAML::Key << "keepout_half_width" << YAML::Value << b.keepout_half_width;
    e << YAML::Key << "obstacle_radius" << YAML::Value << b.obstacle_radius;
    e << YAML::Key << "obstacles" << YAML::Value << YAML::BeginSeq;
    for (const auto& o : b.obstacles) emit_vec(e, o);
    e << YAML::EndSeq;
    e << YAML::EndMap;
  }
  e << YAML::EndMap;

  e << YAML::Key << "boundary" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "initial_positions" << YAML::Value << YAML::BeginSeq;
  for (const auto& r : c.boundary.initial_positions) emit_vec(e, r);
  e << YAML::EndSeq;
  e << YAML::Key << "final_positions" << YAML::Value << YAML::BeginSeq;
  for (const auto& r : c.boundary.final_positions) emit_vec(e, r);
  e << YAML::EndSeq;
  if (c.boundary.v_max) e << YAML::Key << "v_max" << YAML::Value << *c.boundary.v_max;
  e << YAML::EndMap;

  const auto& v = c.solver;
  e << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "nodes" << YAML::Value << v.nodes;
  e << YAML::Key << "t_f" << YAML::Value << v.t_f;
  if (v.trust_weight.size() > 0) {
    e << YAML::Key << "trust_weight" << YAML::Value;
    emit_vec(e, v.trust_weight);
  }
  if (v.virtual_weight.size() > 0) {
    e << YAML::Key << "virtual_weight" << YAML::Value;
    emit_vec(e, v.virtual_weight);
  }
  e << YAML::Key << "buffer_weight" << YAML::Value << v.buffer_weight;
  e << YAML::Key << "eps_tr" << YAML::Value << v.eps_tr;
  e << YAML::Key << "eps_vc" << YAML::Value << v.eps_vc;
  e << YAML::Key << "max_iters" << YAML::Value << v.max_iters;
  e << YAML::Key << "tf_growth" << YAML::Value << v.tf_growth;
  e << YAML::Key << "max_tf_retries" << YAML::Value << v.max_tf_retries;
  e << YAML::Key << "solver_tol" << YAML::Value << v.solver_tol;
  e << YAML::Key << "stc_form" << YAML::Value
    << (v.stc_form == StcSubproblemForm::ConvexFactor ? "convex_factor" : "linearized");
  e << YAML::Key << "beam_frame" << YAML::Value
    << (v.beam_frame == FrameLinearization::Full ? "full" : "frozen");
  e << YAML::EndMap;

  if (c.campaign) {
    const auto& k = *c.campaign;
    e << YAML::Key << "campaign" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "k_list" << YAML::Value << YAML::Flow << k.k_list;
    e << YAML::Key << "cases_per_k" << YAML::Value << k.cases_per_k;
    e << YAML::Key << "seed" << YAML::Value << k.seed;
    e << YAML::Key << "dense_samples" << YAML::Value << k.dense_samples;
    e << YAML::Key << "max_replacements" << YAML::Value << k.max_replacements;
    e << YAML::Key << "hoop_center_min" << YAML::Value;
    emit_vec(e, k.hoop_ranges.center_min);
    e << YAML::Key << "hoop_center_max" << YAML::Value;
    emit_vec(e, k.hoop_ranges.center_max);
    e << YAML::Key << "hoop_tilt_deg" << YAML::Value << k.hoop_ranges.tilt_deg;
    e << YAML::Key << "hoop_heading_deg" << YAML::Value << k.hoop_ranges.heading_deg;
    e << YAML::Key << "formation_center_min" << YAML::Value;
    emit_vec(e, k.beam_ranges.center_min);
    e << YAML::Key << "formation_center_max" << YAML::Value;
    emit_vec(e, k.beam_ranges.center_max);
    e << YAML::Key << "formation_angle_deg" << YAML::Value << k.beam_ranges.angle_deg;
    e << YAML::Key << "obstacle_count" << YAML::Value << k.beam_ranges.obstacle_count;
    e << YAML::Key << "obstacle_min" << YAML::Value;
    emit_vec(e, k.beam_ranges.obstacle_min);
    e << YAML::Key << "obstacle_max" << YAML::Value;
    emit_vec(e, k.beam_ranges.obstacle_max);
    e << YAML::Key << "rejection_budget" << YAML::Value << k.beam_ranges.rejection_budget;
    e << YAML::EndMap;
  }
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

bool operator==(const Config& a, const Config& b) {
  return serialize_config(a) == serialize_config(b);
}

QuadModel make_model(const Config& c) {
  QuadModel m;
  m.mass = c.model.mass;
  m.drag = c.model.drag;
  m.gravity = c.model.gravity;
  m.spatial_dim = c.scenario == ScenarioKind::Hoop ? 3 : 2;
  return m;
}

ControlSetParams make_control(const Config& c) {
  ControlSetParams p;
  p.thrust_min = c.control.thrust_min;
  p.thrust_max = c.control.thrust_max;
  p.tilt_max = c.control.tilt_max_deg * std::numbers::pi / 180.0;
  p.altitude_hold = c.scenario == ScenarioKind::Beam;
  return p;
}

NonconvexProblem build_problem(const Config& c, std::optional<int> nodes, std::optional<double> t_f) {
  BoundaryConditions bc = c.boundary;
  bc.t_f = t_f.value_or(c.solver.t_f);
  std::optional<HoopSpec> hoop;
  if (c.hoop) hoop = c.hoop->to_spec();
  NonconvexProblem p = assemble_problem(c.scenario, hoop, c.beam, bc, make_model(c), make_control(c),
                                        nodes.value_or(c.solver.nodes));
  p.beam_frame = c.solver.beam_frame;
  return p;
}

ScvxConfig build_scvx_config(const Config& c, const NonconvexProblem& problem) {
  ScvxConfig cfg = default_config(problem);
  const auto& v = c.solver;
  if (v.trust_weight.size() > 0) cfg.trust_weight = v.trust_weight.asDiagonal();
  if (v.virtual_weight.size() > 0) cfg.virtual_weight = v.virtual_weight;
  cfg.buffer_weight = v.buffer_weight;
  cfg.eps_tr = v.eps_tr;
  cfg.eps_vc = v.eps_vc;
  cfg.max_iters = v.max_iters;
  cfg.tf_growth = v.tf_growth;
  cfg.max_tf_retries = v.max_tf_retries;
  cfg.solver_tol = v.solver_tol;
  cfg.stc_form = v.stc_form;
  cfg.validate(problem);
  return cfg;
}

CampaignSpec build_campaign(const Config& c) {
  if (!c.campaign) throw ConfigError("config has no 'campaign' section", 0);
  const auto& k = *c.campaign;
  CampaignSpec s;
  s.scenario = c.scenario;
  s.k_list = k.k_list;
  s.cases_per_k = k.cases_per_k;
  s.seed = k.seed;
  s.dense_samples = k.dense_samples;
  s.max_replacements = k.max_replacements;
  s.hoop_ranges = k.hoop_ranges;
  s.beam_ranges = k.beam_ranges;
  s.model = make_model(c);
  s.control = make_control(c);
  if (c.hoop) s.hoop = c.hoop->to_spec();
  if (c.beam) s.beam = *c.beam;
  s.boundary = c.boundary;
  s.boundary.t_f = c.solver.t_f;
  // Validate the fixed parts once through a template problem.
  const NonconvexProblem tmpl = build_problem(c, k.k_list.front());
  s.scvx = build_scvx_config(c, tmpl);
  if (c.solver.trust_weight.size() == 0) s.scvx.trust_weight.resize(0, 0);
  if (c.solver.virtual_weight.size() == 0) s.scvx.virtual_weight.resize(0);
  s.validate();
  return s;
}

}  // namespace quadstc
