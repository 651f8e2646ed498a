#include "quadstc/trajectory_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace quadstc {

namespace {

constexpr const char* kMagic = "quadstc-trajectory";
constexpr int kVersion = 1;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> node_columns(const TrajectoryFile& f) {
  std::vector<std::string> cols{"t"};
  const int d = f.spatial_dim;
  for (int v = 1; v <= f.vehicles; ++v) {
    for (int i = 0; i < d; ++i) cols.push_back("r" + std::to_string(v) + "_" + std::to_string(i));
    for (int i = 0; i < d; ++i) cols.push_back("v" + std::to_string(v) + "_" + std::to_string(i));
    for (int i = 0; i < d; ++i) cols.push_back("u" + std::to_string(v) + "_" + std::to_string(i));
    cols.push_back("gamma" + std::to_string(v));
  }
  for (Eigen::Index i = 0; i < f.trajectory.slacks.rows(); ++i) cols.push_back("alpha" + std::to_string(i));
  return cols;
}

std::vector<std::string> dense_columns(const TrajectoryFile& f) {
  std::vector<std::string> cols{"t"};
  for (int v = 1; v <= f.vehicles; ++v) {
    for (int i = 0; i < f.spatial_dim; ++i) cols.push_back("r" + std::to_string(v) + "_" + std::to_string(i));
    for (int i = 0; i < f.spatial_dim; ++i) cols.push_back("v" + std::to_string(v) + "_" + std::to_string(i));
  }
  return cols;
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  }

  std::string expect() {
    std::string l;
    if (!next(l)) fail("unexpected end of file");
    return l;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError("trajectory file line " + std::to_string(line_) + ": " + what);
  }

  std::string value(const std::string& key) {
    const std::string l = expect();
    if (l.compare(0, key.size() + 1, key + " ") != 0) fail("expected '" + key + "'");
    return l.substr(key.size() + 1);
  }

  template <class T>
  T number(const std::string& key) {
    std::istringstream ss(value(key));
    T v{};
    if (!(ss >> v)) fail("bad value for '" + key + "'");
    return v;
  }

  std::vector<double> row(std::size_t n) {
    std::istringstream ss(expect());
    std::vector<double> out(n);
    for (auto& v : out) {
      std::string tok;
      if (!(ss >> tok)) fail("expected " + std::to_string(n) + " columns");
      try {
        v = std::stod(tok);
      } catch (const std::exception&) {
        fail("bad number '" + tok + "'");
      }
    }
    std::string extra;
    if (ss >> extra) fail("expected " + std::to_string(n) + " columns");
    return out;
  }

  void header(const std::vector<std::string>& cols) {
    std::istringstream ss(expect());
    for (const auto& c : cols) {
      std::string tok;
      if (!(ss >> tok) || tok != c) fail("column header mismatch at '" + c + "'");
    }
    std::string extra;
    if (ss >> extra) fail("unexpected column '" + extra + "'");
  }

 private:
  std::istream& in_;
  int line_ = 0;
};

}  // namespace

TrajectoryFile make_trajectory_file(const NonconvexProblem& problem, const ScvxResult& result,
                                    int dense_samples) {
  TrajectoryFile f;
  f.scenario = problem.kind;
  f.vehicles = problem.vehicles();
  f.spatial_dim = problem.model.spatial_dim;
  const auto& rep = result.report;
  f.converged = rep.converged;
  f.iterations = rep.iterations;
  f.tf_retries = rep.tf_retries;
  f.fuel = rep.fuel;
  f.final_j_vc = rep.final_j_vc;
  f.message = rep.message;
  f.trajectory = result.trajectory;
  if (dense_samples > 0) {
    if (dense_samples < 2) throw ValidationError("dense track needs at least 2 samples per interval");
    const Trajectory& t = result.trajectory;
    const int nx = problem.model.state_dim();
    const int nu = problem.model.control_dim();
    f.dense_samples = dense_samples;
    f.dense.resize(static_cast<Eigen::Index>(t.nodes() - 1) * dense_samples, 1 + problem.state_dim());
    for (int k = 0; k + 1 < t.nodes(); ++k) {
      for (int v = 0; v < f.vehicles; ++v) {
        const Eigen::MatrixXd x = propagate_dense(
            problem.model, t.states.col(k).segment(v * nx, nx), t.controls.col(k).segment(v * nu, nu),
            t.controls.col(k + 1).segment(v * nu, nu), t.dt(), dense_samples);
        for (int j = 0; j < dense_samples; ++j) {
          const Eigen::Index row = static_cast<Eigen::Index>(k) * dense_samples + j;
          f.dense(row, 0) = t.node_time(k) + j * t.dt() / (dense_samples - 1);
          f.dense.row(row).segment(1 + v * nx, nx) = x.col(j).transpose();
        }
      }
    }
  }
  return f;
}

void write_trajectory(std::ostream& out, const TrajectoryFile& f) {
  const Trajectory& t = f.trajectory;
  const int d = f.spatial_dim;
  out << kMagic << ' ' << kVersion << '\n';
  out << "scenario " << (f.scenario == ScenarioKind::Hoop ? "hoop" : "beam") << '\n';
  out << "vehicles " << f.vehicles << '\n';
  out << "spatial_dim " << d << '\n';
  out << "nodes " << t.nodes() << '\n';
  out << "slacks " << t.slacks.rows() << '\n';
  out << "t_f " << num(t.t_f) << '\n';
  out << "converged " << (f.converged ? 1 : 0) << '\n';
  out << "iterations " << f.iterations << '\n';
  out << "tf_retries " << f.tf_retries << '\n';
  out << "fuel " << num(f.fuel) << '\n';
  out << "final_j_vc " << num(f.final_j_vc) << '\n';
  out << "message " << f.message << '\n';
  out << "dense_samples " << f.dense_samples << '\n';

  out << "[nodes]\n";
  const auto cols = node_columns(f);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? " " : "") << cols[i];
  out << '\n';
  for (int k = 0; k < t.nodes(); ++k) {
    out << num(t.node_time(k));
    for (int v = 0; v < f.vehicles; ++v) {
      for (int i = 0; i < 2 * d; ++i) out << ' ' << num(t.states(v * 2 * d + i, k));
      for (int i = 0; i < d; ++i) out << ' ' << num(t.controls(v * d + i, k));
      out << ' ' << num(t.thrust_bounds(v, k));
    }
    for (Eigen::Index i = 0; i < t.slacks.rows(); ++i) out << ' ' << num(t.slacks(i, k));
    out << '\n';
  }
  if (f.dense_samples > 0) {
    out << "[dense]\n";
    const auto dc = dense_columns(f);
    for (std::size_t i = 0; i < dc.size(); ++i) out << (i ? " " : "") << dc[i];
    out << '\n';
    for (Eigen::Index r = 0; r < f.dense.rows(); ++r) {
      for (Eigen::Index c = 0; c < f.dense.cols(); ++c) out << (c ? " " : "") << num(f.dense(r, c));
      out << '\n';
    }
  }
}

TrajectoryFile read_trajectory(std::istream& in) {
  LineReader rd(in);
  TrajectoryFile f;
  {
    std::istringstream ss(rd.expect());
    std::string magic;
    int version = 0;
    if (!(ss >> magic >> version) || magic != kMagic) rd.fail("not a trajectory file");
    if (version != kVersion) rd.fail("unsupported version " + std::to_string(version));
  }
  const std::string scen = rd.value("scenario");
  if (scen == "hoop") {
    f.scenario = ScenarioKind::Hoop;
  } else if (scen == "beam") {
    f.scenario = ScenarioKind::Beam;
  } else {
    rd.fail("unknown scenario '" + scen + "'");
  }
  f.vehicles = rd.number<int>("vehicles");
  f.spatial_dim = rd.number<int>("spatial_dim");
  const int nodes = rd.number<int>("nodes");
  const int nslack = rd.number<int>("slacks");
  if (f.vehicles < 1 || f.spatial_dim < 1 || nodes < 2 || nslack < 0) rd.fail("bad dimensions");
  Trajectory& t = f.trajectory;
  t.t_f = rd.number<double>("t_f");
  if (!(t.t_f > 0.0)) rd.fail("t_f must be positive");
  f.converged = rd.number<int>("converged") != 0;
  f.iterations = rd.number<int>("iterations");
  f.tf_retries = rd.number<int>("tf_retries");
  f.fuel = rd.number<double>("fuel");
  f.final_j_vc = rd.number<double>("final_j_vc");
  {
    const std::string l = rd.expect();
    if (l.rfind("message", 0) != 0) rd.fail("expected 'message'");
    f.message = l.size() > 8 ? l.substr(8) : "";
  }
  f.dense_samples = rd.number<int>("dense_samples");
  if (f.dense_samples < 0 || f.dense_samples == 1) rd.fail("bad dense_samples");

  const int d = f.spatial_dim;
  const int nv = f.vehicles;
  t.states.resize(2 * d * nv, nodes);
  t.controls.resize(d * nv, nodes);
  t.thrust_bounds.resize(nv, nodes);
  t.slacks.resize(nslack, nodes);
  t.virtual_controls = Eigen::MatrixXd::Zero(2 * d * nv, nodes - 1);

  if (rd.expect() != "[nodes]") rd.fail("expected [nodes]");
  rd.header(node_columns(f));
  double t_prev = -1.0;
  for (int k = 0; k < nodes; ++k) {
    const auto row = rd.row(node_columns(f).size());
    if (!(row[0] > t_prev)) rd.fail("node times must increase");
    t_prev = row[0];
    std::size_t c = 1;
    for (int v = 0; v < nv; ++v) {
      for (int i = 0; i < 2 * d; ++i) t.states(v * 2 * d + i, k) = row[c++];
      for (int i = 0; i < d; ++i) t.controls(v * d + i, k) = row[c++];
      t.thrust_bounds(v, k) = row[c++];
    }
    for (int i = 0; i < nslack; ++i) t.slacks(i, k) = row[c++];
  }
  if (f.dense_samples > 0) {
    if (rd.expect() != "[dense]") rd.fail("expected [dense]");
    const auto dc = dense_columns(f);
    rd.header(dc);
    f.dense.resize(static_cast<Eigen::Index>(nodes - 1) * f.dense_samples,
                   static_cast<Eigen::Index>(dc.size()));
    for (Eigen::Index r = 0; r < f.dense.rows(); ++r) {
      const auto row = rd.row(dc.size());
      for (std::size_t c = 0; c < dc.size(); ++c) f.dense(r, static_cast<Eigen::Index>(c)) = row[c];
    }
  }
  std::string extra;
  if (rd.next(extra)) rd.fail("trailing content");
  return f;
}

void save_trajectory(const std::string& path, const TrajectoryFile& file) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write trajectory file '" + path + "'");
  write_trajectory(out, file);
  if (!out) throw ValidationError("write failed for '" + path + "'");
}

TrajectoryFile load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read trajectory file '" + path + "'");
  return read_trajectory(in);
}

}  // namespace quadstc
