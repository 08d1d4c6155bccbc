#include "plastigraph/fem/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "plastigraph/error.hpp"

namespace plastigraph::fem {

std::string to_string(Family f) { return f == Family::PureAxial ? "pure-axial" : "axial-shear"; }

Family family_from_string(const std::string& s) {
  if (s == "pure-axial") return Family::PureAxial;
  if (s == "axial-shear") return Family::AxialShear;
  throw DataError("unknown loading family '" + s + "'");
}

Mat2 LoadingProgram::unit_gradient(double side) const {
  const double a = u_goal / side;
  const double t = theta_deg * std::numbers::pi / 180.0;
  Mat2 h = Mat2::Zero();
  if (family == Family::PureAxial) {
    h(0, 0) = a * std::cos(t);
    h(1, 1) = a * std::sin(t);
  } else {
    h(0, 0) = a * std::cos(t);
    h(0, 1) = a * std::sin(t);
  }
  return h;
}

Mat2 LoadingProgram::gradient(int step, double side) const {
  if (step < 0 || step > steps()) throw DataError("LoadingProgram: step out of range");
  return step == 0 ? Mat2::Zero() : Mat2(amplitude[step - 1] * unit_gradient(side));
}

Vec3 LoadingProgram::strain(int step, double side) const {
  const Mat2 h = gradient(step, side);
  return Vec3(h(0, 0), h(1, 1), 0.5 * (h(0, 1) + h(1, 0)));
}

LoadingProgram monotonic_program(int id, Family family, double theta_deg, double u_goal, int steps,
                                 std::string tag) {
  if (steps < 1) throw ConfigError("loading program needs at least one step");
  LoadingProgram p;
  p.id = id;
  p.family = family;
  p.theta_deg = theta_deg;
  p.u_goal = u_goal;
  p.tag = std::move(tag);
  for (int k = 1; k <= steps; ++k) p.amplitude.push_back(static_cast<double>(k) / steps);
  return p;
}

LoadingProgram cyclic_program(int id, Family family, double theta_deg, double u_goal, int steps,
                              const std::vector<double>& at, int length, std::string tag) {
  if (steps < 1 || length < 1) throw ConfigError("cyclic program needs steps, length >= 1");
  LoadingProgram p = monotonic_program(id, family, theta_deg, u_goal, steps, std::move(tag));
  std::vector<int> turn;
  for (double f : at) {
    const int k = static_cast<int>(std::lround(f * steps));
    if (k <= length || k > steps) throw ConfigError("cyclic program: excursion outside the ramp");
    turn.push_back(k);
  }
  p.amplitude.clear();
  std::size_t next = 0;
  for (int k = 1; k <= steps; ++k) {
    p.amplitude.push_back(static_cast<double>(k) / steps);
    if (next < turn.size() && turn[next] == k) {
      const int first = static_cast<int>(p.amplitude.size()) + 1;
      for (int i = 1; i <= length; ++i) p.amplitude.push_back(static_cast<double>(k - i) / steps);
      for (int i = length - 1; i >= 0; --i) {
        p.amplitude.push_back(static_cast<double>(k - i) / steps);
      }
      p.excursions.emplace_back(first, static_cast<int>(p.amplitude.size()));
      ++next;
    }
  }
  return p;
}

namespace {

std::vector<double> grid(int n) {
  std::vector<double> t;
  for (int i = 0; i < n; ++i) t.push_back(n == 1 ? 45.0 : 90.0 * i / (n - 1));
  return t;
}

}  // namespace

std::vector<LoadingProgram> training_programs(const LoadingPlan& plan) {
  if (plan.paths < 1 || plan.steps < 1) throw ConfigError("loading plan: paths, steps >= 1");
  const int n_axial = (plan.paths + 1) / 2;
  const int n_shear = plan.paths - n_axial;
  std::vector<LoadingProgram> out;
  for (double t : grid(n_axial)) {
    out.push_back(monotonic_program(static_cast<int>(out.size()), Family::PureAxial, t,
                                    plan.u_goal, plan.steps, "train"));
  }
  for (double t : grid(n_shear)) {
    out.push_back(monotonic_program(static_cast<int>(out.size()), Family::AxialShear, t,
                                    plan.u_goal, plan.steps, "train"));
  }
  return out;
}

std::vector<LoadingProgram> blind_programs(const LoadingPlan& plan) {
  const int n = std::max((plan.paths + 1) / 2, 2);
  auto midpoint = [&](int j, int count, int shift) {
    const int intervals = n - 1;
    int i = static_cast<int>(std::floor((j + 0.5) * intervals / std::max(count, 1))) + shift;
    i = std::clamp(i, 0, intervals - 1);
    return 90.0 * (i + 0.5) / intervals;
  };
  std::vector<LoadingProgram> out;
  int id = 1000;
  for (int j = 0; j < plan.blind_monotonic; ++j) {
    const Family f = j % 2 == 0 ? Family::PureAxial : Family::AxialShear;
    out.push_back(monotonic_program(id++, f, midpoint(j, plan.blind_monotonic, 0), plan.u_goal,
                                    plan.steps, "blind-monotonic"));
  }
  for (int j = 0; j < plan.blind_cyclic; ++j) {
    const Family f = j % 2 == 0 ? Family::AxialShear : Family::PureAxial;
    out.push_back(cyclic_program(id++, f, midpoint(j, plan.blind_cyclic, 1), plan.u_goal,
                                 plan.steps, plan.excursion_at, plan.excursion_length,
                                 "blind-cyclic"));
  }
  return out;
}

PathRecord run_loading_path(const mesh::TriMesh& mesh, const MaterialParams& mat,
                            const LoadingProgram& program, const SolverOptions& opts) {
  FemModel model(mesh, mat, opts);
  PathRecord rec;
  rec.program = program;
  const int n = mesh.num_elements();
  Vec3 prev_ep = Vec3::Zero();
  double xi = 0.0;
  for (int k = 1; k <= program.steps(); ++k) {
    std::vector<double> xi_before(n);
    for (int e = 0; e < n; ++e) xi_before[e] = model.states()[e].xi;
    try {
      model.advance(program.gradient(k, mesh.side));
    } catch (const Error& err) {
      throw ConvergenceError("path " + std::to_string(program.id) + " step " + std::to_string(k) +
                             ": " + err.what());
    }
    const Homogenized h = model.homogenize();
    StepRecord s;
    s.step = k;
    s.eps = h.eps;
    s.eps_p = h.eps_p;
    s.sigma = h.sigma;
    s.sigma33 = h.sigma33;
    s.p = h.p;
    s.q = h.q;
    s.psi = h.psi;
    xi += equivalent_strain(h.eps_p - prev_ep);
    prev_ep = h.eps_p;
    s.xi = xi;
    num::Matrix plastic(n, 3);
    num::Matrix elem(n, 5);
    for (int e = 0; e < n; ++e) {
      const PointState& st = model.states()[e];
      plastic.row(e) = st.eps_p.transpose();
      elem.row(e) << st.sigma(0), st.sigma(1), st.sigma(2), st.sigma33, st.xi;
      if (st.xi > xi_before[e]) s.plastic = true;
    }
    rec.steps.push_back(s);
    rec.plastic.push_back(std::move(plastic));
    rec.elem.push_back(std::move(elem));
  }
  return rec;
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

void put(std::string& out, double v) {
  out += ' ';
  out += format_double(v);
}

double parse_double(std::istream& in, const std::string& where) {
  std::string tok;
  if (!(in >> tok)) throw DataError(where + ": truncated record");
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw DataError(where + ": bad number '" + tok + "'");
  }
  return v;
}

std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
  std::filesystem::path p = stem;
  p += ext;
  return p;
}

}  // namespace

void write_path(const std::filesystem::path& stem, const PathRecord& rec) {
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  const LoadingProgram& pr = rec.program;
  std::string out;
  out += "# HOM step e11 e22 e12 ep11 ep22 ep12 s11 s22 s12 s33 p q xi psi plastic\n";
  out += "# NODE element ep11 ep22 ep12 (tensor shear components)\n";
  out += "PATH " + std::to_string(pr.id) + ' ' + to_string(pr.family);
  put(out, pr.theta_deg);
  put(out, pr.u_goal);
  out += ' ' + std::to_string(pr.steps()) + ' ' + pr.tag + '\n';
  out += "AMP";
  for (double a : pr.amplitude) put(out, a);
  out += "\nEXC";
  for (auto [a, b] : pr.excursions) out += ' ' + std::to_string(a) + ' ' + std::to_string(b);
  out += '\n';
  for (int k = 0; k < rec.num_steps(); ++k) {
    const StepRecord& s = rec.steps[k];
    out += "HOM " + std::to_string(s.step);
    for (int i = 0; i < 3; ++i) put(out, s.eps(i));
    for (int i = 0; i < 3; ++i) put(out, s.eps_p(i));
    for (int i = 0; i < 3; ++i) put(out, s.sigma(i));
    for (double v : {s.sigma33, s.p, s.q, s.xi, s.psi}) put(out, v);
    out += s.plastic ? " 1\n" : " 0\n";
    const num::Matrix& pl = rec.plastic[k];
    for (Eigen::Index e = 0; e < pl.rows(); ++e) {
      out += "NODE " + std::to_string(e);
      for (int i = 0; i < 3; ++i) put(out, pl(e, i));
      out += '\n';
    }
  }
  std::ofstream f(with_ext(stem, ".txt"), std::ios::binary);
  if (!f) throw ArtifactError("cannot write " + stem.string() + ".txt");
  f << out;
  if (rec.has_state()) {
    std::string st = "# ELEM step element s11 s22 s12 s33 xi_local\n";
    for (int k = 0; k < rec.num_steps(); ++k) {
      const num::Matrix& el = rec.elem[k];
      for (Eigen::Index e = 0; e < el.rows(); ++e) {
        st += "ELEM " + std::to_string(k + 1) + ' ' + std::to_string(e);
        for (int i = 0; i < 5; ++i) put(st, el(e, i));
        st += '\n';
      }
    }
    std::ofstream g(with_ext(stem, ".state"), std::ios::binary);
    if (!g) throw ArtifactError("cannot write " + stem.string() + ".state");
    g << st;
  }
}

PathRecord read_path(const std::filesystem::path& stem, bool with_state) {
  const auto file = with_ext(stem, ".txt");
  std::ifstream in(file);
  if (!in) throw ArtifactError("cannot read dataset file " + file.string());
  const std::string where = file.string();
  PathRecord rec;
  std::string line;
  int declared_steps = -1;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "PATH") {
      std::string fam;
      ls >> rec.program.id >> fam;
      rec.program.family = family_from_string(fam);
      rec.program.theta_deg = parse_double(ls, where);
      rec.program.u_goal = parse_double(ls, where);
      ls >> declared_steps >> rec.program.tag;
    } else if (tag == "AMP") {
      for (int k = 0; k < declared_steps; ++k) rec.program.amplitude.push_back(parse_double(ls, where));
    } else if (tag == "EXC") {
      int a, b;
      while (ls >> a >> b) rec.program.excursions.emplace_back(a, b);
    } else if (tag == "HOM") {
      StepRecord s;
      ls >> s.step;
      for (int i = 0; i < 3; ++i) s.eps(i) = parse_double(ls, where);
      for (int i = 0; i < 3; ++i) s.eps_p(i) = parse_double(ls, where);
      for (int i = 0; i < 3; ++i) s.sigma(i) = parse_double(ls, where);
      s.sigma33 = parse_double(ls, where);
      s.p = parse_double(ls, where);
      s.q = parse_double(ls, where);
      s.xi = parse_double(ls, where);
      s.psi = parse_double(ls, where);
      int flag = 0;
      ls >> flag;
      s.plastic = flag != 0;
      rec.steps.push_back(s);
      rec.plastic.emplace_back();
    } else if (tag == "NODE") {
      if (rec.steps.empty()) throw DataError(where + ": NODE before HOM");
      int id;
      ls >> id;
      num::Matrix& m = rec.plastic.back();
      if (id != m.rows()) throw DataError(where + ": NODE ids must be consecutive");
      m.conservativeResize(id + 1, 3);
      for (int i = 0; i < 3; ++i) m(id, i) = parse_double(ls, where);
    } else {
      throw DataError(where + ": unknown record '" + tag + "'");
    }
  }
  if (declared_steps != rec.num_steps() || rec.program.steps() != declared_steps) {
    throw DataError(where + ": step count does not match PATH header");
  }
  if (with_state) {
    const auto sfile = with_ext(stem, ".state");
    std::ifstream sin(sfile);
    if (!sin) throw ArtifactError("cannot read state file " + sfile.string());
    const Eigen::Index n = rec.plastic.empty() ? 0 : rec.plastic[0].rows();
    rec.elem.assign(rec.num_steps(), num::Matrix::Zero(n, 5));
    while (std::getline(sin, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      std::string tag;
      int step, id;
      ls >> tag >> step >> id;
      if (tag != "ELEM" || step < 1 || step > rec.num_steps() || id < 0 || id >= n) {
        throw DataError(sfile.string() + ": malformed ELEM record");
      }
      for (int i = 0; i < 5; ++i) rec.elem[step - 1](id, i) = parse_double(ls, sfile.string());
    }
  }
  return rec;
}

}  // namespace plastigraph::fem
