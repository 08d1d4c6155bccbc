#include "plastigraph/returnmap/return_map.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "plastigraph/error.hpp"
#include "plastigraph/fem/dataset.hpp"
#include "plastigraph/nets/hyperelastic.hpp"
#include "plastigraph/returnmap/spectral.hpp"

namespace plastigraph::rm {

namespace {

const double kSqrt23 = std::sqrt(2.0 / 3.0);

double tensor_norm(const Vec3& v) { return std::sqrt(v(0) * v(0) + v(1) * v(1) + 2.0 * v(2) * v(2)); }

// dq for a stress change; s = deviator.
double dq_of(const Vec3& sigma, double s33, double q, const Vec3& ds, double ds33) {
  if (q <= 0.0) return 0.0;
  const double p = (sigma(0) + sigma(1) + s33) / 3.0;
  const double a = sigma(0) - p, b = sigma(1) - p, c = s33 - p;
  return 1.5 / q * (a * ds(0) + b * ds(1) + c * ds33 + 2.0 * sigma(2) * ds(2));
}

}  // namespace

ReturnMap::ReturnMap(ModelSet models, ReturnMapOptions opts) : models_(std::move(models)), opts_(opts) {
  if (!models_.elastic || !models_.yield || !models_.kinetic || !models_.flow) {
    throw ConfigError("return map needs all four constitutive models");
  }
  if (!(opts_.sigma_y0 > 0.0) || !(opts_.tolerance > 0.0) || opts_.max_newton < 1 || opts_.max_passes < 1) {
    throw ConfigError("return map: bad options");
  }
}

double ReturnMap::tol_f() const { return opts_.tolerance * opts_.sigma_y0 * models_.yield->per_stress(); }

void ReturnMap::stress(const Vec3& eps_e, double eps_e33, Vec3& sigma, double& sigma33) const {
  const double nu = models_.elastic->nu();
  const Vec3 g = models_.elastic->gradient(nets::shifted_strain(eps_e, eps_e33, nu));
  sigma = Vec3(g(0), g(1), 0.5 * g(2));
  sigma33 = nu * (sigma(0) + sigma(1)) + models_.elastic->youngs() * eps_e33;
}

MacroState ReturnMap::initial_state() const {
  MacroState s;
  const int len = models_.kinetic->history_length();
  s.history = Matrix::Zero(len, 3);
  s.zeta = models_.kinetic->zeta(s.history);
  s.dzeta = Matrix::Zero(1, s.zeta.cols());
  stress(s.eps_e, s.eps_e33(), s.sigma, s.sigma33);
  return s;
}

Trial ReturnMap::trial(const MacroState& state, const Vec3& d_eps) const {
  Trial t;
  t.eps_e = state.eps_e + d_eps;
  stress(t.eps_e, state.eps_e33(), t.sigma, t.sigma33);
  t.p = fem::mean_stress(t.sigma, t.sigma33);
  t.q = fem::von_mises(t.sigma, t.sigma33);
  t.f = models_.yield->value(t.p, t.q, state.xi);
  return t;
}

Eigen::Vector3d ReturnMap::associative_direction(const MacroState& state, const Trial& tr) const {
  const Eigen::Vector3d df = models_.yield->gradient(tr.p, tr.q, state.xi);
  // df/dsigma = df/dp I/3 + df/dq 3/(2q) dev(sigma), projected on the trial frame.
  const Spectral2 frame = spectral_decompose(tr.eps_e);
  const double k = tr.q > 0.0 ? 1.5 * df(1) / tr.q : 0.0;
  const Vec3 dev(tr.sigma(0) - tr.p, tr.sigma(1) - tr.p, tr.sigma(2));
  const Eigen::Vector2d a = frame.project(Vec3(df(0) / 3.0 + k * dev(0), df(0) / 3.0 + k * dev(1), k * dev(2)));
  // Keep the isochoric part only.
  const double mean = (a(0) + a(1) + df(0) / 3.0 + k * (tr.sigma33 - tr.p)) / 3.0;
  Eigen::Vector3d g(a(0) - mean, a(1) - mean, 0.0);
  g(2) = -(g(0) + g(1));
  const double n = g.norm();
  if (!(n > 0.0)) return Eigen::Vector3d(1.0, -1.0, 0.0) / std::sqrt(2.0);
  return g / n;
}

ReturnMap::Solve ReturnMap::solve(const MacroState& state, const Trial& tr, const Vec3& d_eps,
                                  const Eigen::Vector3d& g) const {
  const Spectral2 frame = spectral_decompose(tr.eps_e);
  const Vec3 dir_in = frame.compose(g.head<2>());
  const double nu = models_.elastic->nu(), youngs = models_.elastic->youngs();
  const double e33_tr = state.eps_e33();
  const double gnorm = g.norm();
  const double tol = tol_f();

  Solve s;
  auto evaluate = [&](double dl, bool derivative, double& r, double& dr) {
    s.dlambda = dl;
    s.eps_e = tr.eps_e - dl * dir_in;
    s.eps_e33 = e33_tr - dl * g(2);
    const Vec3 et = nets::shifted_strain(s.eps_e, s.eps_e33, nu);
    const Vec3 grad = models_.elastic->gradient(et);
    s.sigma = Vec3(grad(0), grad(1), 0.5 * grad(2));
    s.sigma33 = nu * (s.sigma(0) + s.sigma(1)) + youngs * s.eps_e33;
    s.p = fem::mean_stress(s.sigma, s.sigma33);
    s.q = fem::von_mises(s.sigma, s.sigma33);
    const double xi = state.xi + kSqrt23 * dl * gnorm;
    r = models_.yield->value(s.p, s.q, xi);
    s.f = r;
    if (!derivative) return;
    const Vec3 det = -dir_in - nu * g(2) * Vec3(1.0, 1.0, 0.0);
    const Vec3 dgrad = models_.elastic->hessian(et) * det;
    const Vec3 ds(dgrad(0), dgrad(1), 0.5 * dgrad(2));
    const double ds33 = nu * (ds(0) + ds(1)) - youngs * g(2);
    const double dp = (ds(0) + ds(1) + ds33) / 3.0;
    const double dq = dq_of(s.sigma, s.sigma33, s.q, ds, ds33);
    const Eigen::Vector3d df = models_.yield->gradient(s.p, s.q, xi);
    dr = df(0) * dp + df(1) * dq + df(2) * kSqrt23 * gnorm;
  };

  double r = tr.f, dr = 0.0, dl = 0.0;
  bool newton_ok = false;
  evaluate(0.0, true, r, dr);
  for (int it = 0; it < opts_.max_newton; ++it) {
    if (!(dr < 0.0) || !std::isfinite(dr)) break;
    const double next = dl - r / dr;
    if (!(next >= 0.0) || !std::isfinite(next)) break;
    dl = next;
    ++s.iterations;
    evaluate(dl, true, r, dr);
    if (std::abs(r) <= tol) {
      newton_ok = true;
      break;
    }
  }
  if (!newton_ok) {
    double lo = 0.0, hi = 2.0 * tensor_norm(d_eps);
    double r_hi = 0.0, unused = 0.0;
    evaluate(hi, false, r_hi, unused);
    if (!(r_hi < 0.0)) {
      std::ostringstream msg;
      msg << "return map: no bracket for the plastic multiplier at step " << state.step + 1
          << " (f_trial=" << tr.f << ", f(dlambda_max=" << hi << ")=" << r_hi << ", p=" << tr.p
          << ", q=" << tr.q << ", xi=" << state.xi << ")";
      throw ConvergenceError(msg.str());
    }
    s.bisection = true;
    for (int it = 0; it < 200 && std::abs(r) > tol; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (!(mid > lo && mid < hi)) break;
      evaluate(mid, false, r, unused);
      ++s.iterations;
      if (std::abs(r) > tol) (r > 0.0 ? lo : hi) = mid;
    }
    if (std::abs(r) > tol) {
      // The bracket closed on a jump of the learned stress (a kink of the
      // piecewise-linear energy). Take the point of the segment between the
      // one-sided stresses that lies on the yield surface.
      Solve a, b;
      evaluate(lo, false, r, unused);
      a = s;
      evaluate(hi, false, r, unused);
      b = s;
      const double xi = state.xi + kSqrt23 * hi * gnorm;
      double t_lo = 0.0, t_hi = 1.0;
      for (int it = 0; it < 200 && std::abs(r) > tol; ++it) {
        const double t = 0.5 * (t_lo + t_hi);
        s.sigma = (1.0 - t) * a.sigma + t * b.sigma;
        s.sigma33 = (1.0 - t) * a.sigma33 + t * b.sigma33;
        s.p = fem::mean_stress(s.sigma, s.sigma33);
        s.q = fem::von_mises(s.sigma, s.sigma33);
        r = models_.yield->value(s.p, s.q, xi);
        s.f = r;
        ++s.iterations;
        (r > 0.0 ? t_lo : t_hi) = t;
      }
      s.kink = true;
      if (std::abs(r) > tol) {
        std::ostringstream msg;
        msg << "return map: bisection did not reach the yield tolerance at step " << state.step + 1
            << " (f=" << r << ", tol=" << tol << ", dlambda=" << hi << ")";
        throw ConvergenceError(msg.str());
      }
    }
  }
  s.d_eps_p = s.dlambda * dir_in;
  return s;
}

StepRecord ReturnMap::step(MacroState& state, const Vec3& d_eps) const {
  if (!d_eps.allFinite()) throw NumericalError("return map: non-finite strain increment");
  const Trial tr = trial(state, d_eps);
  StepRecord rec;
  rec.step = state.step + 1;
  if (!(tr.f > tol_f())) {
    state.eps += d_eps;
    state.eps_e = tr.eps_e;
    state.sigma = tr.sigma;
    state.sigma33 = tr.sigma33;
    state.step = rec.step;
    rec.f = tr.f;
  } else {
    // Flow from the last plastic code increment, then fixed-point passes that
    // refresh zeta and the flow direction from the corrected plastic strain.
    FlowContext ctx;
    {
      const Eigen::Vector2d s = spectral_decompose(tr.eps_e).project(tr.sigma);
      ctx.principal_stress << s(0), s(1), tr.sigma33;
    }
    Eigen::Vector3d g = state.dzeta.cwiseAbs().maxCoeff() > 0.0 ? models_.flow->direction(state.dzeta, ctx)
                                                                 : associative_direction(state, tr);
    if (!(g.norm() > 0.0)) g = associative_direction(state, tr);
    Solve s;
    Matrix hist, zeta;
    for (int pass = 0; pass < opts_.max_passes; ++pass) {
      try {
        s = solve(state, tr, d_eps, g);
      } catch (const ConvergenceError&) {
        // A stale direction (e.g. after a load reversal) may admit no root;
        // restart once from the normal of the yield surface.
        if (pass > 0 || rec.associative_restart) throw;
        rec.associative_restart = true;
        g = associative_direction(state, tr);
        s = solve(state, tr, d_eps, g);
      }
      rec.iterations += s.iterations;
      rec.bisection = rec.bisection || s.bisection;
      rec.kink = s.kink;
      rec.passes = pass + 1;
      hist = state.history;
      const int len = static_cast<int>(hist.rows());
      if (len > 1) hist.topRows(len - 1) = Matrix(hist.bottomRows(len - 1));
      hist.row(len - 1) = (state.eps_p + s.d_eps_p).transpose();
      zeta = models_.kinetic->zeta(hist);
      const Matrix dz = zeta - state.zeta;
      if (!(dz.cwiseAbs().maxCoeff() > 0.0)) break;
      const Eigen::Vector3d next = models_.flow->direction(dz, ctx);
      if (!(next.norm() > 0.0) || (next - g).norm() <= opts_.pass_tolerance) break;
      g = next;
    }
    state.eps += d_eps;
    state.eps_e = s.eps_e;
    state.eps_p += s.d_eps_p;
    state.xi += kSqrt23 * s.dlambda * g.norm();
    state.dzeta = zeta - state.zeta;
    state.zeta = zeta;
    state.history = hist;
    state.sigma = s.sigma;
    state.sigma33 = s.sigma33;
    state.step = rec.step;
    rec.plastic = true;
    rec.f = s.f;
    rec.dlambda = s.dlambda;
  }
  rec.eps = state.eps;
  rec.eps_p = state.eps_p;
  rec.sigma = state.sigma;
  rec.sigma33 = state.sigma33;
  rec.p = fem::mean_stress(state.sigma, state.sigma33);
  rec.q = fem::von_mises(state.sigma, state.sigma33);
  rec.xi = state.xi;
  rec.zeta = state.zeta;
  rec.extrapolated = models_.yield->extrapolating(rec.p, rec.q, rec.xi);
  return rec;
}

std::vector<StepRecord> ReturnMap::simulate(const std::vector<Vec3>& increments) const {
  MacroState s = initial_state();
  std::vector<StepRecord> out;
  out.reserve(increments.size());
  for (std::size_t k = 0; k < increments.size(); ++k) {
    try {
      out.push_back(step(s, increments[k]));
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("step " + std::to_string(k + 1) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Vec3> read_strain_program(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("cannot read strain program " + path.string());
  std::vector<Vec3> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    Vec3 v;
    if (!(ss >> v(0))) continue;
    if (!(ss >> v(1) >> v(2)) || !v.allFinite()) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected three finite numbers");
    }
    out.push_back(v);
  }
  return out;
}

std::vector<Vec3> increments_of(const std::vector<Vec3>& strains) {
  std::vector<Vec3> out;
  Vec3 prev = Vec3::Zero();
  for (const auto& e : strains) {
    out.push_back(e - prev);
    prev = e;
  }
  return out;
}

void write_prediction_csv(const std::filesystem::path& path, const std::vector<StepRecord>& rec) {
  std::ofstream out(path);
  if (!out) throw ArtifactError("cannot write " + path.string());
  const Eigen::Index d = rec.empty() ? 0 : rec.front().zeta.cols();
  out << "step,p,q,xi,flag,iterations";
  for (Eigen::Index k = 0; k < d; ++k) out << ",zeta_" << k;
  out << '\n';
  for (const auto& r : rec) {
    out << r.step << ',' << fem::format_double(r.p) << ',' << fem::format_double(r.q) << ','
        << fem::format_double(r.xi) << ',' << (r.plastic ? "plastic" : "elastic") << ',' << r.iterations;
    for (Eigen::Index k = 0; k < d; ++k) out << ',' << fem::format_double(r.zeta(0, k));
    out << '\n';
  }
}

mesh::PlasticityGraph decode_current(const Matrix& zeta, const ae::GraphAutoencoder& decoder,
                                     const mesh::PlasticityGraph& graph) {
  if (zeta.cols() != decoder.d_enc()) {
    throw ShapeError("decode: code has " + std::to_string(zeta.cols()) + " components, decoder expects " +
                     std::to_string(decoder.d_enc()));
  }
  return mesh::assemble_features(graph, decoder.decode_plastic(zeta));
}

}  // namespace plastigraph::rm
