#include "plastigraph/fem/solver.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "plastigraph/error.hpp"

namespace plastigraph::fem {

FemModel::FemModel(mesh::TriMesh mesh, MaterialParams mat, SolverOptions opts)
    : mesh_(std::move(mesh)), mat_(mat), opts_(opts) {
  mat_.validate();
  mesh::check_conforming(mesh_);
  const int nv = mesh_.num_vertices();
  elems_.reserve(mesh_.num_elements());
  for (int e = 0; e < mesh_.num_elements(); ++e) {
    const auto& t = mesh_.elements[e];
    const auto& a = mesh_.vertices[t[0]];
    const auto& b = mesh_.vertices[t[1]];
    const auto& c = mesh_.vertices[t[2]];
    const double area = mesh_.signed_area(e);
    const double bx[3] = {b.y - c.y, c.y - a.y, a.y - b.y};
    const double by[3] = {c.x - b.x, a.x - c.x, b.x - a.x};
    Element el;
    el.area = area;
    el.B.setZero();
    for (int k = 0; k < 3; ++k) {
      const double dx = bx[k] / (2.0 * area);
      const double dy = by[k] / (2.0 * area);
      el.B(0, 2 * k) = dx;
      el.B(1, 2 * k + 1) = dy;
      el.B(2, 2 * k) = dy;
      el.B(2, 2 * k + 1) = dx;
      el.dofs[2 * k] = 2 * t[k];
      el.dofs[2 * k + 1] = 2 * t[k] + 1;
    }
    elems_.push_back(el);
    area_ += area;
  }
  is_boundary_.assign(nv, false);
  for (int v : mesh_.boundary_vertices()) is_boundary_[v] = true;
  free_index_.assign(2 * nv, -1);
  for (int v = 0; v < nv; ++v) {
    if (!is_boundary_[v]) {
      free_index_[2 * v] = num_free_++;
      free_index_[2 * v + 1] = num_free_++;
    }
  }
  u_ = Eigen::VectorXd::Zero(2 * nv);
  states_.assign(mesh_.num_elements(), PointState{});
  plastic_.assign(mesh_.num_elements(), false);
}

std::vector<Vec3> FemModel::element_strains() const {
  std::vector<Vec3> out(elems_.size());
  for (std::size_t e = 0; e < elems_.size(); ++e) {
    Eigen::Matrix<double, 6, 1> ue;
    for (int k = 0; k < 6; ++k) ue(k) = u_(elems_[e].dofs[k]);
    Vec3 eng = elems_[e].B * ue;
    out[e] = Vec3(eng(0), eng(1), 0.5 * eng(2));
  }
  return out;
}

bool FemModel::try_step(const Mat2& target, int& iterations) {
  const int nv = mesh_.num_vertices();
  const Mat2 dgrad = target - grad_;
  Eigen::VectorXd u = u_;
  for (int v = 0; v < nv; ++v) {
    const Eigen::Vector2d X(mesh_.vertices[v].x, mesh_.vertices[v].y);
    u.segment<2>(2 * v) += dgrad * X;
  }
  const std::vector<Vec3> eps_n = element_strains();
  std::vector<LocalUpdate> updates(elems_.size());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  const double scale = mat_.sigma_y0 * mesh_.side;

  for (int it = 0; it < opts_.max_iterations; ++it) {
    Eigen::VectorXd f_int = Eigen::VectorXd::Zero(2 * nv);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(elems_.size() * 36);
    for (std::size_t e = 0; e < elems_.size(); ++e) {
      const Element& el = elems_[e];
      Eigen::Matrix<double, 6, 1> ue;
      for (int k = 0; k < 6; ++k) ue(k) = u(el.dofs[k]);
      Vec3 eng = el.B * ue;
      Vec3 eps(eng(0), eng(1), 0.5 * eng(2));
      updates[e] = local_j2_update(states_[e], eps - eps_n[e], mat_, mesh_.yield_scale[e]);
      const Eigen::Matrix<double, 6, 1> fe = el.area * el.B.transpose() * updates[e].state.sigma;
      const Eigen::Matrix<double, 6, 6> ke = el.area * el.B.transpose() * updates[e].tangent * el.B;
      for (int a = 0; a < 6; ++a) {
        f_int(el.dofs[a]) += fe(a);
        const int ra = free_index_[el.dofs[a]];
        if (ra < 0) continue;
        for (int b = 0; b < 6; ++b) {
          const int cb = free_index_[el.dofs[b]];
          if (cb >= 0) trip.emplace_back(ra, cb, ke(a, b));
        }
      }
    }
    Eigen::VectorXd r(num_free_);
    double react2 = 0.0;
    for (int d = 0; d < 2 * nv; ++d) {
      if (free_index_[d] >= 0) {
        r(free_index_[d]) = f_int(d);
      } else {
        react2 += f_int(d) * f_int(d);
      }
    }
    ++iterations;
    const double tol = opts_.tolerance * std::max(std::sqrt(react2), scale);
    if (num_free_ == 0 || r.norm() <= tol) {
      u_ = u;
      grad_ = target;
      for (std::size_t e = 0; e < elems_.size(); ++e) {
        states_[e] = updates[e].state;
        plastic_[e] = updates[e].plastic;
      }
      return true;
    }
    if (!r.allFinite()) return false;
    Eigen::SparseMatrix<double> K(num_free_, num_free_);
    K.setFromTriplets(trip.begin(), trip.end());
    solver.compute(K);
    if (solver.info() != Eigen::Success) return false;
    const Eigen::VectorXd du = solver.solve(-r);
    if (!du.allFinite()) return false;
    for (int d = 0; d < 2 * nv; ++d) {
      if (free_index_[d] >= 0) u(d) += du(free_index_[d]);
    }
  }
  return false;
}

int FemModel::advance_recursive(const Mat2& from, const Mat2& to, int depth) {
  int iterations = 0;
  if (try_step(to, iterations)) return iterations;
  if (depth >= opts_.max_bisections) {
    throw ConvergenceError("FEM Newton did not converge after " + std::to_string(depth) +
                           " step bisections");
  }
  const Mat2 mid = 0.5 * (from + to);
  iterations += advance_recursive(from, mid, depth + 1);
  iterations += advance_recursive(mid, to, depth + 1);
  return iterations;
}

int FemModel::advance(const Mat2& target) {
  if (!target.allFinite()) throw NumericalError("FEM: non-finite boundary gradient");
  return advance_recursive(grad_, target, 0);
}

Homogenized FemModel::homogenize() const {
  Homogenized h;
  const std::vector<Vec3> eps = element_strains();
  double s33 = 0.0, psi = 0.0;
  for (std::size_t e = 0; e < elems_.size(); ++e) {
    const double w = elems_[e].area / area_;
    h.eps += w * eps[e];
    h.eps_p += w * states_[e].eps_p;
    h.eps_e += w * states_[e].eps_e;
    h.sigma += w * states_[e].sigma;
    s33 += w * states_[e].sigma33;
    psi += w * states_[e].psi;
  }
  h.sigma33 = s33;
  h.psi = psi;
  h.p = mean_stress(h.sigma, h.sigma33);
  h.q = von_mises(h.sigma, h.sigma33);
  return h;
}

Eigen::VectorXd FemModel::internal_forces() const {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(2 * mesh_.num_vertices());
  for (std::size_t e = 0; e < elems_.size(); ++e) {
    const Eigen::Matrix<double, 6, 1> fe =
        elems_[e].area * elems_[e].B.transpose() * states_[e].sigma;
    for (int a = 0; a < 6; ++a) f(elems_[e].dofs[a]) += fe(a);
  }
  return f;
}

Vec3 FemModel::reaction_stress() const {
  const Eigen::VectorXd f = internal_forces();
  Mat2 s = Mat2::Zero();
  for (int v = 0; v < mesh_.num_vertices(); ++v) {
    if (!is_boundary_[v]) continue;
    const Eigen::Vector2d X(mesh_.vertices[v].x, mesh_.vertices[v].y);
    s += f.segment<2>(2 * v) * X.transpose();
  }
  s /= area_;
  return Vec3(s(0, 0), s(1, 1), 0.5 * (s(0, 1) + s(1, 0)));
}

double volume_average(const std::vector<double>& values, const mesh::TriMesh& mesh) {
  if (static_cast<int>(values.size()) != mesh.num_elements()) {
    throw ShapeError("volume_average: one value per element required");
  }
  double num = 0.0, den = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const double a = mesh.signed_area(e);
    num += a * values[e];
    den += a;
  }
  return num / den;
}

Vec3 volume_average(const std::vector<Vec3>& values, const mesh::TriMesh& mesh) {
  if (static_cast<int>(values.size()) != mesh.num_elements()) {
    throw ShapeError("volume_average: one value per element required");
  }
  Vec3 num = Vec3::Zero();
  double den = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const double a = mesh.signed_area(e);
    num += a * values[e];
    den += a;
  }
  return num / den;
}

}  // namespace plastigraph::fem
