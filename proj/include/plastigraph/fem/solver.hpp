#pragma once

#include <vector>

#include <Eigen/Dense>

#include "plastigraph/fem/material.hpp"
#include "plastigraph/mesh/mesh.hpp"

namespace plastigraph::fem {

using Mat2 = Eigen::Matrix2d;

/// Area-weighted homogenized response of the whole mesh.
struct Homogenized {
  Vec3 eps = Vec3::Zero();
  Vec3 eps_p = Vec3::Zero();
  Vec3 eps_e = Vec3::Zero();
  Vec3 sigma = Vec3::Zero();
  double sigma33 = 0.0;
  double p = 0.0;
  double q = 0.0;
  double psi = 0.0;
};

struct SolverOptions {
  int max_iterations = 50;
  int max_bisections = 8;
  double tolerance = 1e-10;
};

/// Quasi-static CST solver with affine displacement u = F X prescribed on every
/// boundary vertex (F is the 2x2 displacement gradient).
class FemModel {
 public:
  FemModel(mesh::TriMesh mesh, MaterialParams mat, SolverOptions opts = {});

  /// Advances from the committed state to boundary gradient `target`.
  /// Returns the number of Newton iterations summed over sub-steps.
  int advance(const Mat2& target);

  const std::vector<PointState>& states() const { return states_; }
  const std::vector<bool>& last_step_plastic() const { return plastic_; }
  const mesh::TriMesh& mesh() const { return mesh_; }
  const MaterialParams& material() const { return mat_; }
  const Eigen::VectorXd& displacement() const { return u_; }
  const Mat2& boundary_gradient() const { return grad_; }

  /// Element strains (tensor shear) of the current displacement field.
  std::vector<Vec3> element_strains() const;
  Homogenized homogenize() const;
  /// (1/A) sum_b f_b (x) X_b over boundary vertices, symmetrized.
  Vec3 reaction_stress() const;
  /// Internal nodal forces of the committed state, 2 per vertex.
  Eigen::VectorXd internal_forces() const;

 private:
  struct Element {
    Eigen::Matrix<double, 3, 6> B;  // engineering-shear rows
    std::array<int, 6> dofs;
    double area;
  };

  bool try_step(const Mat2& target, int& iterations);
  int advance_recursive(const Mat2& from, const Mat2& to, int depth);

  mesh::TriMesh mesh_;
  MaterialParams mat_;
  SolverOptions opts_;
  std::vector<Element> elems_;
  std::vector<bool> is_boundary_;
  std::vector<int> free_index_;  // dof -> free slot or -1
  int num_free_ = 0;
  double area_ = 0.0;

  Eigen::VectorXd u_;
  Mat2 grad_ = Mat2::Zero();
  std::vector<PointState> states_;
  std::vector<bool> plastic_;
};

/// Area-weighted mean of one value per element.
double volume_average(const std::vector<double>& values, const mesh::TriMesh& mesh);
Vec3 volume_average(const std::vector<Vec3>& values, const mesh::TriMesh& mesh);

}  // namespace plastigraph::fem
