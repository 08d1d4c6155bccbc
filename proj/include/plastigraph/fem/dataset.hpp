#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "plastigraph/fem/material.hpp"
#include "plastigraph/fem/solver.hpp"
#include "plastigraph/mesh/mesh.hpp"
#include "plastigraph/numcore/matrix.hpp"

namespace plastigraph::fem {

enum class Family { PureAxial, AxialShear };
std::string to_string(Family f);
Family family_from_string(const std::string& s);

/// Boundary displacement gradient as a function of step. With a = u_goal / L:
///   pure axial  : a * diag(cos t, sin t)
///   axial shear : a * [[cos t, sin t], [0, 0]]
/// scaled by `amplitude[k]` at step k + 1.
struct LoadingProgram {
  int id = 0;
  Family family = Family::PureAxial;
  double theta_deg = 0.0;
  double u_goal = 1.5e-3;
  std::string tag = "train";
  std::vector<double> amplitude;                  // one per step
  std::vector<std::pair<int, int>> excursions;  // 1-based [first, last] unload/reload steps

  int steps() const { return static_cast<int>(amplitude.size()); }
  Mat2 unit_gradient(double side) const;
  Mat2 gradient(int step, double side) const;  // step 0 is the unloaded state
  /// Homogenized strain at a step (exact for affine boundary data).
  Vec3 strain(int step, double side) const;
};

LoadingProgram monotonic_program(int id, Family family, double theta_deg, double u_goal, int steps,
                                 std::string tag);
/// Monotonic ramp of `steps` increments with, at each fraction in `at`, an
/// unload of `length` increments followed by a reload of the same size back
/// to exactly the same amplitude.
LoadingProgram cyclic_program(int id, Family family, double theta_deg, double u_goal, int steps,
                              const std::vector<double>& at, int length, std::string tag);

struct LoadingPlan {
  int paths = 20;
  int steps = 50;
  double u_goal = 1.5e-3;
  int blind_monotonic = 3;
  int blind_cyclic = 3;
  int excursion_length = 4;
  std::vector<double> excursion_at{0.4, 0.6, 0.8};
};

/// Evenly spaced angles on [0, 90] per family, families split evenly.
std::vector<LoadingProgram> training_programs(const LoadingPlan& plan);
/// Held-out angles at midpoints of the training grid.
std::vector<LoadingProgram> blind_programs(const LoadingPlan& plan);

struct StepRecord {
  int step = 0;
  Vec3 eps = Vec3::Zero();
  Vec3 eps_p = Vec3::Zero();
  Vec3 sigma = Vec3::Zero();
  double sigma33 = 0.0;
  double p = 0.0;
  double q = 0.0;
  double xi = 0.0;
  double psi = 0.0;
  bool plastic = false;  // some integration point yielded during the step

  Vec3 eps_e() const { return eps - eps_p; }
};

struct PathRecord {
  LoadingProgram program;
  std::vector<StepRecord> steps;
  std::vector<num::Matrix> plastic;  // per step, N x 3 element plastic strains
  std::vector<num::Matrix> elem;     // per step, N x 5: s11 s22 s12 s33 xi_local (optional)

  int num_steps() const { return static_cast<int>(steps.size()); }
  bool has_state() const { return !elem.empty(); }
};

PathRecord run_loading_path(const mesh::TriMesh& mesh, const MaterialParams& mat,
                            const LoadingProgram& program, const SolverOptions& opts = {});

/// Writes `<stem>.txt` (PATH, HOM, NODE lines) and `<stem>.state` (ELEM lines).
void write_path(const std::filesystem::path& stem, const PathRecord& rec);
PathRecord read_path(const std::filesystem::path& stem, bool with_state);

/// Decimal text with round-trip precision.
std::string format_double(double v);

}  // namespace plastigraph::fem
