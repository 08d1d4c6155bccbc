#pragma once

#include <array>
#include <string>
#include <vector>

#include "plastigraph/fem/dataset.hpp"
#include "plastigraph/nets/common.hpp"
#include "plastigraph/numcore/layers.hpp"

namespace plastigraph::nets {

struct SurfacePoint {
  double p = 0.0;
  double q = 0.0;
  double xi = 0.0;
};

/// Raw (p, q) rectangle and xi range of the training region.
struct YieldBox {
  double p_lo = -1.0, p_hi = 1.0;
  double q_lo = -1.0, q_hi = 1.0;
  double xi_lo = 0.0, xi_hi = 1.0;

  /// (p, q, xi) -> [-1, 1]^3.
  num::Affine normalization() const;
};

struct YieldLabelConfig {
  int bins = 12;  // equal-count xi bins
  int collocation_per_bin = 200;
  double margin = 0.2;  // box padding, fraction of the observed span
  std::uint64_t seed = 0;
};

/// One xi-bin of surface points in normalized (p, q).
struct YieldBin {
  double xi_lo = 0.0, xi_hi = 0.0, xi_center = 0.0;
  std::vector<Eigen::Vector2d> surface;  // polyline vertices, in order
  std::vector<Eigen::Vector2d> polygon;  // elastic region (closed implicitly)
  bool closed = false;
};

struct YieldLabelSet {
  YieldBox box;
  Matrix x;                   // rows of raw (p, q, xi)
  std::vector<double> label;  // signed distance in normalized (p, q)
  std::vector<char> on_surface;
  std::vector<YieldBin> bins;
  std::vector<std::string> warnings;

  int size() const { return static_cast<int>(label.size()); }
};

/// Surface points of a bin sorted by their angle about a centre. A closed loop
/// is sorted about its centroid. An open arc is sorted about (mean p, base_q),
/// its ends run horizontally out to the box edges, and the elastic side is the
/// region between the arc and the bottom of the box. Coordinates normalized.
YieldBin make_bin(std::vector<Eigen::Vector2d> points, bool closed, double base_q = -1.0);
double distance_to_polyline(const std::vector<Eigen::Vector2d>& poly, bool closed,
                            const Eigen::Vector2d& x);
bool inside_polygon(const std::vector<Eigen::Vector2d>& poly, const Eigen::Vector2d& x);
/// Negative inside (elastic), positive outside.
double signed_label(const YieldBin& bin, const Eigen::Vector2d& x);

/// Labels from homogenized plastic steps binned in xi.
YieldLabelSet build_yield_labels(const std::vector<fem::PathRecord>& paths, const YieldLabelConfig& cfg);
/// Labels from explicit surface samples inside a given box.
YieldLabelSet build_yield_labels(const std::vector<SurfacePoint>& surface, const YieldBox& box,
                                 const YieldLabelConfig& cfg, bool closed);

/// f(p, q, xi): dense(100, relu) -> square -> dense(100, relu) -> square -> dense(1)
/// on inputs normalized to [-1, 1].
class YieldNet {
 public:
  YieldNet() = default;
  YieldNet(std::uint64_t seed, const YieldBox& box, int width = 100);

  const YieldBox& box() const { return box_; }
  const num::Sequential& net() const { return net_; }

  double value(double p, double q, double xi) const;
  /// (df/dp, df/dq, df/dxi) in raw units.
  Eigen::Vector3d gradient(double p, double q, double xi) const;
  /// Values for rows of normalized inputs.
  Matrix predict_normalized(const Matrix& xn) const;
  /// f units per unit of q; converts stress tolerances to f tolerances.
  double per_stress() const { return 2.0 / (box_.q_hi - box_.q_lo); }
  /// True beyond twice the training box.
  bool extrapolating(double p, double q, double xi) const;

  /// Combined loss MSE(f - label) + w * mean((|grad_pq f|^2 - 1)^2).
  LossHistory train(const YieldLabelSet& labels, const NetTrainConfig& cfg, double eikonal_weight = 1.0);

  /// Mean | |grad_pq f| - 1 | on a grid over the box at the given xi levels.
  double eikonal_residual(const std::vector<double>& xi_levels, int grid = 30) const;

  num::Json to_json() const;
  static YieldNet from_json(const num::Json& doc);

 private:
  YieldBox box_;
  num::Affine norm_;
  num::Sequential net_;
};

}  // namespace plastigraph::nets
