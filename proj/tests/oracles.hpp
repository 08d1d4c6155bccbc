#pragma once

// Independent reference implementations used by unit and acceptance tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct J2Result {
  Eigen::Matrix3d eps_e;  // full tensor
  Eigen::Matrix3d eps_p;
  Eigen::Matrix3d sigma;
  double xi;
};

/// Return mapping by bisection on the scalar consistency condition, built from
/// the full 3x3 tensors with plain Lame constants.
inline J2Result j2_bisection(const Eigen::Matrix3d& eps_total, const Eigen::Matrix3d& eps_p_n,
                             double xi_n, double E, double nu, double sy0, double H) {
  const double mu = E / (2 * (1 + nu));
  const double lam = E * nu / ((1 + nu) * (1 - 2 * nu));
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d ee_tr = eps_total - eps_p_n;
  const Eigen::Matrix3d sig_tr = lam * ee_tr.trace() * I + 2 * mu * ee_tr;
  const Eigen::Matrix3d s_tr = sig_tr - sig_tr.trace() / 3 * I;
  const double q_tr = std::sqrt(1.5 * (s_tr.array() * s_tr.array()).sum());
  auto residual = [&](double dg) { return q_tr - 3 * mu * dg - (sy0 + H * (xi_n + dg)); };
  double dg = 0.0;
  if (residual(0.0) > 1e-9 * (sy0 + H * xi_n)) {
    double lo = 0.0, hi = q_tr / (3 * mu);
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (residual(mid) > 0 ? lo : hi) = mid;
    }
    dg = 0.5 * (lo + hi);
  }
  J2Result r;
  const Eigen::Matrix3d n = q_tr > 0 ? Eigen::Matrix3d(s_tr / std::sqrt((s_tr.array() * s_tr.array()).sum()))
                                     : Eigen::Matrix3d::Zero();
  r.eps_p = eps_p_n + std::sqrt(1.5) * dg * n;
  r.eps_e = eps_total - r.eps_p;
  r.sigma = lam * r.eps_e.trace() * I + 2 * mu * r.eps_e;
  r.xi = xi_n + dg;
  return r;
}

inline std::vector<std::array<int, 2>> random_edges(int n, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution pick(density);
  std::vector<std::array<int, 2>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (pick(rng)) edges.push_back({i, j});
    }
  }
  return edges;
}

/// Per-node GIN layer: x'_i = act(((1 + eps) x_i + sum_{j in N(i)} x_j) W + b).
template <class M>
M gin_node_loop(int n, const std::vector<std::array<int, 2>>& edges, const M& x, const M& w, const M& b,
                double eps, bool relu) {
  std::vector<std::vector<int>> nbr(n);
  for (const auto& e : edges) {
    nbr[e[0]].push_back(e[1]);
    nbr[e[1]].push_back(e[0]);
  }
  M out(n, w.cols());
  for (int i = 0; i < n; ++i) {
    std::vector<double> agg(x.cols());
    for (int c = 0; c < x.cols(); ++c) {
      agg[c] = (1.0 + eps) * x(i, c);
      for (int j : nbr[i]) agg[c] += x(j, c);
    }
    for (int o = 0; o < w.cols(); ++o) {
      double s = b(0, o);
      for (int c = 0; c < x.cols(); ++c) s += agg[c] * w(c, o);
      out(i, o) = relu ? std::max(s, 0.0) : s;
    }
  }
  return out;
}

}  // namespace oracle
