#include "plastigraph/baselines/augment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "plastigraph/error.hpp"
#include "plastigraph/numcore/init.hpp"

namespace plastigraph::baselines {

namespace {

// Same round-off allowance as the FEM local update.
constexpr double kYieldTolerance = 1e-9;

void check_state(const fem::PathRecord& path, int index, const mesh::TriMesh& mesh) {
  if (!path.has_state()) throw DataError("augment: source path " + std::to_string(path.program.id) + " has no element states");
  if (index < 0 || index >= path.num_steps()) throw DataError("augment: step index out of range");
  if (path.elem[index].rows() != mesh.num_elements()) throw ShapeError("augment: element states do not match the mesh");
}

}  // namespace

Series series_from_path(const fem::PathRecord& path, int source) {
  Series s;
  s.source = source;
  s.pq.resize(path.num_steps(), 2);
  for (int k = 0; k < path.num_steps(); ++k) {
    s.eps.push_back(path.steps[k].eps);
    s.pq(k, 0) = path.steps[k].p;
    s.pq(k, 1) = path.steps[k].q;
  }
  s.anchor.assign(path.num_steps(), -1);
  s.inserted.assign(path.num_steps(), false);
  return s;
}

int AugmentedDataset::samples() const {
  int n = 0;
  for (const auto& s : series) n += s.rows();
  return n;
}

double max_element_yield(const fem::PathRecord& path, int index, const Vec3& offset,
                         const mesh::TriMesh& mesh, const fem::MaterialParams& mat) {
  check_state(path, index, mesh);
  Vec3 ds;
  double ds33 = 0.0;
  fem::elastic_stress(mat, offset, 0.0, ds, ds33);
  const Matrix& el = path.elem[index];
  double worst = -std::numeric_limits<double>::infinity();
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Vec3 s = Vec3(el(e, 0), el(e, 1), el(e, 2)) + ds;
    const double sy = mesh.yield_scale[e] * mat.sigma_y0 + mat.H * el(e, 4);
    worst = std::max(worst, (fem::von_mises(s, el(e, 3) + ds33) - sy) / sy);
  }
  return worst;
}

double elastic_range(const fem::PathRecord& path, int index, const Vec3& dir, const mesh::TriMesh& mesh,
                     const fem::MaterialParams& mat) {
  auto admissible = [&](double t) {
    return max_element_yield(path, index, t * dir, mesh, mat) <= kYieldTolerance;
  };
  if (!admissible(0.0)) return 0.0;
  // The largest element yield value is convex in t, so the admissible set is an interval.
  double lo = 0.0, hi = mat.sigma_y0 / mat.E;
  while (admissible(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e3) throw NumericalError("augment: elastic range is unbounded");
  }
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (admissible(mid) ? lo : hi) = mid;
  }
  return lo;
}

AugmentedDataset augment_dataset(const std::vector<fem::PathRecord>& paths, const mesh::TriMesh& mesh,
                                 const fem::MaterialParams& mat, const AugmentConfig& cfg) {
  if (paths.empty()) throw DataError("augment: no source paths");
  if (!(cfg.multiplier >= 1.0) || !(cfg.depth_min > 0.0) || !(cfg.depth_max <= 1.0) ||
      cfg.depth_min > cfg.depth_max || cfg.length_min < 2 || cfg.length_min > cfg.length_max ||
      cfg.max_excursions < 1) {
    throw ConfigError("augment: bad configuration");
  }
  AugmentedDataset out;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    out.series.push_back(series_from_path(paths[i], static_cast<int>(i)));
  }
  out.source_samples = out.samples();
  const int target = static_cast<int>(std::lround(cfg.multiplier * out.source_samples));

  // Candidate anchors: plastic steps whose reverse direction has a usable elastic range.
  struct Anchor {
    int index;
    Vec3 dir;
    double range;
  };
  std::vector<std::vector<Anchor>> anchors(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (int k = 0; k < paths[i].num_steps(); ++k) {
      if (!paths[i].steps[k].plastic) continue;
      const Vec3 eps = paths[i].steps[k].eps;
      if (!(eps.norm() > 0.0)) continue;
      const Vec3 dir = -eps / eps.norm();
      const double r = elastic_range(paths[i], k, dir, mesh, mat);
      if (r > 0.0) anchors[i].push_back({k, dir, r});
    }
  }
  std::vector<int> usable;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (!anchors[i].empty()) usable.push_back(static_cast<int>(i));
  }
  if (usable.empty() && target > out.source_samples) {
    throw DataError("augment: no plastic step admits an elastic excursion");
  }

  num::Rng rng(cfg.seed);
  std::uniform_real_distribution<double> depth(cfg.depth_min, cfg.depth_max);
  std::uniform_int_distribution<int> length(cfg.length_min, cfg.length_max);
  std::uniform_int_distribution<int> count(1, cfg.max_excursions);
  std::uniform_int_distribution<int> pick_path(0, std::max(0, static_cast<int>(usable.size()) - 1));
  int total = out.source_samples;
  while (total < target) {
    const int src = usable[pick_path(rng)];
    const fem::PathRecord& path = paths[src];
    const auto& cand = anchors[src];
    std::uniform_int_distribution<int> pick(0, static_cast<int>(cand.size()) - 1);
    std::vector<int> chosen;
    const int n_exc = std::min<int>(count(rng), static_cast<int>(cand.size()));
    while (static_cast<int>(chosen.size()) < n_exc) {
      const int c = pick(rng);
      if (std::find(chosen.begin(), chosen.end(), c) == chosen.end()) chosen.push_back(c);
    }
    std::sort(chosen.begin(), chosen.end());

    const Series base = series_from_path(path, src);
    Series s;
    s.source = src;
    std::vector<Eigen::RowVector2d> pq;
    auto push = [&](const Vec3& eps, double p, double q, int anchor, bool inserted) {
      s.eps.push_back(eps);
      pq.emplace_back(p, q);
      s.anchor.push_back(anchor);
      s.inserted.push_back(inserted);
    };
    std::size_t next = 0;
    for (int k = 0; k < base.rows(); ++k) {
      push(base.eps[k], base.pq(k, 0), base.pq(k, 1), -1, false);
      if (next < chosen.size() && cand[chosen[next]].index == k) {
        const Anchor& a = cand[chosen[next++]];
        const double d = depth(rng) * a.range;
        const int len = length(rng);
        const int down = (len + 1) / 2, up = len - down;
        const auto& st = path.steps[k];
        for (int j = 1; j <= len; ++j) {
          // Distance from the anchor: out to d, then back to exactly zero.
          const double t = j <= down ? d * j / down : d * (up - (j - down)) / up;
          const Vec3 off = t * a.dir;
          Vec3 ds;
          double ds33 = 0.0;
          fem::elastic_stress(mat, off, 0.0, ds, ds33);
          const Vec3 sig = st.sigma + ds;
          const double s33 = st.sigma33 + ds33;
          push(st.eps + off, fem::mean_stress(sig, s33), fem::von_mises(sig, s33), k, true);
        }
      }
    }
    // Trim the last copy so the total hits the target.
    const int keep = std::min<int>(s.rows(), target - total);
    s.eps.resize(keep);
    s.anchor.resize(keep);
    s.inserted.resize(keep);
    s.pq.resize(keep, 2);
    for (int r = 0; r < keep; ++r) s.pq.row(r) = pq[r];
    total += keep;
    out.series.push_back(std::move(s));
  }
  return out;
}

}  // namespace plastigraph::baselines
