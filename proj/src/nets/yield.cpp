#include "plastigraph/nets/yield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "plastigraph/error.hpp"

namespace plastigraph::nets {

using num::Tape;
using num::Var;

num::Affine YieldBox::normalization() const {
  num::Affine a;
  a.offset = {0.5 * (p_lo + p_hi), 0.5 * (q_lo + q_hi), 0.5 * (xi_lo + xi_hi)};
  a.scale = {0.5 * (p_hi - p_lo), 0.5 * (q_hi - q_lo), 0.5 * (xi_hi - xi_lo)};
  for (double s : a.scale) {
    if (!(s > 0.0)) throw ConfigError("yield box has an empty side");
  }
  return a;
}

YieldBin make_bin(std::vector<Eigen::Vector2d> pts, bool closed, double base_q) {
  YieldBin bin;
  bin.closed = closed;
  if (pts.empty()) return bin;
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& v : pts) c += v;
  c /= static_cast<double>(pts.size());
  if (!closed) c(1) = base_q;
  std::stable_sort(pts.begin(), pts.end(), [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return std::atan2(a(1) - c(1), a(0) - c(0)) < std::atan2(b(1) - c(1), b(0) - c(0));
  });
  if (closed) {
    bin.surface = pts;
    bin.polygon = pts;
    return bin;
  }
  // Ascending angle runs from the high-p end to the low-p end.
  bin.surface.push_back({1.0, pts.front()(1)});
  bin.surface.insert(bin.surface.end(), pts.begin(), pts.end());
  bin.surface.push_back({-1.0, pts.back()(1)});
  bin.polygon = bin.surface;
  bin.polygon.push_back({-1.0, -1.0});
  bin.polygon.push_back({1.0, -1.0});
  return bin;
}

double distance_to_polyline(const std::vector<Eigen::Vector2d>& poly, bool closed,
                            const Eigen::Vector2d& x) {
  if (poly.empty()) throw DataError("distance to an empty polyline");
  double best = (poly[0] - x).norm();
  const std::size_t n = poly.size();
  const std::size_t segs = closed ? n : n - 1;
  for (std::size_t k = 0; k < segs; ++k) {
    const Eigen::Vector2d& a = poly[k];
    const Eigen::Vector2d& b = poly[(k + 1) % n];
    const Eigen::Vector2d d = b - a;
    const double len2 = d.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((x - a).dot(d) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, (a + t * d - x).norm());
  }
  return best;
}

bool inside_polygon(const std::vector<Eigen::Vector2d>& poly, const Eigen::Vector2d& x) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a(1) > x(1)) != (b(1) > x(1)) &&
        x(0) < (b(0) - a(0)) * (x(1) - a(1)) / (b(1) - a(1)) + a(0)) {
      inside = !inside;
    }
  }
  return inside;
}

double signed_label(const YieldBin& bin, const Eigen::Vector2d& x) {
  const double d = distance_to_polyline(bin.surface, bin.closed, x);
  return inside_polygon(bin.polygon, x) ? -d : d;
}

namespace {

YieldLabelSet assemble(const std::vector<SurfacePoint>& surface, const YieldBox& box,
                       const YieldLabelConfig& cfg, bool closed) {
  if (cfg.bins < 1 || cfg.collocation_per_bin < 0) throw ConfigError("yield labels: bad bin config");
  YieldLabelSet out;
  out.box = box;
  const num::Affine norm = box.normalization();
  const double base_q = (0.0 - norm.offset[1]) / norm.scale[1];
  // Equal-count bins: yielding of a heterogeneous cell spreads over a short
  // early stretch of xi, which uniform bins would lump together. Ties share a bin.
  std::vector<const SurfacePoint*> sorted;
  for (const auto& s : surface) sorted.push_back(&s);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const SurfacePoint* a, const SurfacePoint* b) { return a->xi < b->xi; });
  const std::size_t n = sorted.size();
  std::vector<std::vector<const SurfacePoint*>> members(cfg.bins);
  std::size_t first = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (sorted[r]->xi != sorted[first]->xi) first = r;
    members[first * static_cast<std::size_t>(cfg.bins) / n].push_back(sorted[r]);
  }
  std::vector<std::pair<double, double>> range(cfg.bins);
  for (int b = 0; b < cfg.bins; ++b) {
    if (members[b].empty()) continue;
    range[b] = {members[b].front()->xi, members[b].back()->xi};
    // Input order within a bin.
    std::sort(members[b].begin(), members[b].end());
  }
  std::vector<std::array<double, 3>> rows;
  num::Rng rng(cfg.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int b = 0; b < cfg.bins; ++b) {
    if (members[b].size() < 4) {
      out.warnings.push_back("xi bin " + std::to_string(b) + " has " +
                             std::to_string(members[b].size()) + " surface points; skipped");
      continue;
    }
    std::vector<Eigen::Vector2d> pts;
    for (const SurfacePoint* s : members[b]) {
      pts.push_back({(s->p - norm.offset[0]) / norm.scale[0], (s->q - norm.offset[1]) / norm.scale[1]});
      rows.push_back({s->p, s->q, s->xi});
      out.label.push_back(0.0);
      out.on_surface.push_back(1);
    }
    YieldBin bin = make_bin(std::move(pts), closed, base_q);
    bin.xi_lo = range[b].first;
    bin.xi_hi = range[b].second;
    bin.xi_center = 0.5 * (bin.xi_lo + bin.xi_hi);
    for (int k = 0; k < cfg.collocation_per_bin; ++k) {
      const Eigen::Vector2d xn(unit(rng), unit(rng));
      rows.push_back({norm.offset[0] + norm.scale[0] * xn(0), norm.offset[1] + norm.scale[1] * xn(1),
                      bin.xi_center});
      out.label.push_back(signed_label(bin, xn));
      out.on_surface.push_back(0);
    }
    out.bins.push_back(std::move(bin));
  }
  if (out.bins.empty()) throw DataError("yield labels: no xi bin has enough surface points");
  out.x.resize(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int c = 0; c < 3; ++c) out.x(static_cast<Eigen::Index>(r), c) = rows[r][c];
  }
  return out;
}

}  // namespace

YieldLabelSet build_yield_labels(const std::vector<SurfacePoint>& surface, const YieldBox& box,
                                 const YieldLabelConfig& cfg, bool closed) {
  if (surface.empty()) throw DataError("yield labels: no surface points");
  return assemble(surface, box, cfg, closed);
}

YieldLabelSet build_yield_labels(const std::vector<fem::PathRecord>& paths, const YieldLabelConfig& cfg) {
  std::vector<SurfacePoint> surface;
  double p_lo = 0.0, p_hi = 0.0, q_hi = 0.0;
  std::vector<double> angles;
  for (const auto& path : paths) {
    bool yielded = false;
    for (const auto& st : path.steps) {
      p_lo = std::min(p_lo, st.p);
      p_hi = std::max(p_hi, st.p);
      q_hi = std::max(q_hi, st.q);
      if (st.plastic && st.xi > 0.0) {
        surface.push_back({st.p, st.q, st.xi});
        yielded = true;
      }
    }
    if (yielded) angles.push_back(path.program.theta_deg + (path.program.family == fem::Family::AxialShear ? 1000 : 0));
  }
  std::sort(angles.begin(), angles.end());
  const auto distinct = std::unique(angles.begin(), angles.end()) - angles.begin();
  if (distinct < 8) {
    throw DataError("yield labels need plastic steps from at least 8 loading directions, got " +
                    std::to_string(distinct));
  }
  const double p_span = std::max(p_hi - p_lo, 1e-12), q_span = std::max(q_hi, 1e-12);
  YieldBox box;
  box.p_lo = p_lo - cfg.margin * p_span;
  box.p_hi = p_hi + cfg.margin * p_span;
  box.q_lo = -cfg.margin * q_span;
  box.q_hi = q_hi + cfg.margin * q_span;
  double xi_hi = 0.0;
  for (const auto& s : surface) xi_hi = std::max(xi_hi, s.xi);
  box.xi_lo = 0.0;
  box.xi_hi = xi_hi;
  return assemble(surface, box, cfg, false);
}

YieldNet::YieldNet(std::uint64_t seed, const YieldBox& box, int width)
    : box_(box),
      norm_(box.normalization()),
      net_(3,
           {{"dense", width, num::Activation::Relu},
            {"multiply", 0, num::Activation::Linear},
            {"dense", width, num::Activation::Relu},
            {"multiply", 0, num::Activation::Linear},
            {"dense", 1, num::Activation::Linear}},
           num::InitScheme::GlorotUniform, seed) {}

namespace {

Matrix raw_row(double p, double q, double xi) {
  Matrix x(1, 3);
  x << p, q, xi;
  return x;
}

}  // namespace

Matrix YieldNet::predict_normalized(const Matrix& xn) const { return net_.predict(xn); }

double YieldNet::value(double p, double q, double xi) const {
  return net_.predict(norm_.apply(raw_row(p, q, xi)))(0, 0);
}

Eigen::Vector3d YieldNet::gradient(double p, double q, double xi) const {
  Tape t;
  auto pv = t.parameters(net_.params());
  Var x = t.input(norm_.apply(raw_row(p, q, xi)));
  const Matrix g = t.grad_input(net_.forward(t, pv, x), x);
  return {g(0, 0) / norm_.scale[0], g(0, 1) / norm_.scale[1], g(0, 2) / norm_.scale[2]};
}

bool YieldNet::extrapolating(double p, double q, double xi) const {
  const Matrix xn = norm_.apply(raw_row(p, q, xi));
  return xn.cwiseAbs().maxCoeff() > 2.0;
}

LossHistory YieldNet::train(const YieldLabelSet& labels, const NetTrainConfig& cfg, double w) {
  if (labels.size() == 0) throw DataError("train_yield: empty label set");
  const Matrix xn = norm_.apply(labels.x);
  Matrix y(labels.size(), 1);
  for (int i = 0; i < labels.size(); ++i) y(i, 0) = labels.label[i];
  auto [tr, va] = split_indices(labels.size(), cfg.validation_fraction, num::mix_seed(cfg.seed, 17));
  const Matrix x_tr = take_rows(xn, tr), y_tr = take_rows(y, tr);
  const Matrix x_va = take_rows(xn, va), y_va = take_rows(y, va);
  auto state = num::OptimizerState::make(num::OptimizerKind::Nadam, net_.params(), cfg.learning_rate);

  auto loss_of = [&](Tape& t, const std::vector<Var>& pv, const Matrix& xb, const Matrix& yb) {
    Var x = t.input(xb);
    Var f = net_.forward(t, pv, x);
    Var fit = t.mean(t.square(t.sub(f, t.constant(yb))));
    if (w == 0.0) return fit;
    return t.add(fit, t.scale(num::gradient_norm_penalty(t, f, x, 0, 2), w));
  };
  auto step = [&](const std::vector<int>& rows) {
    Tape t;
    auto pv = t.parameters(net_.params());
    Var l = loss_of(t, pv, take_rows(x_tr, rows), take_rows(y_tr, rows));
    const double v = t.scalar(l);
    if (std::isfinite(v)) num::optimizer_step(state, net_.params(), t.grad_params(l));
    return v;
  };
  auto validate = [&]() {
    if (va.empty()) return -1.0;
    Tape t;
    auto pv = t.parameters(net_.params());
    return t.scalar(loss_of(t, pv, x_va, y_va));
  };
  return run_epochs(static_cast<int>(tr.size()), cfg, "train-yield", step, validate);
}

double YieldNet::eikonal_residual(const std::vector<double>& xi_levels, int grid) const {
  if (grid < 2 || xi_levels.empty()) throw ConfigError("eikonal_residual: bad grid");
  Matrix xn(static_cast<Eigen::Index>(grid) * grid * static_cast<Eigen::Index>(xi_levels.size()), 3);
  Eigen::Index r = 0;
  for (double xi : xi_levels) {
    const double xin = (xi - norm_.offset[2]) / norm_.scale[2];
    for (int i = 0; i < grid; ++i) {
      for (int j = 0; j < grid; ++j) {
        xn.row(r++) << -1.0 + 2.0 * i / (grid - 1), -1.0 + 2.0 * j / (grid - 1), xin;
      }
    }
  }
  Tape t;
  auto pv = t.parameters(net_.params());
  Var x = t.input(xn);
  const Matrix g = t.grad_input(t.sum(net_.forward(t, pv, x)), x);
  return (g.leftCols(2).rowwise().norm().array() - 1.0).abs().mean();
}

num::Json YieldNet::to_json() const {
  num::Json box{{"p", {box_.p_lo, box_.p_hi}}, {"q", {box_.q_lo, box_.q_hi}}, {"xi", {box_.xi_lo, box_.xi_hi}}};
  return num::model_document("yield", net_, {{"box", box}, {"affine", norm_.to_json()}});
}

YieldNet YieldNet::from_json(const num::Json& doc) {
  YieldNet y;
  y.net_ = num::sequential_from_document(doc, "yield");
  const auto& b = doc.at("normalization").at("box");
  y.box_.p_lo = b.at("p")[0];
  y.box_.p_hi = b.at("p")[1];
  y.box_.q_lo = b.at("q")[0];
  y.box_.q_hi = b.at("q")[1];
  y.box_.xi_lo = b.at("xi")[0];
  y.box_.xi_hi = b.at("xi")[1];
  y.norm_ = num::Affine::from_json(doc.at("normalization").at("affine"));
  return y;
}

}  // namespace plastigraph::nets
