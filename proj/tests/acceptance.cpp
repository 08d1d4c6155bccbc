// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "oracles.hpp"
#include "plastigraph/autoencoder/autoencoder.hpp"
#include "plastigraph/error.hpp"
#include "plastigraph/fem/dataset.hpp"
#include "plastigraph/fem/solver.hpp"
#include "plastigraph/mesh/graph.hpp"
#include "plastigraph/nets/yield.hpp"
#include "plastigraph/numcore/runtime.hpp"
#include "plastigraph/numcore/serialize.hpp"
#include "plastigraph/pipeline/config.hpp"
#include "plastigraph/pipeline/stages.hpp"
#include "plastigraph/returnmap/return_map.hpp"
#include "primitive_cases.hpp"
#include "support.hpp"

using namespace plastigraph;
using fem::Vec3;
using num::Json;
using num::Matrix;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  double seconds = -1.0;  // work attributed to the criterion; wall time when negative
};

int failures = 0;

void report(int id, const std::string& name, double limit, const std::function<Outcome()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double secs = o.seconds >= 0.0 ? o.seconds : wall;
  const bool in_time = secs <= limit;
  const bool pass = o.pass && in_time;
  failures += pass ? 0 : 1;
  std::printf("%s  criterion %2d  %-28s %7.1f s (limit %.0f s)%s  %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), secs,
              limit, in_time ? "" : " over time", o.detail.c_str());
  std::fflush(stdout);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ArtifactError("missing " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json manifest(const fs::path& out, const std::string& stage) { return num::read_json(out / stage / "manifest.json"); }

double timing(const Json& man, const std::string& part) { return man.at("timings").at(part).get<double>(); }

Outcome fem_correctness() {
  const fem::MaterialParams mat;
  bool ok = true;

  // Patch test: affine boundary data gives the affine field exactly.
  double patch = 0.0;
  {
    fem::FemModel model(mesh::refine(mesh::structured_mesh(3, 3, 1.0)), mat);
    fem::Mat2 F;
    F << 0.01, 0.004, -0.002, 0.006;
    model.advance(F);
    const Vec3 expect(F(0, 0), F(1, 1), 0.5 * (F(0, 1) + F(1, 0)));
    for (const auto& e : model.element_strains()) patch = std::max(patch, (e - expect).norm() / expect.norm());
  }
  ok = ok && patch <= 1e-8;

  // Local radial return against the scalar bisection oracle.
  double worst = 0.0;
  {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> u(-0.15, 0.15), pu(-0.03, 0.03), xu(0.0, 0.1);
    for (int trial = 0; trial < 1000; ++trial) {
      fem::PointState s;
      s.eps_p = Vec3(pu(rng), pu(rng), pu(rng));
      s.xi = xu(rng);
      s.eps_e = Vec3(u(rng), u(rng), u(rng)) * 0.2;
      const Vec3 d(u(rng), u(rng), u(rng));
      const auto up = fem::local_j2_update(s, d, mat);
      const auto ref = oracle::j2_bisection(fem::to_tensor(s.eps_e + s.eps_p + d, 0.0),
                                            fem::to_tensor(s.eps_p, -(s.eps_p(0) + s.eps_p(1))), s.xi, mat.E,
                                            mat.nu, mat.sigma_y0, mat.H);
      const Eigen::Matrix3d sig = fem::to_tensor(up.state.sigma, up.state.sigma33);
      worst = std::max(worst, (sig - ref.sigma).cwiseAbs().maxCoeff() / mat.sigma_y0);
      worst = std::max(worst, std::abs(up.state.xi - ref.xi));
      worst = std::max(worst, (up.state.eps_p - Vec3(ref.eps_p(0, 0), ref.eps_p(1, 1), ref.eps_p(0, 1)))
                                  .cwiseAbs()
                                  .maxCoeff());
    }
  }
  ok = ok && worst <= 1e-10;

  // Dissipation of every element over a cyclic path on a heterogeneous mesh.
  double min_diss = 0.0;
  {
    auto m = mesh::refine(mesh::structured_mesh(4, 4, 1.0));
    mesh::apply_inclusions(m, {{0.3, 0.3, 0.2, 0.6}});
    const auto prog = fem::cyclic_program(0, fem::Family::AxialShear, 35.0, 0.15, 20, {0.5}, 3, "c");
    const auto rec = fem::run_loading_path(m, mat, prog);
    for (int k = 1; k < rec.num_steps(); ++k) {
      for (int e = 0; e < m.num_elements(); ++e) {
        const Vec3 dep = (rec.plastic[k].row(e) - rec.plastic[k - 1].row(e)).transpose();
        const double diss = rec.elem[k](e, 0) * dep(0) + rec.elem[k](e, 1) * dep(1) + 2 * rec.elem[k](e, 2) * dep(2) -
                            rec.elem[k](e, 3) * (dep(0) + dep(1));
        min_diss = std::min(min_diss, diss / (mat.sigma_y0 * std::max(dep.norm(), 1e-300)));
      }
    }
  }
  ok = ok && min_diss >= -1e-12;
  return {ok, fmt::format("patch {:.1e}, radial return vs oracle {:.1e}, min normalized dissipation {:.1e}", patch,
                          worst, min_diss)};
}

Outcome paper_constants() {
  const auto c = pipeline::RunConfig::paper_scale();
  int samples = 0;
  for (const auto& p : fem::training_programs(c.loading)) samples += p.steps();
  // The same values must survive the config file path.
  const auto back = pipeline::RunConfig::from_json(Json::parse(c.to_json().dump()), pipeline::RunConfig::desk());
  const bool ok = c.material.E == 2.0799e6 && c.material.nu == 0.3 && c.material.sigma_y0 == 1.0e5 &&
                  std::abs(c.material.H - 0.1 * c.material.E) <= 1e-9 * c.material.E && c.loading.u_goal == 1.5e-3 &&
                  c.loading.paths == 100 && c.loading.steps == 100 && samples == 10000 &&
                  back.to_json() == c.to_json() &&
                  pipeline::config_schema().at("properties").at("material").at("properties").contains("E");
  return {ok, fmt::format("E {} Pa, nu {}, sigma_y0 {} Pa, H/E {}, u_goal {} m, {} samples", c.material.E, c.material.nu,
                          c.material.sigma_y0, c.material.H / c.material.E, c.loading.u_goal, samples)};
}

Outcome gin_equivalence() {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> size(2, 30);
  double worst = 0.0;
  for (int g = 0; g < 50; ++g) {
    const int n = size(rng);
    const double eps = (g % 3 == 0) ? 0.0 : 0.25 * (g % 5);
    const auto edges = oracle::random_edges(n, 0.2, rng);
    const auto adj = num::Adjacency::from_edges(n, edges, eps);
    const Matrix x = testutil::random_matrix(n, 5, rng);
    const Matrix w = testutil::random_matrix(5, 7, rng);
    const Matrix b = testutil::random_matrix(1, 7, rng);
    const bool relu = g % 2 == 0;
    const Matrix a = ae::gin_forward(adj, x, w, b, relu);
    const Matrix o = oracle::gin_node_loop(n, edges, x, w, b, eps, relu);
    worst = std::max(worst, (a - o).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-12, fmt::format("50 graphs, max abs difference {:.1e}", worst)};
}

Outcome autodiff() {
  std::mt19937_64 rng(21);
  bool ok = true;
  std::string worst_name;
  double worst_ratio = 0.0;
  int count = 0;
  for (const auto& c : primitives::cases(rng)) {
    const double r = primitives::error(c, rng) / primitives::tolerance(c);
    ok = ok && r <= 1.0;
    if (r > worst_ratio) {
      worst_ratio = r;
      worst_name = c.name;
    }
    ++count;
  }
  std::mt19937_64 rng2(17);
  const double eik = primitives::eikonal_error(rng2);
  ok = ok && eik <= 1e-3;
  return {ok, fmt::format("{} primitives, worst {} at {:.1e} of its tolerance; penalty gradient error {:.1e}", count,
                          worst_name, worst_ratio, eik)};
}

Outcome return_map_oracle() {
  const fem::MaterialParams mat;
  const rm::ReturnMap map(rm::ModelSet::analytic_j2(mat));
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-0.04, 0.04);
  double worst = 0.0;
  int plastic = 0;
  for (int prog = 0; prog < 100; ++prog) {
    rm::MacroState st = map.initial_state();
    Eigen::Matrix3d ep = Eigen::Matrix3d::Zero(), eps = Eigen::Matrix3d::Zero();
    double xi = 0.0;
    for (int k = 0; k < 20; ++k) {
      const Vec3 d(u(rng), u(rng), u(rng));
      const auto rec = map.step(st, d);
      Eigen::Matrix3d dt = Eigen::Matrix3d::Zero();
      dt << d(0), d(2), 0, d(2), d(1), 0, 0, 0, 0;
      eps += dt;
      const auto ref = oracle::j2_bisection(eps, ep, xi, mat.E, mat.nu, mat.sigma_y0, mat.H);
      ep = ref.eps_p;
      xi = ref.xi;
      const double scale = std::max(ref.sigma.norm(), mat.sigma_y0);
      worst = std::max(worst, (rec.sigma - Vec3(ref.sigma(0, 0), ref.sigma(1, 1), ref.sigma(0, 1))).norm() / scale);
      worst = std::max(worst, std::abs(rec.sigma33 - ref.sigma(2, 2)) / scale);
      worst = std::max(worst, std::abs(rec.xi - ref.xi) / std::max(ref.xi, 1e-3));
      plastic += rec.plastic ? 1 : 0;
    }
  }
  return {worst <= 1e-8 && plastic > 0,
          fmt::format("100 programs, {} plastic steps, max relative error {:.1e}", plastic, worst)};
}

// Circle of radius 0.5 in a [-1, 1]^2 box: the trained net should recover the
// analytic signed distance.
Outcome circle_fixture(double& seconds) {
  const auto t0 = std::chrono::steady_clock::now();
  const double r = 0.5;
  std::vector<nets::SurfacePoint> surface;
  for (int k = 0; k < 48; ++k) {
    const double a = 2.0 * M_PI * k / 48;
    surface.push_back({r * std::cos(a), r * std::sin(a), 0.1 * (k % 5)});
  }
  nets::YieldBox box;
  box.p_lo = box.q_lo = -1.0;
  box.p_hi = box.q_hi = 1.0;
  box.xi_lo = 0.0;
  box.xi_hi = 0.4;
  nets::YieldLabelConfig lc;
  lc.bins = 1;
  lc.collocation_per_bin = 3000;
  lc.seed = 4;
  const auto labels = nets::build_yield_labels(surface, box, lc, true);
  nets::YieldNet net(5, labels.box);
  nets::NetTrainConfig cfg;
  cfg.epochs = 1000;
  cfg.batch = 100;
  cfg.seed = 2;
  cfg.validation_fraction = 0.0;
  net.train(labels, cfg, 1.0);
  const double centre = std::abs(net.value(0, 0, 0.2) + r) / r;
  double worst = 0.0, dist = 0.0;
  for (int k = 0; k < 36; ++k) {
    const double a = 2 * M_PI * (k + 0.5) / 36;
    worst = std::max(worst, std::abs(net.value(r * std::cos(a), r * std::sin(a), 0.2)));
    // Half way between the centre and the surface, and outside it.
    dist = std::max(dist, std::abs(net.value(0.5 * r * std::cos(a), 0.5 * r * std::sin(a), 0.2) + 0.5 * r) / r);
    dist = std::max(dist, std::abs(net.value(1.5 * r * std::cos(a), 1.5 * r * std::sin(a), 0.2) - 0.5 * r) / r);
  }
  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = centre <= 0.1 && dist <= 0.1 && worst <= 0.05 * r;
  return {ok, fmt::format("circle: centre error {:.3f} r, distance error {:.3f} r, surface |f| {:.3f} r", centre, dist,
                          worst / r)};
}

Outcome yield_net(const fs::path& out) {
  const Json m = num::read_json(out / "train-nets" / "metrics.json");
  const double eik = m.at("yield_eikonal_residual"), on_mean = m.at("yield_on_surface_mean_abs"),
               on_max = m.at("yield_on_surface_max_abs");
  double circle_secs = 0.0;
  const Outcome circle = circle_fixture(circle_secs);
  const bool ok = eik <= 0.1 && on_max <= 0.05 && circle.pass;
  return {ok,
          fmt::format("eikonal {:.4f}, on-surface |f| max {:.4f} (mean {:.4f}); {}", eik, on_max, on_mean,
                      circle.detail),
          timing(manifest(out, "train-nets"), "yield") + circle_secs};
}

double study_loss(const fs::path& csv, int d_enc) {
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    if (f.size() == 4 && std::stoi(f[2]) == d_enc) return std::stod(f[3]);
  }
  throw ArtifactError("no D_enc=" + std::to_string(d_enc) + " row in " + csv.string());
}

Outcome autoencoder(const fs::path& out) {
  const Json m = num::read_json(out / "train-ae" / "metrics.json");
  const double r2 = m.at("heldout_r2");
  const bool constant = m.at("preyield_constant");
  const double l2 = study_loss(out / "study" / "enc_size.csv", 2), l16 = study_loss(out / "study" / "enc_size.csv", 16);
  const bool ok = r2 >= 0.95 && l2 >= 10.0 * l16 && constant && m.at("preyield_snapshots").get<int>() > 0;
  return {ok,
          fmt::format("held-out R2 {:.4f}, loss(D=2)/loss(D=16) {:.1f}, pre-yield codes constant on {} snapshots: {}",
                      r2, l2 / l16, m.at("preyield_snapshots").get<int>(), constant ? "yes" : "no"),
          manifest(out, "train-ae").at("wall_seconds").get<double>() + timing(manifest(out, "study"), "enc-size")};
}

Outcome blind_prediction(const fs::path& out) {
  const Json m = num::read_json(out / "simulate" / "metrics.json");
  bool ok = true;
  double mono = 0.0, cyc = 0.0;
  int n_mono = 0, n_cyc = 0, kkt = 0, excursions = 0;
  bool unchanged = true;
  for (const auto& p : m.at("paths")) {
    const double ratio = p.at("rmse_q").get<double>() / p.at("peak_q").get<double>();
    kkt += p.at("kkt_violations").get<int>();
    if (p.at("tag") == "blind-monotonic") {
      mono = std::max(mono, ratio);
      ++n_mono;
    } else {
      cyc = std::max(cyc, ratio);
      excursions += p.at("excursions").get<int>();
      unchanged = unchanged && p.at("excursions_unchanged").get<bool>();
      ++n_cyc;
    }
  }
  ok = n_mono >= 3 && n_cyc >= 3 && mono <= 0.05 && cyc <= 0.10 && kkt == 0 && unchanged && excursions > 0;
  return {ok,
          fmt::format("monotonic RMSE/peak {:.4f} ({} paths), cyclic {:.4f} ({} paths), {} excursions unchanged: {}, "
                      "KKT violations {}",
                      mono, n_mono, cyc, n_cyc, excursions, unchanged ? "yes" : "no", kkt),
          manifest(out, "simulate").at("wall_seconds").get<double>()};
}

Outcome baseline_comparison(const pipeline::Pipeline& run) {
  const auto c = run.compare();
  const bool ok = c.cyclic_baseline > c.cyclic_return_map && c.cyclic_baseline_augmented < c.cyclic_baseline &&
                  c.cyclic_baseline_augmented > c.cyclic_return_map;
  return {ok,
          fmt::format("cyclic RMSE(q) return map {:.1f}, baseline {:.1f}, augmented baseline {:.1f}",
                      c.cyclic_return_map, c.cyclic_baseline, c.cyclic_baseline_augmented),
          manifest(run.out(), "train-baseline").at("wall_seconds").get<double>()};
}

Outcome decode_consistency(const fs::path& out) {
  const Json m = num::read_json(out / "decode" / "metrics.json");
  double worst = 0.0;
  int n = 0;
  for (const auto& p : m.at("paths")) {
    worst = std::max(worst, p.at("relative_error").get<double>());
    ++n;
  }
  return {n >= 3 && worst <= 0.15, fmt::format("{} monotonic paths, max relative error {:.4f}", n, worst),
          manifest(out, "decode").at("wall_seconds").get<double>()};
}

double run_pipeline(const pipeline::RunConfig& cfg, const fs::path& out, int log_every) {
  fs::remove_all(out);
  pipeline::Pipeline p(cfg, out, log_every);
  double total = 0.0;
  for (const auto& r : p.run_all()) {
    std::fprintf(stderr, "[acceptance] %s done in %.1f s\n", r.stage.c_str(), r.seconds);
    total += r.seconds;
  }
  return total;
}

}  // namespace

int main(int argc, char** argv) {
  num::tune_allocator();
  CLI::App app{"Acceptance criteria"};
  fs::path work = fs::temp_directory_path() / "plastigraph_acceptance";
  std::string config;
  int log_every = 0;
  app.add_option("--work", work, "Directory for the two pipeline runs");
  app.add_option("--config", config, "Run config (desk defaults when omitted)");
  app.add_option("--log-every", log_every, "Training log interval in epochs (0: quiet)");
  CLI11_PARSE(app, argc, argv);

  report(1, "FEM correctness", 10, fem_correctness);
  report(2, "paper constants", 1, paper_constants);
  report(3, "GIN equivalence", 1, gin_equivalence);
  report(4, "autodiff", 30, autodiff);
  report(7, "return map oracle mode", 10, return_map_oracle);

  const auto cfg = config.empty() ? pipeline::RunConfig::desk() : pipeline::load_config(config);
  const fs::path a = work / "run_a", b = work / "run_b";
  double secs_a = 0.0;
  std::string run_error;
  try {
    secs_a = run_pipeline(cfg, a, log_every);
  } catch (const std::exception& e) {
    run_error = std::string("pipeline run failed: ") + e.what();
  }
  auto guarded = [&](std::function<Outcome()> fn) {
    return [fn, &run_error]() -> Outcome {
      if (!run_error.empty()) return {false, run_error};
      return fn();
    };
  };
  const pipeline::Pipeline run_a(cfg, a);
  report(5, "autoencoder", 600, guarded([&] { return autoencoder(a); }));
  report(6, "yield net", 180, guarded([&] { return yield_net(a); }));
  report(8, "blind prediction", 120, guarded([&] { return blind_prediction(a); }));
  report(9, "baseline comparison", 600, guarded([&] { return baseline_comparison(run_a); }));
  report(10, "decode consistency", 30, guarded([&] { return decode_consistency(a); }));
  report(11, "end-to-end determinism", 2 * 1800, guarded([&]() -> Outcome {
           const double secs_b = run_pipeline(cfg, b, log_every);
           bool same = true;
           for (const auto* f : {"report.csv", "compare.csv"}) {
             same = same && slurp(a / "report" / f) == slurp(b / "report" / f);
           }
           const double slowest = std::max(secs_a, secs_b);
           return {same && slowest <= 1800,
                   fmt::format("report.csv and compare.csv {}; runs took {:.0f} s and {:.0f} s",
                               same ? "bit-identical" : "differ", secs_a, secs_b),
                   secs_a + secs_b};
         }));
  std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
