// plastigraph: command-line driver for the experiment chain.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "plastigraph/error.hpp"
#include "plastigraph/mesh/graph.hpp"
#include "plastigraph/numcore/runtime.hpp"
#include "plastigraph/pipeline/stages.hpp"
#include "plastigraph/returnmap/return_map.hpp"

using namespace plastigraph;
namespace fs = std::filesystem;

namespace {

struct RunOptions {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool paper_scale = false;
  int log_every = 0;
  int paths = 0, steps = 0;
  double ugoal = 0.0;
};

void add_run_options(CLI::App* app, RunOptions& o) {
  app->add_option("--config", o.config, "run configuration (JSON); desk defaults when omitted");
  app->add_option("--out", o.out, "output directory (overrides the config)");
  app->add_option_function<std::uint64_t>("--seed", [&o](const std::uint64_t& s) { o.seed = s; o.seed_set = true; },
                                          "master seed");
  app->add_flag("--paper-scale", o.paper_scale, "restore the published data and training sizes");
  app->add_option("--log-every", o.log_every, "training log period in epochs (0: silent)");
}

pipeline::RunConfig resolve(const RunOptions& o) {
  pipeline::RunConfig c = o.config.empty() ? pipeline::RunConfig::desk() : pipeline::load_config(o.config);
  if (o.paper_scale) c.apply_paper_scale();
  if (o.seed_set) c.seed = o.seed;
  if (!o.out.empty()) c.out = o.out;
  if (o.paths > 0) c.loading.paths = o.paths;
  if (o.steps > 0) c.loading.steps = o.steps;
  if (o.ugoal > 0.0) c.loading.u_goal = o.ugoal;
  c.validate();
  return c;
}

void run_stage(const std::string& stage, const RunOptions& o) {
  const auto cfg = resolve(o);
  pipeline::Pipeline p(cfg, cfg.out, o.log_every);
  const auto r = p.run(stage);
  std::fprintf(stderr, "%s: done in %.1f s -> %s\n", stage.c_str(), r.seconds, p.dir(stage).string().c_str());
}

num::Matrix zeta_at(const fs::path& prediction_csv, int step) {
  std::ifstream in(prediction_csv);
  if (!in) throw ArtifactError("cannot read " + prediction_csv.string());
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<std::string> cells;
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    if (cells.size() < 7 || std::stoi(cells[0]) != step) continue;
    num::Matrix z(1, static_cast<Eigen::Index>(cells.size() - 6));
    for (std::size_t i = 6; i < cells.size(); ++i) z(0, static_cast<Eigen::Index>(i - 6)) = std::stod(cells[i]);
    return z;
  }
  throw DataError("step " + std::to_string(step) + " not found in " + prediction_csv.string());
}

}  // namespace

int main(int argc, char** argv) {
  num::tune_allocator();
  CLI::App app{"Graph-encoded internal variables for elastoplasticity: data, training and prediction"};
  app.require_subcommand(1);

  RunOptions run;
  std::vector<std::pair<std::string, CLI::App*>> stages;
  for (const auto& s : pipeline::stage_names()) {
    if (s == "simulate" || s == "decode") continue;
    auto* sub = app.add_subcommand(s, "run stage " + s);
    add_run_options(sub, run);
    if (s == "gen-data") {
      sub->add_option("--paths", run.paths, "training paths");
      sub->add_option("--steps", run.steps, "steps per path");
      sub->add_option("--ugoal", run.ugoal, "boundary displacement goal");
    }
    stages.emplace_back(s, sub);
  }
  auto* all = app.add_subcommand("all", "run every stage in order");
  add_run_options(all, run);

  // simulate: pipeline stage, or a single strain program with --models.
  std::string models, program, out_csv;
  auto* sim = app.add_subcommand("simulate", "return-map prediction (stage, or one program with --models)");
  add_run_options(sim, run);
  sim->add_option("--models", models, "directory with hyperelastic/yield/kinetic/flow.json");
  sim->add_option("--path", program, "strain program: one Voigt increment per line");
  sim->add_option("--csv", out_csv, "prediction CSV (stdout when omitted)");

  std::string ae_file, mesh_file, prediction;
  int at_step = -1;
  auto* dec = app.add_subcommand("decode", "decode codes into NODE lines (stage, or one step with --at-step)");
  add_run_options(dec, run);
  dec->add_option("--autoencoder", ae_file, "autoencoder model file");
  dec->add_option("--mesh", mesh_file, "mesh file the autoencoder was trained on");
  dec->add_option("--prediction", prediction, "prediction CSV from simulate");
  dec->add_option("--at-step", at_step, "step to decode");

  std::vector<std::string> data_stems;
  auto* enc = app.add_subcommand("encode", "emit ZETA lines for dataset files");
  enc->add_option("--autoencoder", ae_file, "autoencoder model file")->required();
  enc->add_option("--mesh", mesh_file, "mesh file")->required();
  enc->add_option("data", data_stems, "dataset stems (path without .txt)")->required();

  std::string kind;
  auto* sens = app.add_subcommand("sensitivity", "mesh-size or enc-size autoencoder study");
  add_run_options(sens, run);
  sens->add_option("--kind", kind, "enc-size or mesh-size")->required()->check(CLI::IsMember({"enc-size", "mesh-size"}));
  sens->add_option("--csv", out_csv, "output CSV (stdout when omitted)");

  auto* cmp = app.add_subcommand("compare", "per-path RMSE(q) of the baselines and the return map");
  add_run_options(cmp, run);
  cmp->add_option("--csv", out_csv, "output CSV")->required();

  app.add_subcommand("schema", "print the configuration schema");
  auto* show = app.add_subcommand("config", "print the resolved configuration");
  add_run_options(show, run);

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& [name, sub] : stages) {
      if (sub->parsed()) run_stage(name, run);
    }
    if (all->parsed()) {
      const auto cfg = resolve(run);
      pipeline::Pipeline p(cfg, cfg.out, run.log_every);
      for (const auto& r : p.run_all()) std::fprintf(stderr, "%s: %.1f s\n", r.stage.c_str(), r.seconds);
    }
    if (sim->parsed()) {
      if (models.empty()) {
        run_stage("simulate", run);
      } else {
        if (program.empty()) throw ConfigError("simulate --models needs --path");
        const auto cfg = resolve(run);
        rm::ReturnMapOptions opts;
        opts.sigma_y0 = cfg.material.sigma_y0;
        opts.tolerance = cfg.return_map.tolerance;
        opts.max_newton = cfg.return_map.max_newton;
        opts.max_passes = cfg.return_map.max_passes;
        const rm::ReturnMap map(rm::ModelSet::load(models), opts);
        const auto rec = map.simulate(rm::read_strain_program(program));
        if (out_csv.empty()) {
          const fs::path tmp = fs::temp_directory_path() / "plastigraph_prediction.csv";
          rm::write_prediction_csv(tmp, rec);
          std::cout << std::ifstream(tmp).rdbuf();
          fs::remove(tmp);
        } else {
          rm::write_prediction_csv(out_csv, rec);
        }
      }
    }
    if (dec->parsed()) {
      if (at_step < 0) {
        run_stage("decode", run);
      } else {
        if (ae_file.empty() || mesh_file.empty() || prediction.empty()) {
          throw ConfigError("decode --at-step needs --autoencoder, --mesh and --prediction");
        }
        const auto m = mesh::read_mesh(mesh_file);
        const auto graph = mesh::build_dual_graph(m);
        const auto model = ae::GraphAutoencoder::from_json(num::read_json(ae_file), graph);
        const auto g = rm::decode_current(zeta_at(prediction, at_step), model, graph);
        for (int i = 0; i < g.num_nodes(); ++i) {
          std::cout << "NODE " << i << ' ' << fem::format_double(g.features(i, 2)) << ' '
                    << fem::format_double(g.features(i, 3)) << ' ' << fem::format_double(g.features(i, 4)) << '\n';
        }
      }
    }
    if (enc->parsed()) {
      const auto m = mesh::read_mesh(mesh_file);
      const auto graph = mesh::build_dual_graph(m);
      const auto model = ae::GraphAutoencoder::from_json(num::read_json(ae_file), graph);
      for (const auto& stem : data_stems) {
        const auto rec = fem::read_path(stem, false);
        const auto z = model.encode_batch(rec.plastic);
        for (Eigen::Index k = 0; k < z.rows(); ++k) {
          std::cout << "ZETA " << rec.program.id << ' ' << k + 1;
          for (Eigen::Index c = 0; c < z.cols(); ++c) std::cout << ' ' << fem::format_double(z(k, c));
          std::cout << '\n';
        }
      }
    }
    if (sens->parsed()) {
      const auto rows = pipeline::sensitivity_study(kind, resolve(run), run.log_every);
      if (out_csv.empty()) {
        std::cout << "variant,elements,d_enc,final_loss\n";
        for (const auto& r : rows) {
          std::cout << r.variant << ',' << r.elements << ',' << r.d_enc << ',' << fem::format_double(r.final_loss) << '\n';
        }
      } else {
        pipeline::write_study_csv(out_csv, rows);
      }
    }
    if (cmp->parsed()) {
      const auto cfg = resolve(run);
      baselines::write_compare_csv(out_csv, pipeline::Pipeline(cfg, cfg.out).compare().rows);
    }
    if (app.got_subcommand("schema")) std::cout << pipeline::config_schema().dump(2) << '\n';
    if (show->parsed()) std::cout << resolve(run).to_json().dump(2) << '\n';
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
