#include "plastigraph/pipeline/stages.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "plastigraph/baselines/baseline.hpp"
#include "plastigraph/error.hpp"
#include "plastigraph/mesh/graph.hpp"
#include "plastigraph/nets/flow.hpp"
#include "plastigraph/nets/hyperelastic.hpp"
#include "plastigraph/nets/kinetic.hpp"
#include "plastigraph/nets/yield.hpp"
#include "plastigraph/numcore/init.hpp"
#include "plastigraph/returnmap/return_map.hpp"

namespace plastigraph::pipeline {

using num::Matrix;

namespace {

const std::vector<std::string> kStages{"gen-mesh",      "gen-data", "train-ae", "train-nets", "train-baseline",
                                       "simulate",      "decode",   "study",    "report"};

// Salts for the seeds drawn inside a stage.
constexpr std::uint64_t kModelSalt = 1, kTrainSalt = 2, kLabelSalt = 3, kSplitSalt = 4;

std::string fmt(double v) { return fem::format_double(v); }

// Adds the lifetime of a scope to a named timing.
class Lap {
 public:
  Lap(std::map<std::string, double>& out, std::string name)
      : out_(out), name_(std::move(name)), t0_(std::chrono::steady_clock::now()) {}
  ~Lap() { out_[name_] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::map<std::string, double>& out_;
  std::string name_;
  std::chrono::steady_clock::time_point t0_;
};

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ArtifactError("cannot write " + p.string());
  out << text;
}

std::string stem_of(const fem::LoadingProgram& p) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04d", p.tag.c_str(), p.id);
  return buf;
}

std::vector<fem::LoadingProgram> all_programs(const fem::LoadingPlan& plan) {
  auto out = fem::training_programs(plan);
  for (auto& p : fem::blind_programs(plan)) out.push_back(std::move(p));
  return out;
}

std::vector<fem::PathRecord> generate(const mesh::TriMesh& m, const fem::MaterialParams& mat,
                                      const std::vector<fem::LoadingProgram>& programs) {
  std::vector<fem::PathRecord> out;
  out.reserve(programs.size());
  for (const auto& p : programs) out.push_back(fem::run_loading_path(m, mat, p));
  return out;
}

ae::TrainConfig ae_train_config(const RunConfig& cfg, int epochs, int log_every) {
  ae::TrainConfig t;
  t.epochs = epochs;
  t.batch = cfg.autoencoder.batch;
  t.learning_rate = cfg.autoencoder.learning_rate;
  t.seed = num::mix_seed(stage_seed(cfg.seed, "train-ae"), kTrainSalt);
  t.log_every = log_every;
  return t;
}

std::uint64_t ae_model_seed(const RunConfig& cfg) { return num::mix_seed(stage_seed(cfg.seed, "train-ae"), kModelSalt); }

nets::NetTrainConfig net_config(const NetSpec& n, double vf, std::uint64_t seed, int log_every) {
  nets::NetTrainConfig c;
  c.epochs = n.epochs;
  c.batch = n.batch;
  c.learning_rate = n.learning_rate;
  c.validation_fraction = vf;
  c.seed = seed;
  c.log_every = log_every;
  return c;
}

// ZETA <path id> <step> z_0 ... ; step 0 is the unloaded state.
using CodeTable = std::map<std::pair<int, int>, Matrix>;

CodeTable read_codes(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ArtifactError("cannot read " + p.string());
  CodeTable t;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    int id = 0, step = 0;
    if (!(ls >> key) || key != "ZETA") continue;
    ls >> id >> step;
    std::vector<double> v;
    double x = 0.0;
    while (ls >> x) v.push_back(x);
    Matrix row(1, static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = v[i];
    t[{id, step}] = row;
  }
  return t;
}

Matrix path_codes(const CodeTable& t, const fem::PathRecord& path) {
  Matrix z;
  for (int k = 1; k <= path.num_steps(); ++k) {
    auto it = t.find({path.program.id, k});
    if (it == t.end()) throw ArtifactError("codes file lacks path " + std::to_string(path.program.id) + "; rerun stage train-ae");
    if (z.size() == 0) z.resize(path.num_steps(), it->second.cols());
    z.row(k - 1) = it->second;
  }
  return z;
}

double voigt_norm(const fem::Vec3& v) { return std::sqrt(v(0) * v(0) + v(1) * v(1) + 2.0 * v(2) * v(2)); }

Matrix pq_of(const std::vector<rm::StepRecord>& rec) {
  Matrix m(static_cast<Eigen::Index>(rec.size()), 2);
  for (std::size_t k = 0; k < rec.size(); ++k) m.row(static_cast<Eigen::Index>(k)) << rec[k].p, rec[k].q;
  return m;
}

Matrix pq_of(const fem::PathRecord& path) { return baselines::series_from_path(path).pq; }

double pooled_rmse(const std::vector<Matrix>& truth, const std::vector<Matrix>& pred) {
  double ss = 0.0;
  Eigen::Index n = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss += (truth[i].col(1) - pred[i].col(1)).squaredNorm();
    n += truth[i].rows();
  }
  return n > 0 ? std::sqrt(ss / static_cast<double>(n)) : 0.0;
}

std::string pq_csv(const Matrix& pq) {
  std::string s = "step,p,q\n";
  for (Eigen::Index k = 0; k < pq.rows(); ++k) {
    s += std::to_string(k + 1) + ',' + fmt(pq(k, 0)) + ',' + fmt(pq(k, 1)) + '\n';
  }
  return s;
}

Matrix read_pq_csv(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ArtifactError("cannot read " + p.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::array<double, 2>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string a, b, c;
    std::getline(ls, a, ',');
    std::getline(ls, b, ',');
    std::getline(ls, c, ',');
    rows.push_back({std::stod(b), std::stod(c)});
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), 2);
  for (std::size_t k = 0; k < rows.size(); ++k) m.row(static_cast<Eigen::Index>(k)) << rows[k][0], rows[k][1];
  return m;
}

const num::Json& metric(const num::Json& m, const std::string& key, const std::string& stage) {
  auto it = m.find(key);
  if (it == m.end()) throw ArtifactError("metrics of stage " + stage + " lack '" + key + "'; rerun stage " + stage);
  return *it;
}

}  // namespace

const std::vector<std::string>& stage_names() { return kStages; }

bool is_stage(const std::string& name) { return std::find(kStages.begin(), kStages.end(), name) != kStages.end(); }

std::uint64_t stage_seed(std::uint64_t master, const std::string& stage) {
  return num::mix_seed(master ^ std::stoull(num::fnv1a_hex(stage), nullptr, 16), 0);
}

std::vector<Matrix> snapshots_of(const std::vector<fem::PathRecord>& paths) {
  std::vector<Matrix> out;
  for (const auto& p : paths) out.insert(out.end(), p.plastic.begin(), p.plastic.end());
  return out;
}

Pipeline::Pipeline(RunConfig cfg, fs::path out, int log_every)
    : cfg_(std::move(cfg)), out_(std::move(out)), log_every_(log_every) {
  cfg_.validate();
}

StageResult Pipeline::run(const std::string& stage) {
  if (!is_stage(stage)) throw ConfigError("unknown stage '" + stage + "'");
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(dir(stage));
  timings_.clear();
  num::write_json(dir(stage) / "config.json", cfg_.to_json());
  if (stage == "gen-mesh") gen_mesh();
  if (stage == "gen-data") gen_data();
  if (stage == "train-ae") train_ae();
  if (stage == "train-nets") train_nets();
  if (stage == "train-baseline") train_baseline();
  if (stage == "simulate") simulate();
  if (stage == "decode") decode();
  if (stage == "study") study();
  if (stage == "report") report();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  static const std::map<std::string, std::vector<std::string>> upstream{
      {"gen-mesh", {}},
      {"gen-data", {"gen-mesh"}},
      {"train-ae", {"gen-mesh", "gen-data"}},
      {"train-nets", {"gen-data", "train-ae"}},
      {"train-baseline", {"gen-mesh", "gen-data"}},
      {"simulate", {"gen-data", "train-nets"}},
      {"decode", {"gen-mesh", "train-ae", "simulate"}},
      {"study", {"train-ae"}},
      {"report", {"train-ae", "train-nets", "train-baseline", "simulate", "decode", "study"}}};
  write_manifest(stage, upstream.at(stage), secs);
  return {stage, secs, timings_};
}

std::vector<StageResult> Pipeline::run_all() {
  std::vector<StageResult> out;
  for (const auto& s : kStages) {
    out.push_back(run(s));
    if (log_every_ > 0) std::fprintf(stderr, "[pipeline] %s done in %.1f s\n", s.c_str(), out.back().seconds);
  }
  return out;
}

void Pipeline::require(const std::string& stage, const std::string& file) const {
  const fs::path p = dir(stage) / file;
  if (!fs::exists(p)) throw ArtifactError("missing " + p.string() + "; rerun stage " + stage);
  const fs::path man = dir(stage) / "manifest.json";
  if (!fs::exists(man)) throw ArtifactError("missing " + man.string() + "; rerun stage " + stage);
  const num::Json m = num::read_json(man);
  auto it = m.at("outputs").find(file);
  if (it == m.at("outputs").end() || it->get<std::string>() != num::file_checksum(p)) {
    throw ArtifactError(p.string() + " does not match the manifest of stage " + stage + "; rerun stage " + stage);
  }
}

void Pipeline::write_manifest(const std::string& stage, const std::vector<std::string>& upstream,
                              double seconds) const {
  num::Json outputs = num::Json::object();
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir(stage))) {
    if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) outputs[fs::relative(f, dir(stage)).generic_string()] = num::file_checksum(f);
  num::Json inputs = num::Json::object();
  for (const auto& u : upstream) {
    const fs::path man = dir(u) / "manifest.json";
    if (fs::exists(man)) inputs[u] = num::file_checksum(man);
  }
  num::write_json(dir(stage) / "manifest.json", {{"stage", stage},
                                                 {"master_seed", cfg_.seed},
                                                 {"stage_seed", stage_seed(cfg_.seed, stage)},
                                                 {"config_checksum", num::fnv1a_hex(cfg_.to_json().dump())},
                                                 {"inputs", inputs},
                                                 {"outputs", outputs},
                                                 {"wall_seconds", seconds},
                                                 {"timings", timings_}});
}

mesh::TriMesh Pipeline::load_mesh() const {
  require("gen-mesh", "mesh.txt");
  return mesh::read_mesh(dir("gen-mesh") / "mesh.txt");
}

std::vector<fem::PathRecord> Pipeline::load_paths(const std::string& tag_prefix, bool with_state) const {
  require("gen-data", "index.json");
  const num::Json idx = num::read_json(dir("gen-data") / "index.json");
  std::vector<fem::PathRecord> out;
  for (const auto& e : idx.at("paths")) {
    const std::string tag = e.at("tag").get<std::string>();
    if (tag.rfind(tag_prefix, 0) != 0) continue;
    const std::string stem = e.at("stem").get<std::string>();
    require("gen-data", stem + ".txt");
    if (with_state) require("gen-data", stem + ".state");
    out.push_back(fem::read_path(dir("gen-data") / stem, with_state));
  }
  if (out.empty()) throw DataError("no '" + tag_prefix + "' paths in the dataset; rerun stage gen-data");
  return out;
}

ae::GraphAutoencoder Pipeline::load_autoencoder(const mesh::PlasticityGraph& graph) const {
  require("train-ae", "autoencoder.json");
  return ae::GraphAutoencoder::from_json(num::read_json(dir("train-ae") / "autoencoder.json"), graph);
}

void Pipeline::gen_mesh() {
  const mesh::TriMesh m = cfg_.mesh.build();
  mesh::check_conforming(m);
  mesh::write_mesh(dir("gen-mesh") / "mesh.txt", m);
}

void Pipeline::gen_data() {
  const mesh::TriMesh m = load_mesh();
  num::Json idx = {{"paths", num::Json::array()}};
  for (const auto& prog : all_programs(cfg_.loading)) {
    const auto rec = fem::run_loading_path(m, cfg_.material, prog);
    const std::string stem = stem_of(prog);
    fem::write_path(dir("gen-data") / stem, rec);
    idx["paths"].push_back({{"id", prog.id},
                            {"tag", prog.tag},
                            {"stem", stem},
                            {"family", fem::to_string(prog.family)},
                            {"theta_deg", prog.theta_deg},
                            {"steps", prog.steps()}});
  }
  idx["samples_train"] = cfg_.loading.paths * cfg_.loading.steps;
  num::write_json(dir("gen-data") / "index.json", idx);
}

void Pipeline::train_ae() {
  const mesh::TriMesh m = load_mesh();
  const auto graph = mesh::build_dual_graph(m);
  const auto train = load_paths("train", false);
  const auto blind = load_paths("blind", false);
  const auto snaps = snapshots_of(train);
  ae::GraphAutoencoder model(graph, cfg_.autoencoder.d_enc, ae_model_seed(cfg_), cfg_.autoencoder.hidden);
  const auto hist = model.train(snaps, ae_train_config(cfg_, cfg_.autoencoder.epochs, log_every_));
  num::Json doc = model.to_json();
  doc["trained_on"] = num::file_checksum(dir("gen-data") / "index.json");
  num::write_json(dir("train-ae") / "autoencoder.json", doc);
  {
    std::string s = "epoch,loss\n";
    for (std::size_t e = 0; e < hist.loss.size(); ++e) s += std::to_string(e + 1) + ',' + fmt(hist.loss[e]) + '\n';
    write_text(dir("train-ae") / "loss.csv", s);
  }
  // Codes of every recorded step, plus the unloaded state as step 0.
  const Matrix zero = Matrix::Zero(graph.num_nodes(), 3);
  const Matrix z0 = model.encode(zero);
  std::string codes;
  auto line = [&](int id, int step, const Matrix& z) {
    codes += "ZETA " + std::to_string(id) + ' ' + std::to_string(step);
    for (Eigen::Index c = 0; c < z.cols(); ++c) codes += ' ' + fmt(z(0, c));
    codes += '\n';
  };
  bool preyield_constant = true;
  int preyield = 0;
  std::vector<Matrix> truth, recon;
  for (const auto* group : {&train, &blind}) {
    for (const auto& p : *group) {
      line(p.program.id, 0, z0);
      const Matrix z = model.encode_batch(p.plastic);
      for (int k = 0; k < p.num_steps(); ++k) {
        line(p.program.id, k + 1, z.row(k));
        if (p.plastic[k].cwiseAbs().maxCoeff() == 0.0) {
          ++preyield;
          preyield_constant = preyield_constant && model.encode(p.plastic[k]) == z0;
        }
        if (group == &blind) {
          truth.push_back(p.plastic[k]);
          recon.push_back(model.decode_plastic(model.encode(p.plastic[k])));
        }
      }
    }
  }
  write_text(dir("train-ae") / "codes.txt", codes);
  num::write_json(dir("train-ae") / "metrics.json",
                  {{"final_loss", model.loss(snaps)},
                   {"best_epoch", hist.best_epoch + 1},
                   {"heldout_r2", ae::plastic_r2(truth, recon)},
                   {"preyield_snapshots", preyield},
                   {"preyield_constant", preyield_constant}});
}

void Pipeline::train_nets() {
  const auto train = load_paths("train", false);
  require("train-ae", "codes.txt");
  const CodeTable codes = read_codes(dir("train-ae") / "codes.txt");
  const std::uint64_t s = stage_seed(cfg_.seed, "train-nets");
  const auto& n = cfg_.nets;
  const double vf = n.validation_fraction;
  num::Json metrics;
  auto save = [&](const std::string& name, num::Json doc, const nets::LossHistory& h) {
    doc["trained_on"] = num::file_checksum(dir("train-ae") / "codes.txt");
    num::write_json(dir("train-nets") / (name + ".json"), doc);
    nets::write_loss_csv(dir("train-nets") / (name + "_loss.csv"), h);
  };

  // Hyperelastic energy.
  {
    Lap lap(timings_, "hyperelastic");
    const auto samples = nets::elastic_samples(train);
    auto [tr, va] = nets::split_indices(static_cast<int>(samples.size()), vf, num::mix_seed(s, kSplitSalt));
    std::vector<nets::ElasticSample> st, sv;
    for (int i : tr) st.push_back(samples[i]);
    for (int i : va) sv.push_back(samples[i]);
    nets::HyperelasticNet net(num::mix_seed(s, 10), cfg_.material.E, cfg_.material.nu, n.width);
    nets::HyperelasticTrainOptions opt;
    opt.stress_weight = n.stress_weight;
    opt.stiffness_weight = n.stiffness_weight;
    opt.stiffness_reference = cfg_.material;
    const auto h = net.train(st, sv, net_config(n.hyperelastic, 0.0, num::mix_seed(s, 11), log_every_), opt);
    const auto& check = sv.empty() ? st : sv;
    Matrix truth(static_cast<Eigen::Index>(check.size()), 3), pred(static_cast<Eigen::Index>(check.size()), 3);
    for (std::size_t i = 0; i < check.size(); ++i) {
      fem::Vec3 sig;
      double s33 = 0.0;
      net.stress(check[i].eps_e, check[i].eps_e33, sig, s33);
      truth.row(static_cast<Eigen::Index>(i)) = check[i].sigma.transpose();
      pred.row(static_cast<Eigen::Index>(i)) = sig.transpose();
    }
    metrics["hyperelastic_stress_r2"] = nets::r2_pooled(truth, pred);
    save("hyperelastic", net.to_json(), h);
  }

  // Yield level set.
  {
    Lap lap(timings_, "yield");
    nets::YieldLabelConfig lc;
    lc.bins = n.yield_bins;
    lc.collocation_per_bin = n.collocation_per_bin;
    lc.margin = n.yield_margin;
    lc.seed = num::mix_seed(s, kLabelSalt);
    const auto labels = nets::build_yield_labels(train, lc);
    nets::YieldNet net(num::mix_seed(s, 20), labels.box, n.width);
    const auto h = net.train(labels, net_config(n.yield, vf, num::mix_seed(s, 21), log_every_), n.eikonal_weight);
    std::vector<double> levels;
    for (const auto& b : labels.bins) levels.push_back(b.xi_center);
    const Matrix xn = labels.box.normalization().apply(labels.x);
    const Matrix f = net.predict_normalized(xn);
    double sum = 0.0, worst = 0.0;
    int count = 0;
    for (int i = 0; i < labels.size(); ++i) {
      if (!labels.on_surface[i]) continue;
      sum += std::abs(f(i, 0));
      worst = std::max(worst, std::abs(f(i, 0)));
      ++count;
    }
    metrics["yield_eikonal_residual"] = net.eikonal_residual(levels, 30);
    metrics["yield_on_surface_mean_abs"] = count > 0 ? sum / count : 0.0;
    metrics["yield_on_surface_max_abs"] = worst;
    metrics["yield_label_warnings"] = labels.warnings;
    save("yield", net.to_json(), h);
  }

  // Kinetic law and flow direction from the autoencoder codes.
  const int d = cfg_.autoencoder.d_enc;
  std::vector<Matrix> histories;
  std::vector<Matrix> zrows;
  nets::FlowData flow;
  Matrix zeta0;
  for (const auto& p : train) {
    auto it = codes.find({p.program.id, 0});
    if (it == codes.end()) throw ArtifactError("codes file lacks path " + std::to_string(p.program.id) + "; rerun stage train-ae");
    zeta0 = it->second;
    if (zeta0.cols() != d) throw ArtifactError("codes have width " + std::to_string(zeta0.cols()) + ", config D_enc is " + std::to_string(d) + "; rerun stage train-ae");
    const Matrix z = path_codes(codes, p);
    for (auto& h : nets::plastic_histories(p, n.history_length)) histories.push_back(std::move(h));
    zrows.push_back(z);
    nets::append(flow, nets::flow_data(p, z, zeta0));
  }
  Matrix zeta(static_cast<Eigen::Index>(histories.size()), d);
  {
    Eigen::Index r = 0;
    for (const auto& z : zrows) {
      zeta.middleRows(r, z.rows()) = z;
      r += z.rows();
    }
  }
  {
    Lap lap(timings_, "kinetic");
    nets::KineticNet net(num::mix_seed(s, 30), d, n.history_length);
    const auto cfg = net_config(n.kinetic, vf, num::mix_seed(s, 31), log_every_);
    const auto h = net.train(histories, zeta, cfg);
    auto [tr, va] = nets::split_indices(static_cast<int>(histories.size()), vf, num::mix_seed(cfg.seed, 29));
    const auto& rows = va.empty() ? tr : va;
    std::vector<Matrix> hv;
    for (int i : rows) hv.push_back(histories[i]);
    metrics["kinetic_r2"] = nets::r2_pooled(nets::take_rows(zeta, rows), net.predict_batch(hv));
    save("kinetic", net.to_json(), h);
  }
  {
    Lap lap(timings_, "flow");
    nets::FlowNet net(num::mix_seed(s, 40), d);
    const auto cfg = net_config(n.flow, vf, num::mix_seed(s, 41), log_every_);
    const auto h = net.train(flow, cfg);
    auto [tr, va] = nets::split_indices(static_cast<int>(flow.dzeta.rows()), vf, num::mix_seed(cfg.seed, 31));
    const auto& rows = va.empty() ? tr : va;
    metrics["flow_r2"] = nets::r2_pooled(nets::take_rows(flow.target, rows), net.predict(nets::take_rows(flow.dzeta, rows)));
    metrics["flow_samples"] = flow.dzeta.rows();
    save("flow", net.to_json(), h);
  }
  num::write_json(dir("train-nets") / "metrics.json", metrics);
}

void Pipeline::train_baseline() {
  const mesh::TriMesh m = load_mesh();
  const auto train = load_paths("train", true);
  const auto blind = load_paths("blind", false);
  const std::uint64_t s = stage_seed(cfg_.seed, "train-baseline");
  const auto& b = cfg_.baseline;
  std::vector<baselines::Series> mono;
  for (std::size_t i = 0; i < train.size(); ++i) mono.push_back(baselines::series_from_path(train[i], static_cast<int>(i)));
  baselines::AugmentConfig ac;
  ac.seed = num::mix_seed(s, kLabelSalt);
  ac.multiplier = b.multiplier;
  ac.depth_min = b.depth_min;
  ac.depth_max = b.depth_max;
  ac.length_min = b.length_min;
  ac.length_max = b.length_max;
  ac.max_excursions = b.max_excursions;
  const auto aug = [&] {
    Lap lap(timings_, "augment");
    return baselines::augment_dataset(train, m, cfg_.material, ac);
  }();

  NetSpec spec{b.epochs, b.batch, b.learning_rate};
  num::Json metrics = {{"source_samples", aug.source_samples}, {"augmented_samples", aug.samples()}};
  for (const bool augmented : {false, true}) {
    const std::string name = augmented ? "baseline_augmented" : "baseline";
    Lap lap(timings_, name);
    baselines::BaselineGru model(num::mix_seed(s, augmented ? 20 : 10), b.window);
    const auto h = model.train(augmented ? aug.series : mono,
                               net_config(spec, cfg_.nets.validation_fraction, num::mix_seed(s, augmented ? 21 : 11), log_every_));
    num::Json doc = model.to_json();
    doc["trained_on"] = num::file_checksum(dir("gen-data") / "index.json");
    num::write_json(dir("train-baseline") / (name + ".json"), doc);
    nets::write_loss_csv(dir("train-baseline") / (name + "_loss.csv"), h);
    for (const auto& p : blind) {
      const Matrix pred = model.predict_series(baselines::series_from_path(p));
      write_text(dir("train-baseline") / (name + "_" + stem_of(p.program) + ".csv"), pq_csv(pred));
    }
  }
  num::write_json(dir("train-baseline") / "metrics.json", metrics);
}

void Pipeline::simulate() {
  const auto blind = load_paths("blind", false);
  for (const auto* f : {"hyperelastic.json", "yield.json", "kinetic.json", "flow.json"}) require("train-nets", f);
  rm::ReturnMapOptions opts;
  opts.sigma_y0 = cfg_.material.sigma_y0;
  opts.tolerance = cfg_.return_map.tolerance;
  opts.max_newton = cfg_.return_map.max_newton;
  opts.max_passes = cfg_.return_map.max_passes;
  const rm::ReturnMap map(rm::ModelSet::load(dir("train-nets")), opts);

  num::Json paths = num::Json::array();
  for (const auto& p : blind) {
    std::vector<fem::Vec3> eps;
    for (const auto& st : p.steps) eps.push_back(st.eps);
    const auto inc = rm::increments_of(eps);
    const std::string stem = stem_of(p.program);
    {
      std::string prog = "# strain increments (eps11 eps22 eps12) of " + stem + "\n";
      for (const auto& d : inc) prog += fmt(d(0)) + ' ' + fmt(d(1)) + ' ' + fmt(d(2)) + '\n';
      write_text(dir("simulate") / ("program_" + stem + ".txt"), prog);
    }
    num::Json entry = {{"id", p.program.id}, {"tag", p.program.tag}, {"stem", stem}};
    std::vector<rm::StepRecord> rec;
    try {
      rec = map.simulate(inc);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError(stem + ": " + e.what());
    }
    rm::write_prediction_csv(dir("simulate") / ("prediction_" + stem + ".csv"), rec);
    const Matrix truth = pq_of(p), pred = pq_of(rec);
    entry["rmse_q"] = baselines::rmse_q(truth, pred);
    entry["peak_q"] = baselines::peak_q(truth);
    int kkt = 0, extrapolated = 0, restarts = 0, kinks = 0;
    for (const auto& r : rec) {
      const bool ok = r.plastic ? (std::abs(r.f) <= map.tol_f() && r.dlambda > 0.0)
                                : (r.f <= map.tol_f() && r.dlambda == 0.0);
      kkt += ok ? 0 : 1;
      extrapolated += r.extrapolated ? 1 : 0;
      restarts += r.associative_restart ? 1 : 0;
      kinks += r.kink ? 1 : 0;
    }
    entry["kkt_violations"] = kkt;
    entry["extrapolated_steps"] = extrapolated;
    entry["associative_restarts"] = restarts;
    entry["kink_steps"] = kinks;
    bool unchanged = true;
    for (const auto& [first, last] : p.program.excursions) {
      const auto& before = rec[first - 2];
      for (int k = first - 1; k <= last - 1; ++k) {
        unchanged = unchanged && !rec[k].plastic && rec[k].eps_p == before.eps_p && rec[k].zeta == before.zeta;
      }
    }
    entry["excursions"] = p.program.excursions.size();
    entry["excursions_unchanged"] = unchanged;
    const auto& fin = rec.back();
    entry["final_eps_p"] = {fin.eps_p(0), fin.eps_p(1), fin.eps_p(2)};
    entry["final_zeta"] = std::vector<double>(fin.zeta.data(), fin.zeta.data() + fin.zeta.size());
    entry["final_xi"] = fin.xi;
    paths.push_back(entry);
  }
  num::write_json(dir("simulate") / "metrics.json", {{"paths", paths}, {"tol_f", map.tol_f()}});
}

void Pipeline::decode() {
  const mesh::TriMesh m = load_mesh();
  const auto graph = mesh::build_dual_graph(m);
  const auto model = load_autoencoder(graph);
  require("simulate", "metrics.json");
  const num::Json sim = num::read_json(dir("simulate") / "metrics.json");
  num::Json paths = num::Json::array();
  for (const auto& e : sim.at("paths")) {
    if (e.at("tag").get<std::string>() != "blind-monotonic") continue;
    const auto z = e.at("final_zeta").get<std::vector<double>>();
    Matrix zeta(1, static_cast<Eigen::Index>(z.size()));
    for (std::size_t i = 0; i < z.size(); ++i) zeta(0, static_cast<Eigen::Index>(i)) = z[i];
    const auto decoded = rm::decode_current(zeta, model, graph);
    std::vector<fem::Vec3> field;
    std::string nodes;
    for (int i = 0; i < graph.num_nodes(); ++i) {
      const fem::Vec3 ep(decoded.features(i, 2), decoded.features(i, 3), decoded.features(i, 4));
      field.push_back(ep);
      nodes += "NODE " + std::to_string(i) + ' ' + fmt(ep(0)) + ' ' + fmt(ep(1)) + ' ' + fmt(ep(2)) + '\n';
    }
    const std::string stem = e.at("stem").get<std::string>();
    write_text(dir("decode") / ("decoded_" + stem + ".txt"), nodes);
    const fem::Vec3 avg = fem::volume_average(field, m);
    const auto ep = e.at("final_eps_p").get<std::vector<double>>();
    const fem::Vec3 macro(ep[0], ep[1], ep[2]);
    const double rel = voigt_norm(avg - macro) / std::max(voigt_norm(macro), 1e-300);
    paths.push_back({{"stem", stem},
                     {"decoded_average", {avg(0), avg(1), avg(2)}},
                     {"macro_eps_p", ep},
                     {"relative_error", rel}});
  }
  num::write_json(dir("decode") / "metrics.json", {{"paths", paths}});
}

void Pipeline::study() {
  for (const std::string kind : {"enc-size", "mesh-size"}) {
    Lap lap(timings_, kind);
    std::vector<StudyRow> rows;
    // The variant matching the main model reuses its loss: the seeds are shared.
    if (kind == "enc-size" && cfg_.study.epochs == cfg_.autoencoder.epochs) {
      require("train-ae", "metrics.json");
      const double main_loss = num::read_json(dir("train-ae") / "metrics.json").at("final_loss").get<double>();
      RunConfig rest = cfg_;
      rest.study.enc_sizes.clear();
      for (int d : cfg_.study.enc_sizes) {
        if (d != cfg_.autoencoder.d_enc) rest.study.enc_sizes.push_back(d);
      }
      const auto trained = sensitivity_study(kind, rest, log_every_);
      for (int d : cfg_.study.enc_sizes) {
        if (d == cfg_.autoencoder.d_enc) {
          rows.push_back({"D=" + std::to_string(d), cfg_.mesh.elements(), d, main_loss});
        } else {
          for (const auto& r : trained) {
            if (r.d_enc == d) rows.push_back(r);
          }
        }
      }
    } else {
      rows = sensitivity_study(kind, cfg_, log_every_);
    }
    write_study_csv(dir("study") / (kind == "enc-size" ? "enc_size.csv" : "mesh_size.csv"), rows);
  }
}

std::vector<StudyRow> sensitivity_study(const std::string& kind, const RunConfig& cfg, int log_every) {
  std::vector<StudyRow> rows;
  const auto programs = fem::training_programs(cfg.loading);
  const auto tc = ae_train_config(cfg, cfg.study.epochs, log_every);
  if (kind == "enc-size") {
    const mesh::TriMesh m = cfg.mesh.build();
    const auto graph = mesh::build_dual_graph(m);
    const auto snaps = snapshots_of(generate(m, cfg.material, programs));
    for (int d : cfg.study.enc_sizes) {
      ae::GraphAutoencoder model(graph, d, ae_model_seed(cfg), cfg.autoencoder.hidden);
      model.train(snaps, tc);
      rows.push_back({"D=" + std::to_string(d), m.num_elements(), d, model.loss(snaps)});
    }
  } else if (kind == "mesh-size") {
    for (int r : cfg.study.mesh_refinements) {
      MeshSpec spec = cfg.study.mesh_base;
      spec.refinements = r;
      const mesh::TriMesh m = spec.build();
      const auto graph = mesh::build_dual_graph(m);
      const auto snaps = snapshots_of(generate(m, cfg.material, programs));
      ae::GraphAutoencoder model(graph, cfg.autoencoder.d_enc, ae_model_seed(cfg), cfg.autoencoder.hidden);
      model.train(snaps, tc);
      rows.push_back({"N=" + std::to_string(m.num_elements()), m.num_elements(), cfg.autoencoder.d_enc, model.loss(snaps)});
    }
  } else {
    throw ConfigError("unknown study '" + kind + "' (expected enc-size or mesh-size)");
  }
  return rows;
}

void write_study_csv(const fs::path& path, const std::vector<StudyRow>& rows) {
  std::string s = "variant,elements,d_enc,final_loss\n";
  for (const auto& r : rows) {
    s += r.variant + ',' + std::to_string(r.elements) + ',' + std::to_string(r.d_enc) + ',' + fmt(r.final_loss) + '\n';
  }
  write_text(path, s);
}

Comparison Pipeline::compare() const {
  const auto blind = load_paths("blind", false);
  Comparison out;
  std::vector<Matrix> truth_c, rm_c, b_c, ba_c;
  for (const auto& p : blind) {
    const std::string stem = stem_of(p.program);
    require("simulate", "prediction_" + stem + ".csv");
    require("train-baseline", "baseline_" + stem + ".csv");
    require("train-baseline", "baseline_augmented_" + stem + ".csv");
    const Matrix truth = pq_of(p);
    const Matrix rm_pred = read_pq_csv(dir("simulate") / ("prediction_" + stem + ".csv"));
    const Matrix b = read_pq_csv(dir("train-baseline") / ("baseline_" + stem + ".csv"));
    const Matrix ba = read_pq_csv(dir("train-baseline") / ("baseline_augmented_" + stem + ".csv"));
    baselines::CompareRow row{p.program.id, p.program.tag, baselines::peak_q(truth), baselines::rmse_q(truth, rm_pred),
                              baselines::rmse_q(truth, b), baselines::rmse_q(truth, ba)};
    out.rows.push_back(row);
    if (p.program.tag == "blind-cyclic") {
      truth_c.push_back(truth);
      rm_c.push_back(rm_pred);
      b_c.push_back(b);
      ba_c.push_back(ba);
    } else {
      out.monotonic_baseline_ratio = std::max(out.monotonic_baseline_ratio, row.rmse_baseline / row.peak_q);
    }
  }
  out.cyclic_return_map = pooled_rmse(truth_c, rm_c);
  out.cyclic_baseline = pooled_rmse(truth_c, b_c);
  out.cyclic_baseline_augmented = pooled_rmse(truth_c, ba_c);
  return out;
}

const std::vector<std::string>& report_metrics() {
  static const std::vector<std::string> names{
      "ae_heldout_r2",
      "ae_final_loss",
      "ae_preyield_constant",
      "enc_loss_ratio_2_16",
      "enc_loss_ratio_16_32",
      "mesh_loss_max_increase",
      "hyperelastic_stress_r2",
      "yield_eikonal_residual",
      "yield_on_surface_mean_abs",
      "yield_on_surface_max_abs",
      "kinetic_r2",
      "flow_r2",
      "blind_monotonic_max_rmse_ratio",
      "blind_cyclic_max_rmse_ratio",
      "cyclic_excursions_unchanged",
      "kkt_violations",
      "decode_max_relative_error",
      "cyclic_rmse_return_map",
      "cyclic_rmse_baseline",
      "cyclic_rmse_baseline_augmented",
      "baseline_monotonic_max_rmse_ratio"};
  return names;
}

void Pipeline::report() {
  for (const auto& [stage, file] : std::vector<std::pair<std::string, std::string>>{
           {"train-ae", "metrics.json"},
           {"train-nets", "metrics.json"},
           {"simulate", "metrics.json"},
           {"decode", "metrics.json"},
           {"study", "enc_size.csv"},
           {"study", "mesh_size.csv"}}) {
    require(stage, file);
  }
  for (const auto* f : {"hyperelastic.json", "yield.json", "kinetic.json", "flow.json"}) require("train-nets", f);
  const num::Json ae_m = num::read_json(dir("train-ae") / "metrics.json");
  const num::Json nets_m = num::read_json(dir("train-nets") / "metrics.json");
  const num::Json sim = num::read_json(dir("simulate") / "metrics.json");
  const num::Json dec = num::read_json(dir("decode") / "metrics.json");

  std::map<std::string, double> v;
  v["ae_heldout_r2"] = metric(ae_m, "heldout_r2", "train-ae").get<double>();
  v["ae_final_loss"] = metric(ae_m, "final_loss", "train-ae").get<double>();
  v["ae_preyield_constant"] = metric(ae_m, "preyield_constant", "train-ae").get<bool>() ? 1.0 : 0.0;

  auto read_study = [&](const std::string& file) {
    std::ifstream in(dir("study") / file);
    std::string line;
    std::getline(in, line);
    std::vector<StudyRow> rows;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      StudyRow r;
      std::string a, b, c, d;
      std::getline(ls, a, ',');
      std::getline(ls, b, ',');
      std::getline(ls, c, ',');
      std::getline(ls, d, ',');
      rows.push_back({a, std::stoi(b), std::stoi(c), std::stod(d)});
    }
    return rows;
  };
  const auto enc = read_study("enc_size.csv");
  auto enc_loss = [&](int d) {
    for (const auto& r : enc) {
      if (r.d_enc == d) return r.final_loss;
    }
    return std::numeric_limits<double>::quiet_NaN();
  };
  v["enc_loss_ratio_2_16"] = enc_loss(2) / enc_loss(16);
  v["enc_loss_ratio_16_32"] = enc_loss(16) / enc_loss(32);
  const auto mesh_rows = read_study("mesh_size.csv");
  double worst_increase = 0.0;
  for (std::size_t i = 1; i < mesh_rows.size(); ++i) {
    worst_increase = std::max(worst_increase, mesh_rows[i].final_loss / mesh_rows[i - 1].final_loss - 1.0);
  }
  v["mesh_loss_max_increase"] = worst_increase;
  for (const auto* k : {"hyperelastic_stress_r2", "yield_eikonal_residual", "yield_on_surface_mean_abs",
                        "yield_on_surface_max_abs", "kinetic_r2", "flow_r2"}) {
    v[k] = metric(nets_m, k, "train-nets").get<double>();
  }

  double mono_ratio = 0.0, cyc_ratio = 0.0, kkt = 0.0;
  bool unchanged = true;
  for (const auto& e : sim.at("paths")) {
    const double ratio = e.at("rmse_q").get<double>() / e.at("peak_q").get<double>();
    if (e.at("tag") == "blind-monotonic") mono_ratio = std::max(mono_ratio, ratio);
    if (e.at("tag") == "blind-cyclic") {
      cyc_ratio = std::max(cyc_ratio, ratio);
      unchanged = unchanged && e.at("excursions_unchanged").get<bool>();
    }
    kkt += e.at("kkt_violations").get<double>();
  }
  v["blind_monotonic_max_rmse_ratio"] = mono_ratio;
  v["blind_cyclic_max_rmse_ratio"] = cyc_ratio;
  v["cyclic_excursions_unchanged"] = unchanged ? 1.0 : 0.0;
  v["kkt_violations"] = kkt;
  double dec_worst = 0.0;
  for (const auto& e : dec.at("paths")) dec_worst = std::max(dec_worst, e.at("relative_error").get<double>());
  v["decode_max_relative_error"] = dec_worst;

  const Comparison cmp = compare();
  baselines::write_compare_csv(dir("report") / "compare.csv", cmp.rows);
  v["cyclic_rmse_return_map"] = cmp.cyclic_return_map;
  v["cyclic_rmse_baseline"] = cmp.cyclic_baseline;
  v["cyclic_rmse_baseline_augmented"] = cmp.cyclic_baseline_augmented;
  v["baseline_monotonic_max_rmse_ratio"] = cmp.monotonic_baseline_ratio;

  std::string header, values;
  for (const auto& name : report_metrics()) {
    header += (header.empty() ? "" : ",") + name;
    values += (values.empty() ? "" : ",") + fmt(v.at(name));
  }
  write_text(dir("report") / "report.csv", header + '\n' + values + '\n');
}

}  // namespace plastigraph::pipeline
