#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "plastigraph/autoencoder/autoencoder.hpp"
#include "plastigraph/baselines/baseline.hpp"
#include "plastigraph/fem/dataset.hpp"
#include "plastigraph/pipeline/config.hpp"

namespace plastigraph::pipeline {

namespace fs = std::filesystem;

/// Stage order of a full run. `study` runs both sensitivity studies.
const std::vector<std::string>& stage_names();
bool is_stage(const std::string& name);

/// Per-stage seed: splitmix64(master ^ FNV-1a(stage name)).
std::uint64_t stage_seed(std::uint64_t master, const std::string& stage);

/// Blind-path RMSE(q) of the return map and both baselines; cyclic values are
/// pooled over all steps of all cyclic paths.
struct Comparison {
  std::vector<baselines::CompareRow> rows;
  double cyclic_return_map = 0.0;
  double cyclic_baseline = 0.0;
  double cyclic_baseline_augmented = 0.0;
  double monotonic_baseline_ratio = 0.0;  // worst RMSE(q) / peak q of the monotonic-trained baseline
};

struct StageResult {
  std::string stage;
  double seconds = 0.0;
  std::map<std::string, double> timings;  // named parts of the stage
};

/// Runs stages against one output directory. Every stage writes its outputs
/// plus manifest.json and the resolved config into `<out>/<stage>/`.
class Pipeline {
 public:
  Pipeline(RunConfig cfg, fs::path out, int log_every = 0);

  const RunConfig& config() const { return cfg_; }
  const fs::path& out() const { return out_; }

  StageResult run(const std::string& stage);
  std::vector<StageResult> run_all();

  fs::path dir(const std::string& stage) const { return out_ / stage; }

  /// Loaded artifacts; each checks the upstream manifest and names the stage
  /// to rerun when something is missing or changed.
  mesh::TriMesh load_mesh() const;
  std::vector<fem::PathRecord> load_paths(const std::string& tag_prefix, bool with_state) const;
  ae::GraphAutoencoder load_autoencoder(const mesh::PlasticityGraph& graph) const;
  /// Needs simulate and train-baseline outputs.
  Comparison compare() const;

 private:
  void gen_mesh();
  void gen_data();
  void train_ae();
  void train_nets();
  void train_baseline();
  void simulate();
  void decode();
  void study();
  void report();

  void require(const std::string& stage, const std::string& file) const;
  void write_manifest(const std::string& stage, const std::vector<std::string>& upstream, double seconds) const;

  RunConfig cfg_;
  fs::path out_;
  int log_every_;
  std::map<std::string, double> timings_;
};

struct StudyRow {
  std::string variant;
  int elements = 0;
  int d_enc = 0;
  double final_loss = 0.0;
};

/// Trains one autoencoder per variant with shared seeds and returns the final
/// training losses. kind is "enc-size" or "mesh-size".
std::vector<StudyRow> sensitivity_study(const std::string& kind, const RunConfig& cfg, int log_every = 0);
void write_study_csv(const fs::path& path, const std::vector<StudyRow>& rows);

/// Training snapshots (one per recorded step) of a set of paths.
std::vector<num::Matrix> snapshots_of(const std::vector<fem::PathRecord>& paths);

/// Report metric names, in column order.
const std::vector<std::string>& report_metrics();

}  // namespace plastigraph::pipeline
