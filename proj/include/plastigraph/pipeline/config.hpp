#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "plastigraph/fem/dataset.hpp"
#include "plastigraph/fem/material.hpp"
#include "plastigraph/mesh/mesh.hpp"
#include "plastigraph/numcore/serialize.hpp"

namespace plastigraph::pipeline {

using num::Json;

struct MeshSpec {
  int nx = 6;
  int ny = 6;
  int refinements = 1;
  double side = 1.0;
  std::vector<mesh::Inclusion> inclusions{{0.3, 0.35, 0.15, 0.6}, {0.7, 0.65, 0.12, 0.7}};

  mesh::TriMesh build() const;
  int elements() const;
};

struct AutoencoderSpec {
  int d_enc = 16;
  int hidden = 64;
  int epochs = 500;
  int batch = 20;
  double learning_rate = 1e-3;
};

struct NetSpec {
  int epochs = 300;
  int batch = 100;
  double learning_rate = 1e-3;
};

struct NetsSpec {
  NetSpec hyperelastic;
  NetSpec yield{1000, 100, 1e-3};
  NetSpec kinetic{300, 128, 1e-3};
  NetSpec flow;
  double validation_fraction = 0.2;
  int width = 100;
  double stress_weight = 1.0;
  double stiffness_weight = 0.0;
  double eikonal_weight = 1.0;
  int yield_bins = 24;
  int collocation_per_bin = 200;
  double yield_margin = 0.2;
  int history_length = 4;
};

struct BaselineSpec {
  int epochs = 300;
  int batch = 128;
  double learning_rate = 1e-3;
  int window = 30;
  double multiplier = 3.24;
  double depth_min = 0.2;
  double depth_max = 0.9;
  int length_min = 5;
  int length_max = 30;
  int max_excursions = 3;
};

struct ReturnMapSpec {
  double tolerance = 1e-6;
  int max_newton = 50;
  int max_passes = 10;
};

struct StudySpec {
  std::vector<int> enc_sizes{2, 16, 32};
  MeshSpec mesh_base{6, 3, 0, 1.0, {{0.3, 0.35, 0.15, 0.6}, {0.7, 0.65, 0.12, 0.7}}};
  std::vector<int> mesh_refinements{0, 1, 2};  // 36, 144, 576 elements
  int epochs = 500;
};

/// Everything a run needs. Unknown keys are rejected when parsing.
struct RunConfig {
  std::uint64_t seed = 2024;
  std::string out = "run";
  MeshSpec mesh;
  fem::MaterialParams material;
  fem::LoadingPlan loading{20, 50, 0.15, 3, 3, 4, {0.4, 0.6, 0.8}};
  AutoencoderSpec autoencoder;
  NetsSpec nets;
  BaselineSpec baseline;
  ReturnMapSpec return_map;
  StudySpec study;

  /// 288-element mesh, 20 paths x 50 steps, 500 AE / 300 net epochs (1000
  /// for the yield net).
  static RunConfig desk();
  /// Desk config with the published data and training sizes restored.
  static RunConfig paper_scale();
  void apply_paper_scale();

  void validate() const;
  Json to_json() const;
  /// Keys missing from `j` keep the values of `base`.
  static RunConfig from_json(const Json& j, const RunConfig& base = desk());
};

/// Reads a config file over the desk defaults; `paper_scale` then restores the
/// published sizes.
RunConfig load_config(const std::filesystem::path& path, bool paper_scale = false);

/// JSON schema describing the accepted keys.
Json config_schema();

}  // namespace plastigraph::pipeline
