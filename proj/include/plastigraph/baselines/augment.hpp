#pragma once

#include <cstdint>
#include <vector>

#include "plastigraph/fem/dataset.hpp"
#include "plastigraph/numcore/matrix.hpp"

namespace plastigraph::baselines {

using fem::Vec3;
using num::Matrix;

/// Macroscopic strain/stress series of one loading path. Row k is a recorded
/// step; the unloaded origin is implicit and serves as the window padding.
struct Series {
  int source = -1;                  // index of the source path
  std::vector<Vec3> eps;            // total strain per row
  Matrix pq;                        // rows x 2
  std::vector<int> anchor;          // source step index each row is elastic from (-1: recorded)
  std::vector<bool> inserted;       // row belongs to an inserted excursion

  int rows() const { return static_cast<int>(eps.size()); }
};

Series series_from_path(const fem::PathRecord& path, int source = -1);

struct AugmentConfig {
  std::uint64_t seed = 0;
  double multiplier = 3.24;
  double depth_min = 0.2;  // fraction of the elastic range
  double depth_max = 0.9;
  int length_min = 5;      // steps per excursion, unload plus reload
  int length_max = 30;
  int max_excursions = 3;  // per augmented copy
};

struct AugmentedDataset {
  std::vector<Series> series;  // sources first, then augmented copies
  int source_samples = 0;

  int samples() const;
};

/// Largest strain distance along unit direction `dir` from recorded step
/// `index` that keeps every element inside its yield surface. Element stresses
/// shift uniformly because the elastic moduli are homogeneous.
double elastic_range(const fem::PathRecord& path, int index, const Vec3& dir,
                     const mesh::TriMesh& mesh, const fem::MaterialParams& mat);

/// Largest element yield value at a strain offset from recorded step `index`.
double max_element_yield(const fem::PathRecord& path, int index, const Vec3& offset,
                         const mesh::TriMesh& mesh, const fem::MaterialParams& mat);

/// Copies of the source paths with elastic unload/reload excursions inserted at
/// plastic steps, until the sample count reaches multiplier x source count.
/// Sources need element states (the .state files).
AugmentedDataset augment_dataset(const std::vector<fem::PathRecord>& paths, const mesh::TriMesh& mesh,
                                 const fem::MaterialParams& mat, const AugmentConfig& cfg);

}  // namespace plastigraph::baselines
