#pragma once

#include <array>
#include <memory>
#include <vector>

#include "plastigraph/mesh/mesh.hpp"
#include "plastigraph/numcore/matrix.hpp"
#include "plastigraph/numcore/tape.hpp"

namespace plastigraph::mesh {

inline constexpr int kNodeFeatures = 5;  // x, y, ep11, ep22, ep12 (tensor shear)

/// Integration-point dual graph with node features.
struct PlasticityGraph {
  std::vector<std::array<int, 2>> edges;  // sorted, i < j
  num::Matrix features;                   // N x 5

  int num_nodes() const { return static_cast<int>(features.rows()); }
  std::vector<int> degrees() const;
  num::Adjacency adjacency(double eps = 0.0) const;
  /// Dense symmetric 0/1 view.
  num::Matrix dense_adjacency() const;
};

/// One node per element at its centroid; an edge for every shared mesh edge.
PlasticityGraph build_dual_graph(const TriMesh& mesh);

/// Replaces the plastic columns with `plastic` (N x 3, tensor shear).
PlasticityGraph assemble_features(const PlasticityGraph& graph, const num::Matrix& plastic);

/// sqrt(2/3) * ||ep|| per node, with the out-of-plane component -(ep11 + ep22).
std::vector<double> equivalent_plastic_strain(const num::Matrix& plastic);

}  // namespace plastigraph::mesh
