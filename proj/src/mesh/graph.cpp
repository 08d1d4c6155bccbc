#include "plastigraph/mesh/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "plastigraph/error.hpp"

namespace plastigraph::mesh {

std::vector<int> PlasticityGraph::degrees() const {
  std::vector<int> d(num_nodes(), 0);
  for (const auto& e : edges) {
    ++d[e[0]];
    ++d[e[1]];
  }
  return d;
}

num::Adjacency PlasticityGraph::adjacency(double eps) const {
  return num::Adjacency::from_edges(num_nodes(), edges, eps);
}

num::Matrix PlasticityGraph::dense_adjacency() const {
  num::Matrix a = num::Matrix::Zero(num_nodes(), num_nodes());
  for (const auto& e : edges) a(e[0], e[1]) = a(e[1], e[0]) = 1.0;
  return a;
}

PlasticityGraph build_dual_graph(const TriMesh& mesh) {
  check_conforming(mesh);
  std::map<std::pair<int, int>, std::vector<int>> owners;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& t = mesh.elements[e];
    for (int k = 0; k < 3; ++k) owners[std::minmax(t[k], t[(k + 1) % 3])].push_back(e);
  }
  PlasticityGraph g;
  for (const auto& [edge, els] : owners) {
    if (els.size() == 2) g.edges.push_back({std::min(els[0], els[1]), std::max(els[0], els[1])});
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.features = num::Matrix::Zero(mesh.num_elements(), kNodeFeatures);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Vertex c = mesh.centroid(e);
    g.features(e, 0) = c.x;
    g.features(e, 1) = c.y;
  }
  return g;
}

PlasticityGraph assemble_features(const PlasticityGraph& graph, const num::Matrix& plastic) {
  if (plastic.rows() != graph.num_nodes() || plastic.cols() != 3) {
    throw ShapeError("assemble_features: expected " + std::to_string(graph.num_nodes()) +
                     " x 3 plastic strains");
  }
  PlasticityGraph out = graph;
  out.features.rightCols(3) = plastic;
  return out;
}

std::vector<double> equivalent_plastic_strain(const num::Matrix& plastic) {
  if (plastic.cols() != 3) throw ShapeError("equivalent_plastic_strain: expected 3 columns");
  std::vector<double> out(plastic.rows());
  for (Eigen::Index r = 0; r < plastic.rows(); ++r) {
    const double a = plastic(r, 0), b = plastic(r, 1), s = plastic(r, 2);
    const double c = -(a + b);
    out[r] = std::sqrt(2.0 / 3.0 * (a * a + b * b + c * c + 2.0 * s * s));
  }
  return out;
}

}  // namespace plastigraph::mesh
