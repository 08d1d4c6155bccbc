#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace plastigraph::mesh {

struct Vertex {
  double x = 0.0;
  double y = 0.0;
};

/// Circular region that scales the yield stress of every element whose
/// centroid falls inside it.
struct Inclusion {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
  double scale = 1.0;
};

/// Linear triangle mesh; element vertex ids are counter-clockwise.
struct TriMesh {
  std::vector<Vertex> vertices;
  std::vector<std::array<int, 3>> elements;
  std::vector<double> yield_scale;  // one per element
  double side = 1.0;
  std::string generator;  // free-form description for the META section

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }

  double signed_area(int e) const;
  Vertex centroid(int e) const;
  double total_area() const;
  /// Vertices lying on the boundary of the square [0, side]^2.
  std::vector<int> boundary_vertices(double tol = 1e-12) const;
};

/// 2 * nx * ny triangles tiling [0, L]^2. Vertex id = j * (nx + 1) + i.
TriMesh structured_mesh(int nx, int ny, double side);

/// Uniform 4-way subdivision through edge midpoints.
TriMesh refine(const TriMesh& mesh);

/// Sets yield_scale per element from the inclusions (last match wins).
void apply_inclusions(TriMesh& mesh, const std::vector<Inclusion>& inclusions);

/// Throws StructuralError on a non-positive element or a non-conforming edge.
void check_conforming(const TriMesh& mesh);

void write_mesh(const std::filesystem::path& path, const TriMesh& mesh);
TriMesh read_mesh(const std::filesystem::path& path);

}  // namespace plastigraph::mesh
