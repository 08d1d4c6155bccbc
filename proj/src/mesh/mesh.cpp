#include "plastigraph/mesh/mesh.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "plastigraph/error.hpp"

namespace plastigraph::mesh {

double TriMesh::signed_area(int e) const {
  const auto& t = elements.at(e);
  const Vertex& a = vertices[t[0]];
  const Vertex& b = vertices[t[1]];
  const Vertex& c = vertices[t[2]];
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

Vertex TriMesh::centroid(int e) const {
  const auto& t = elements.at(e);
  return {(vertices[t[0]].x + vertices[t[1]].x + vertices[t[2]].x) / 3.0,
          (vertices[t[0]].y + vertices[t[1]].y + vertices[t[2]].y) / 3.0};
}

double TriMesh::total_area() const {
  double a = 0.0;
  for (int e = 0; e < num_elements(); ++e) a += signed_area(e);
  return a;
}

std::vector<int> TriMesh::boundary_vertices(double tol) const {
  std::vector<int> out;
  const double t = tol * side;
  for (int v = 0; v < num_vertices(); ++v) {
    const auto& p = vertices[v];
    if (p.x <= t || p.y <= t || p.x >= side - t || p.y >= side - t) out.push_back(v);
  }
  return out;
}

TriMesh structured_mesh(int nx, int ny, double side) {
  if (nx < 1 || ny < 1) throw ConfigError("structured_mesh: nx, ny must be >= 1");
  if (!(side > 0.0)) throw ConfigError("structured_mesh: side must be positive");
  TriMesh m;
  m.side = side;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) m.vertices.push_back({side * i / nx, side * j / ny});
  }
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int v00 = id(i, j), v10 = id(i + 1, j), v11 = id(i + 1, j + 1), v01 = id(i, j + 1);
      m.elements.push_back({v00, v10, v11});
      m.elements.push_back({v00, v11, v01});
    }
  }
  m.yield_scale.assign(m.elements.size(), 1.0);
  m.generator = "structured " + std::to_string(nx) + "x" + std::to_string(ny);
  return m;
}

TriMesh refine(const TriMesh& mesh) {
  check_conforming(mesh);
  TriMesh out;
  out.side = mesh.side;
  out.vertices = mesh.vertices;
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const Vertex& p = mesh.vertices[a];
    const Vertex& q = mesh.vertices[b];
    out.vertices.push_back({0.5 * (p.x + q.x), 0.5 * (p.y + q.y)});
    const int id = static_cast<int>(out.vertices.size()) - 1;
    midpoint.emplace(key, id);
    return id;
  };
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto [a, b, c] = mesh.elements[e];
    const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
    for (const auto& t : {std::array{a, ab, ca}, std::array{ab, b, bc}, std::array{ca, bc, c},
                          std::array{ab, bc, ca}}) {
      out.elements.push_back(t);
      out.yield_scale.push_back(mesh.yield_scale[e]);
    }
  }
  out.generator = mesh.generator + " +refine";
  return out;
}

void apply_inclusions(TriMesh& mesh, const std::vector<Inclusion>& inclusions) {
  mesh.yield_scale.assign(mesh.elements.size(), 1.0);
  for (const auto& inc : inclusions) {
    if (!(inc.radius > 0.0) || !(inc.scale >= 0.0)) {
      throw ConfigError("inclusion needs radius > 0 and scale >= 0");
    }
  }
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Vertex c = mesh.centroid(e);
    for (const auto& inc : inclusions) {
      if (std::hypot(c.x - inc.cx, c.y - inc.cy) <= inc.radius) mesh.yield_scale[e] = inc.scale;
    }
  }
}

void check_conforming(const TriMesh& mesh) {
  if (mesh.yield_scale.size() != mesh.elements.size()) {
    throw StructuralError("mesh: yield_scale length differs from element count");
  }
  std::map<std::pair<int, int>, int> uses;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& t = mesh.elements[e];
    for (int v : t) {
      if (v < 0 || v >= mesh.num_vertices()) throw StructuralError("mesh: vertex id out of range");
    }
    if (!(mesh.signed_area(e) > 0.0)) {
      throw StructuralError("mesh: element " + std::to_string(e) + " is not positively oriented");
    }
    if (mesh.yield_scale[e] < 0.0) throw StructuralError("mesh: negative yield scale");
    for (int k = 0; k < 3; ++k) ++uses[std::minmax(t[k], t[(k + 1) % 3])];
  }
  // A boundary edge lies on the square's boundary; every other edge needs two owners.
  const double tol = 1e-12 * mesh.side;
  auto on_same_side = [&](int a, int b) {
    const Vertex& p = mesh.vertices[a];
    const Vertex& q = mesh.vertices[b];
    return (p.x <= tol && q.x <= tol) || (p.y <= tol && q.y <= tol) ||
           (p.x >= mesh.side - tol && q.x >= mesh.side - tol) ||
           (p.y >= mesh.side - tol && q.y >= mesh.side - tol);
  };
  for (const auto& [edge, n] : uses) {
    if (n > 2 || (n == 1 && !on_same_side(edge.first, edge.second))) {
      throw StructuralError("mesh: non-conforming edge (" + std::to_string(edge.first) + ", " +
                            std::to_string(edge.second) + ")");
    }
  }
}

void write_mesh(const std::filesystem::path& path, const TriMesh& mesh) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ArtifactError("cannot write " + path.string());
  out << std::setprecision(17);
  out << "NODES " << mesh.num_vertices() << '\n';
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    out << v << ' ' << mesh.vertices[v].x << ' ' << mesh.vertices[v].y << '\n';
  }
  out << "ELEMENTS " << mesh.num_elements() << '\n';
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& t = mesh.elements[e];
    out << e << ' ' << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << mesh.yield_scale[e] << '\n';
  }
  out << "META\n" << "L " << mesh.side << '\n' << "generator " << mesh.generator << '\n';
}

TriMesh read_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("cannot read mesh " + path.string());
  TriMesh m;
  std::string tag;
  int count = 0;
  in >> tag >> count;
  if (tag != "NODES" || count < 0) throw ArtifactError(path.string() + ": expected NODES");
  m.vertices.resize(count);
  for (int k = 0; k < count; ++k) {
    int id;
    in >> id >> m.vertices[k].x >> m.vertices[k].y;
    if (id != k) throw ArtifactError(path.string() + ": node ids must be consecutive");
  }
  in >> tag >> count;
  if (tag != "ELEMENTS" || count < 0) throw ArtifactError(path.string() + ": expected ELEMENTS");
  m.elements.resize(count);
  m.yield_scale.resize(count);
  for (int k = 0; k < count; ++k) {
    int id;
    auto& t = m.elements[k];
    in >> id >> t[0] >> t[1] >> t[2] >> m.yield_scale[k];
    if (id != k) throw ArtifactError(path.string() + ": element ids must be consecutive");
  }
  in >> tag;
  if (tag != "META" || !in) throw ArtifactError(path.string() + ": expected META");
  std::string key;
  while (in >> key) {
    if (key == "L") {
      in >> m.side;
    } else {
      std::getline(in >> std::ws, key == "generator" ? m.generator : tag);
    }
  }
  check_conforming(m);
  return m;
}

}  // namespace plastigraph::mesh
