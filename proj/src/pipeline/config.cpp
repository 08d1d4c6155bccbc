#include "plastigraph/pipeline/config.hpp"

#include <fstream>
#include <set>

#include "plastigraph/error.hpp"

namespace plastigraph::pipeline {

namespace {

// Reads the keys of one object and rejects anything it did not ask for.
class Section {
 public:
  Section(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError("config: '" + where_ + "' must be an object");
  }

  template <class T>
  void get(const std::string& key, T& value) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, int>) {
        if (!it->is_number_integer()) throw ConfigError("expected an integer");
      } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (!it->is_number_unsigned()) throw ConfigError("expected a non-negative integer");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!it->is_number()) throw ConfigError("expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ConfigError("expected a string");
      }
      value = it->template get<T>();
    } catch (const std::exception& e) {
      throw ConfigError("config: " + where_ + "." + key + ": " + e.what());
    }
  }

  /// Nested object handled by `fn(Section&)`.
  template <class Fn>
  void object(const std::string& key, Fn&& fn) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    Section s(*it, where_ + "." + key);
    fn(s);
    s.done();
  }

  const Json* raw(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const std::string& where() const { return where_; }

  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("config: unknown key '" + where_ + "." + it.key() + "'");
    }
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

Json inclusions_json(const std::vector<mesh::Inclusion>& inc) {
  Json a = Json::array();
  for (const auto& i : inc) a.push_back({{"cx", i.cx}, {"cy", i.cy}, {"radius", i.radius}, {"scale", i.scale}});
  return a;
}

std::vector<mesh::Inclusion> inclusions_from(const Json& a, const std::string& where) {
  if (!a.is_array()) throw ConfigError("config: " + where + " must be an array");
  std::vector<mesh::Inclusion> out;
  for (std::size_t k = 0; k < a.size(); ++k) {
    Section s(a[k], where + "[" + std::to_string(k) + "]");
    mesh::Inclusion i;
    s.get("cx", i.cx);
    s.get("cy", i.cy);
    s.get("radius", i.radius);
    s.get("scale", i.scale);
    s.done();
    out.push_back(i);
  }
  return out;
}

Json mesh_json(const MeshSpec& m) {
  return {{"nx", m.nx}, {"ny", m.ny}, {"refinements", m.refinements}, {"side", m.side},
          {"inclusions", inclusions_json(m.inclusions)}};
}

void read_mesh(Section& s, MeshSpec& m) {
  s.get("nx", m.nx);
  s.get("ny", m.ny);
  s.get("refinements", m.refinements);
  s.get("side", m.side);
  if (const Json* inc = s.raw("inclusions")) m.inclusions = inclusions_from(*inc, s.where() + ".inclusions");
}

Json net_json(const NetSpec& n) {
  return {{"epochs", n.epochs}, {"batch", n.batch}, {"learning_rate", n.learning_rate}};
}

void read_net(Section& s, NetSpec& n) {
  s.get("epochs", n.epochs);
  s.get("batch", n.batch);
  s.get("learning_rate", n.learning_rate);
}

void check(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("config: " + what);
}

void validate_net(const NetSpec& n, const std::string& name) {
  check(n.epochs >= 0 && n.batch >= 1 && n.learning_rate > 0.0, name + ": epochs >= 0, batch >= 1, learning_rate > 0");
}

Json schema_of(const Json& v) {
  if (v.is_object()) {
    Json props = Json::object();
    for (auto it = v.begin(); it != v.end(); ++it) props[it.key()] = schema_of(it.value());
    return {{"type", "object"}, {"properties", props}, {"additionalProperties", false}};
  }
  if (v.is_array()) return {{"type", "array"}, {"items", v.empty() ? Json::object() : schema_of(v[0])}};
  if (v.is_boolean()) return {{"type", "boolean"}};
  if (v.is_number_integer()) return {{"type", "integer"}};
  if (v.is_number()) return {{"type", "number"}};
  return {{"type", "string"}};
}

}  // namespace

mesh::TriMesh MeshSpec::build() const {
  mesh::TriMesh m = mesh::structured_mesh(nx, ny, side);
  for (int r = 0; r < refinements; ++r) m = mesh::refine(m);
  mesh::apply_inclusions(m, inclusions);
  return m;
}

int MeshSpec::elements() const { return 2 * nx * ny * (1 << (2 * refinements)); }

RunConfig RunConfig::desk() { return RunConfig{}; }

RunConfig RunConfig::paper_scale() {
  RunConfig c;
  c.apply_paper_scale();
  return c;
}

void RunConfig::apply_paper_scale() {
  material = fem::MaterialParams{};
  loading.paths = 100;
  loading.steps = 100;
  loading.u_goal = 1.5e-3;
  autoencoder.epochs = 2000;
  autoencoder.batch = 20;
  autoencoder.learning_rate = 1e-3;
  nets.hyperelastic = {1000, 100, 1e-3};
  nets.yield = {1000, 100, 1e-3};
  nets.kinetic = {1000, 128, 1e-3};
  nets.flow = {1000, 100, 1e-3};
  baseline.epochs = 1000;
  baseline.batch = 128;
  baseline.window = 30;
  baseline.multiplier = 3.24;
  study.epochs = 2000;
}

void RunConfig::validate() const {
  check(mesh.nx >= 1 && mesh.ny >= 1 && mesh.refinements >= 0 && mesh.refinements <= 4 && mesh.side > 0.0,
        "mesh: nx, ny >= 1, 0 <= refinements <= 4, side > 0");
  for (const auto& i : mesh.inclusions) check(i.radius >= 0.0 && i.scale > 0.0, "mesh: inclusion radius >= 0, scale > 0");
  material.validate();
  check(loading.paths >= 2 && loading.steps >= 2 && loading.u_goal > 0.0, "loading: paths >= 2, steps >= 2, u_goal > 0");
  check(loading.blind_monotonic >= 0 && loading.blind_cyclic >= 0 && loading.excursion_length >= 1,
        "loading: blind counts >= 0, excursion_length >= 1");
  for (double a : loading.excursion_at) check(a > 0.0 && a < 1.0, "loading: excursion_at entries in (0, 1)");
  check(autoencoder.d_enc >= 1 && autoencoder.hidden >= 1, "autoencoder: d_enc, hidden >= 1");
  validate_net({autoencoder.epochs, autoencoder.batch, autoencoder.learning_rate}, "autoencoder");
  validate_net(nets.hyperelastic, "nets.hyperelastic");
  validate_net(nets.yield, "nets.yield");
  validate_net(nets.kinetic, "nets.kinetic");
  validate_net(nets.flow, "nets.flow");
  check(nets.validation_fraction >= 0.0 && nets.validation_fraction < 1.0, "nets: validation_fraction in [0, 1)");
  check(nets.width >= 1 && nets.history_length >= 1 && nets.yield_bins >= 1 && nets.collocation_per_bin >= 1,
        "nets: width, history_length, yield_bins, collocation_per_bin >= 1");
  check(nets.stress_weight >= 0.0 && nets.stiffness_weight >= 0.0 && nets.eikonal_weight >= 0.0 && nets.yield_margin >= 0.0,
        "nets: weights and margin must be non-negative");
  validate_net({baseline.epochs, baseline.batch, baseline.learning_rate}, "baseline");
  check(baseline.window >= 1 && baseline.multiplier >= 1.0, "baseline: window >= 1, multiplier >= 1");
  check(baseline.depth_min > 0.0 && baseline.depth_min <= baseline.depth_max && baseline.depth_max <= 1.0,
        "baseline: 0 < depth_min <= depth_max <= 1");
  check(baseline.length_min >= 2 && baseline.length_min <= baseline.length_max && baseline.max_excursions >= 1,
        "baseline: 2 <= length_min <= length_max, max_excursions >= 1");
  check(return_map.tolerance > 0.0 && return_map.max_newton >= 1 && return_map.max_passes >= 1,
        "return_map: tolerance > 0, max_newton >= 1, max_passes >= 1");
  for (int d : study.enc_sizes) check(d >= 1, "study: enc_sizes must be positive");
  for (int r : study.mesh_refinements) check(r >= 0 && r <= 4, "study: mesh_refinements in [0, 4]");
  check(study.epochs >= 0, "study: epochs >= 0");
}

Json RunConfig::to_json() const {
  Json j;
  j["seed"] = seed;
  j["out"] = out;
  j["mesh"] = mesh_json(mesh);
  j["material"] = {{"E", material.E}, {"nu", material.nu}, {"sigma_y0", material.sigma_y0}, {"H", material.H}};
  j["loading"] = {{"paths", loading.paths},
                  {"steps", loading.steps},
                  {"u_goal", loading.u_goal},
                  {"blind_monotonic", loading.blind_monotonic},
                  {"blind_cyclic", loading.blind_cyclic},
                  {"excursion_length", loading.excursion_length},
                  {"excursion_at", loading.excursion_at}};
  j["autoencoder"] = {{"d_enc", autoencoder.d_enc},
                      {"hidden", autoencoder.hidden},
                      {"epochs", autoencoder.epochs},
                      {"batch", autoencoder.batch},
                      {"learning_rate", autoencoder.learning_rate}};
  j["nets"] = {{"hyperelastic", net_json(nets.hyperelastic)},
               {"yield", net_json(nets.yield)},
               {"kinetic", net_json(nets.kinetic)},
               {"flow", net_json(nets.flow)},
               {"validation_fraction", nets.validation_fraction},
               {"width", nets.width},
               {"stress_weight", nets.stress_weight},
               {"stiffness_weight", nets.stiffness_weight},
               {"eikonal_weight", nets.eikonal_weight},
               {"yield_bins", nets.yield_bins},
               {"collocation_per_bin", nets.collocation_per_bin},
               {"yield_margin", nets.yield_margin},
               {"history_length", nets.history_length}};
  j["baseline"] = {{"epochs", baseline.epochs},
                   {"batch", baseline.batch},
                   {"learning_rate", baseline.learning_rate},
                   {"window", baseline.window},
                   {"multiplier", baseline.multiplier},
                   {"depth_min", baseline.depth_min},
                   {"depth_max", baseline.depth_max},
                   {"length_min", baseline.length_min},
                   {"length_max", baseline.length_max},
                   {"max_excursions", baseline.max_excursions}};
  j["return_map"] = {{"tolerance", return_map.tolerance},
                     {"max_newton", return_map.max_newton},
                     {"max_passes", return_map.max_passes}};
  j["study"] = {{"enc_sizes", study.enc_sizes},
                {"mesh_base", mesh_json(study.mesh_base)},
                {"mesh_refinements", study.mesh_refinements},
                {"epochs", study.epochs}};
  return j;
}

RunConfig RunConfig::from_json(const Json& j, const RunConfig& base) {
  RunConfig c = base;
  Section root(j, "config");
  root.get("seed", c.seed);
  root.get("out", c.out);
  root.object("mesh", [&](Section& s) { read_mesh(s, c.mesh); });
  root.object("material", [&](Section& s) {
    s.get("E", c.material.E);
    s.get("nu", c.material.nu);
    s.get("sigma_y0", c.material.sigma_y0);
    s.get("H", c.material.H);
  });
  root.object("loading", [&](Section& s) {
    s.get("paths", c.loading.paths);
    s.get("steps", c.loading.steps);
    s.get("u_goal", c.loading.u_goal);
    s.get("blind_monotonic", c.loading.blind_monotonic);
    s.get("blind_cyclic", c.loading.blind_cyclic);
    s.get("excursion_length", c.loading.excursion_length);
    s.get("excursion_at", c.loading.excursion_at);
  });
  root.object("autoencoder", [&](Section& s) {
    s.get("d_enc", c.autoencoder.d_enc);
    s.get("hidden", c.autoencoder.hidden);
    s.get("epochs", c.autoencoder.epochs);
    s.get("batch", c.autoencoder.batch);
    s.get("learning_rate", c.autoencoder.learning_rate);
  });
  root.object("nets", [&](Section& s) {
    s.object("hyperelastic", [&](Section& n) { read_net(n, c.nets.hyperelastic); });
    s.object("yield", [&](Section& n) { read_net(n, c.nets.yield); });
    s.object("kinetic", [&](Section& n) { read_net(n, c.nets.kinetic); });
    s.object("flow", [&](Section& n) { read_net(n, c.nets.flow); });
    s.get("validation_fraction", c.nets.validation_fraction);
    s.get("width", c.nets.width);
    s.get("stress_weight", c.nets.stress_weight);
    s.get("stiffness_weight", c.nets.stiffness_weight);
    s.get("eikonal_weight", c.nets.eikonal_weight);
    s.get("yield_bins", c.nets.yield_bins);
    s.get("collocation_per_bin", c.nets.collocation_per_bin);
    s.get("yield_margin", c.nets.yield_margin);
    s.get("history_length", c.nets.history_length);
  });
  root.object("baseline", [&](Section& s) {
    s.get("epochs", c.baseline.epochs);
    s.get("batch", c.baseline.batch);
    s.get("learning_rate", c.baseline.learning_rate);
    s.get("window", c.baseline.window);
    s.get("multiplier", c.baseline.multiplier);
    s.get("depth_min", c.baseline.depth_min);
    s.get("depth_max", c.baseline.depth_max);
    s.get("length_min", c.baseline.length_min);
    s.get("length_max", c.baseline.length_max);
    s.get("max_excursions", c.baseline.max_excursions);
  });
  root.object("return_map", [&](Section& s) {
    s.get("tolerance", c.return_map.tolerance);
    s.get("max_newton", c.return_map.max_newton);
    s.get("max_passes", c.return_map.max_passes);
  });
  root.object("study", [&](Section& s) {
    s.get("enc_sizes", c.study.enc_sizes);
    s.object("mesh_base", [&](Section& m) { read_mesh(m, c.study.mesh_base); });
    s.get("mesh_refinements", c.study.mesh_refinements);
    s.get("epochs", c.study.epochs);
  });
  root.done();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path, bool paper_scale) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("cannot read config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  RunConfig c = RunConfig::from_json(j);
  if (paper_scale) {
    c.apply_paper_scale();
    c.validate();
  }
  return c;
}

Json config_schema() {
  Json s = schema_of(RunConfig::desk().to_json());
  s["$schema"] = "https://json-schema.org/draft/2020-12/schema";
  s["title"] = "plastigraph run configuration";
  return s;
}

}  // namespace plastigraph::pipeline
