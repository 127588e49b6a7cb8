#ifndef PBG_SCENARIO_HPP
#define PBG_SCENARIO_HPP

// Declarative parameter studies: scenario documents (YAML or JSON text),
// built-in presets for the band-gap device studies, a deterministic sweep
// runner and CSV/JSON emitters.

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "json.hpp"
#include "pbg/decay.hpp"
#include "pbg/farfield.hpp"
#include "pbg/localfield.hpp"
#include "pbg/stack.hpp"

namespace pbg {

inline constexpr const char* engine_version = "1.0.0";

/// Schema or physics violation in a scenario; `path()` names the offending field.
class ScenarioError : public std::invalid_argument {
 public:
  ScenarioError(std::string path, const std::string& msg)
      : std::invalid_argument(path + ": " + msg), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

enum class Quantity { gamma_total, gamma_rad, gamma_ratio, W_top, W_bottom, W_theta };
inline constexpr std::array<const char*, 6> quantity_names{
    "gamma_total", "gamma_rad", "gamma_ratio", "W_top", "W_bottom", "W_theta"};

// Declaration order is the column and loop-nesting order.
enum class Axis { omega_A, z_A, gamma, omega_P, periods_down };
inline constexpr std::array<const char*, 5> axis_names{"omega_A", "z_A", "gamma", "omega_P",
                                                       "periods_down"};

inline const char* to_string(Quantity q) { return quantity_names[static_cast<int>(q)]; }
inline const char* to_string(Axis a) { return axis_names[static_cast<int>(a)]; }

struct MaterialSpec {
  enum class Kind { constant, drude_lorentz };
  Kind kind = Kind::constant;
  cplx eps{1.0};
  double omega_P = 0.0;  // units of omega_T
  double omega_T = 0.0;  // units of omega_0
  double gamma = 0.0;    // units of omega_0

  DispersionModel model(std::optional<double> omega_P_override = {},
                        std::optional<double> gamma_override = {}) const {
    if (kind == Kind::constant) return DispersionModel::constant(eps);
    return DispersionModel::drude_lorentz(omega_P_override.value_or(omega_P) * omega_T,
                                          omega_T, gamma_override.value_or(gamma));
  }
};

inline constexpr std::array<const char*, 4> material_slots{"H", "L", "emitter", "outer"};

struct StructureSpec {
  int periods_up = 5;
  int periods_down = 5;
  bool defect = false;
  Material adjacent = Material::high;
  std::map<std::string, MaterialSpec> materials{
      {"H", {}}, {"L", {}}, {"emitter", {}}, {"outer", {}}};
  // omega_P (units of omega_T) that sizes the H layers; defaults to H's own.
  std::optional<double> design_omega_P;
};

struct EmitterSpec {
  double omega_A = 1.0;
  std::optional<double> z_A;  // lambda_0 units; empty means the layer center
  std::string orientation = "parallel";
  double w_z = 0.0;
  double w_par = 1.0;
};

struct SweepAxis {
  Axis axis = Axis::omega_A;
  std::vector<double> values;
  bool relative = false;  // z_A given as a fraction of the emitter-layer thickness
};

struct ThetaSpec {
  std::size_t count = 721;
  Side side = Side::above;
};

struct LocalFieldSpec {
  bool enabled = false;
  cplx eps_host{1.0};
};

struct Scenario {
  std::string name;
  std::string description;
  StructureSpec structure;
  EmitterSpec emitter;
  std::vector<SweepAxis> sweep;  // sorted by Axis
  std::vector<Quantity> outputs{Quantity::gamma_total};
  ThetaSpec theta;
  QuadratureOptions tolerances;
  LocalFieldSpec local_field;

  bool wants(Quantity q) const {
    return std::find(outputs.begin(), outputs.end(), q) != outputs.end();
  }
  const SweepAxis* axis(Axis a) const {
    for (const auto& s : sweep)
      if (s.axis == a) return &s;
    return nullptr;
  }
  std::size_t point_count() const {
    std::size_t n = 1;
    for (const auto& s : sweep) n *= s.values.size();
    return n;
  }
};

namespace detail {

inline std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

inline void check_keys(const YAML::Node& n, const std::string& path,
                       std::initializer_list<std::string_view> allowed) {
  if (!n.IsMap()) throw ScenarioError(path.empty() ? "<root>" : path, "expected a mapping");
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ScenarioError(join_path(path, key), "unknown key");
  }
}

template <class T>
T scalar_as(const YAML::Node& n, const std::string& path, const char* what) {
  if (!n.IsScalar()) throw ScenarioError(path, std::string("expected ") + what);
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ScenarioError(path, std::string("expected ") + what + ", got '" + n.Scalar() + "'");
  }
}

inline double read_number(const YAML::Node& n, const std::string& path) {
  const double v = scalar_as<double>(n, path, "a number");
  if (!std::isfinite(v)) throw ScenarioError(path, "must be finite");
  return v;
}

inline int read_int(const YAML::Node& n, const std::string& path) {
  return scalar_as<int>(n, path, "an integer");
}

inline cplx read_complex(const YAML::Node& n, const std::string& path) {
  if (n.IsSequence()) {
    if (n.size() != 2) throw ScenarioError(path, "complex values are [re, im]");
    return {read_number(n[0], path + "[0]"), read_number(n[1], path + "[1]")};
  }
  return {read_number(n, path), 0.0};
}

inline MaterialSpec read_material(const YAML::Node& n, const std::string& path) {
  if (!n.IsMap() || !n["model"]) throw ScenarioError(path, "material needs a 'model' key");
  const auto model = scalar_as<std::string>(n["model"], path + ".model", "a model name");
  MaterialSpec m;
  if (model == "constant") {
    check_keys(n, path, {"model", "eps"});
    if (!n["eps"]) throw ScenarioError(path + ".eps", "required for constant materials");
    m.eps = read_complex(n["eps"], path + ".eps");
    if (m.eps.imag() < 0.0) throw ScenarioError(path + ".eps", "Im eps must be >= 0");
  } else if (model == "drude_lorentz") {
    check_keys(n, path, {"model", "omega_P", "omega_T", "gamma"});
    m.kind = MaterialSpec::Kind::drude_lorentz;
    for (const char* k : {"omega_P", "omega_T", "gamma"})
      if (!n[k]) throw ScenarioError(path + "." + k, "required for drude_lorentz materials");
    m.omega_P = read_number(n["omega_P"], path + ".omega_P");
    m.omega_T = read_number(n["omega_T"], path + ".omega_T");
    m.gamma = read_number(n["gamma"], path + ".gamma");
    if (m.omega_P < 0.0) throw ScenarioError(path + ".omega_P", "must be >= 0");
    if (!(m.omega_T > 0.0)) throw ScenarioError(path + ".omega_T", "must be > 0");
    if (m.gamma < 0.0) throw ScenarioError(path + ".gamma", "must be >= 0");
  } else {
    throw ScenarioError(path + ".model", "expected 'constant' or 'drude_lorentz'");
  }
  return m;
}

// Uniform grid with an optional denser window. Points are start + i h so the
// same document always yields the same doubles.
inline std::vector<double> uniform_grid(double start, double stop, int count) {
  if (count == 1) return {start};
  std::vector<double> g(count);
  const double h = (stop - start) / (count - 1);
  for (int i = 0; i < count; ++i) g[i] = start + i * h;
  g.back() = stop;
  return g;
}

inline std::vector<double> read_grid(const YAML::Node& n, const std::string& path, bool* relative,
                                     bool allow_unit) {
  if (n.IsScalar()) return {read_number(n, path)};
  if (n.IsSequence()) {
    std::vector<double> v;
    for (std::size_t i = 0; i < n.size(); ++i)
      v.push_back(read_number(n[i], path + "[" + std::to_string(i) + "]"));
    return v;
  }
  if (!n.IsMap()) throw ScenarioError(path, "expected a number, a list or a grid mapping");
  if (allow_unit)
    check_keys(n, path, {"values", "start", "stop", "count", "refine", "unit"});
  else
    check_keys(n, path, {"values", "start", "stop", "count", "refine"});
  if (n["unit"]) {
    const auto u = scalar_as<std::string>(n["unit"], path + ".unit", "a unit name");
    if (u == "layer") *relative = true;
    else if (u != "lambda0") throw ScenarioError(path + ".unit", "expected 'lambda0' or 'layer'");
  }
  if (n["values"]) {
    if (n["start"] || n["stop"] || n["count"] || n["refine"])
      throw ScenarioError(path, "'values' excludes start/stop/count/refine");
    return read_grid(n["values"], path + ".values", relative, false);
  }
  for (const char* k : {"start", "stop", "count"})
    if (!n[k]) throw ScenarioError(path + "." + k, "required for a uniform grid");
  const double start = read_number(n["start"], path + ".start");
  const double stop = read_number(n["stop"], path + ".stop");
  const int count = read_int(n["count"], path + ".count");
  if (count < 1) throw ScenarioError(path + ".count", "must be >= 1");
  if (count > 1 && !(stop > start)) throw ScenarioError(path, "stop must exceed start");
  auto grid = uniform_grid(start, stop, count);
  if (!n["refine"]) return grid;
  if (count < 2) throw ScenarioError(path + ".refine", "needs count >= 2");
  const auto& r = n["refine"];
  const std::string rp = path + ".refine";
  check_keys(r, rp, {"start", "stop", "factor"});
  for (const char* k : {"start", "stop", "factor"})
    if (!r[k]) throw ScenarioError(rp + "." + k, "required");
  const double rs = read_number(r["start"], rp + ".start");
  const double re = read_number(r["stop"], rp + ".stop");
  const int factor = read_int(r["factor"], rp + ".factor");
  if (factor < 1) throw ScenarioError(rp + ".factor", "must be >= 1");
  if (!(re > rs) || rs < start || re > stop)
    throw ScenarioError(rp, "window must be a non-empty sub-interval of the grid");
  const double h = (stop - start) / (count - 1) / factor;
  const int fine = static_cast<int>(std::llround((re - rs) / h));
  std::vector<double> out;
  const double eps = 1e-9 * h;
  for (double x : grid)
    if (x < rs - eps || x > re + eps) out.push_back(x);
  for (int i = 0; i <= fine; ++i) out.push_back(i == fine ? re : rs + i * h);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Checks everything that needs the assembled device: layer thickness, emitter
/// position, half-space transparency. Throws ScenarioError with the field path.
inline void validate_physics(const Scenario& sc);

/// Parses and validates a scenario document.
inline Scenario load_scenario(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ScenarioError("<document>", std::string("parse error: ") + e.what());
  }
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  using detail::check_keys;
  using detail::read_number;
  check_keys(root, "", {"name", "description", "structure", "emitter", "sweep", "outputs",
                        "theta", "tolerances", "local_field"});
  Scenario sc;
  if (root["name"]) sc.name = detail::scalar_as<std::string>(root["name"], "name", "a string");
  if (root["description"])
    sc.description = detail::scalar_as<std::string>(root["description"], "description", "a string");

  if (const auto s = root["structure"]) {
    check_keys(s, "structure", {"periods_up", "periods_down", "defect", "adjacent_material",
                                "materials", "design_omega_P"});
    auto& st = sc.structure;
    if (s["periods_up"]) st.periods_up = detail::read_int(s["periods_up"], "structure.periods_up");
    if (s["periods_down"])
      st.periods_down = detail::read_int(s["periods_down"], "structure.periods_down");
    if (st.periods_up < 1) throw ScenarioError("structure.periods_up", "must be >= 1");
    if (st.periods_down < 1) throw ScenarioError("structure.periods_down", "must be >= 1");
    if (s["defect"]) st.defect = detail::scalar_as<bool>(s["defect"], "structure.defect", "true or false");
    if (s["adjacent_material"]) {
      const auto a = detail::scalar_as<std::string>(s["adjacent_material"],
                                                    "structure.adjacent_material", "H or L");
      if (a == "H") st.adjacent = Material::high;
      else if (a == "L") st.adjacent = Material::low;
      else throw ScenarioError("structure.adjacent_material", "expected H or L");
    }
    if (const auto m = s["materials"]) {
      check_keys(m, "structure.materials", {"H", "L", "emitter", "outer"});
      for (const auto& kv : m) {
        const auto key = kv.first.as<std::string>();
        st.materials[key] = detail::read_material(kv.second, "structure.materials." + key);
      }
    }
    if (s["design_omega_P"]) {
      st.design_omega_P = read_number(s["design_omega_P"], "structure.design_omega_P");
      if (st.materials.at("H").kind != MaterialSpec::Kind::drude_lorentz)
        throw ScenarioError("structure.design_omega_P", "needs a drude_lorentz H material");
      if (!(*st.design_omega_P >= 0.0))
        throw ScenarioError("structure.design_omega_P", "must be >= 0");
    }
  }

  if (const auto e = root["emitter"]) {
    check_keys(e, "emitter", {"omega_A", "z_A", "orientation"});
    auto& em = sc.emitter;
    if (e["omega_A"]) em.omega_A = read_number(e["omega_A"], "emitter.omega_A");
    if (e["z_A"]) {
      if (e["z_A"].IsScalar() && e["z_A"].Scalar() == "center") em.z_A.reset();
      else em.z_A = read_number(e["z_A"], "emitter.z_A");
    }
    if (const auto o = e["orientation"]) {
      if (o.IsMap()) {
        check_keys(o, "emitter.orientation", {"w_z", "w_par"});
        if (!o["w_z"] || !o["w_par"])
          throw ScenarioError("emitter.orientation", "custom orientation needs w_z and w_par");
        em.orientation = "custom";
        em.w_z = read_number(o["w_z"], "emitter.orientation.w_z");
        em.w_par = read_number(o["w_par"], "emitter.orientation.w_par");
        if (em.w_z < 0.0 || em.w_par < 0.0 || std::abs(em.w_z + em.w_par - 1.0) > 1e-12)
          throw ScenarioError("emitter.orientation", "weights must be >= 0 and sum to 1");
      } else {
        em.orientation = detail::scalar_as<std::string>(o, "emitter.orientation", "an orientation");
        if (em.orientation == "parallel") em.w_z = 0.0, em.w_par = 1.0;
        else if (em.orientation == "perpendicular") em.w_z = 1.0, em.w_par = 0.0;
        else if (em.orientation == "isotropic") em.w_z = 1.0 / 3.0, em.w_par = 2.0 / 3.0;
        else
          throw ScenarioError("emitter.orientation",
                              "expected parallel, perpendicular, isotropic or {w_z, w_par}");
      }
    }
    if (!(em.omega_A > 0.0)) throw ScenarioError("emitter.omega_A", "must be > 0");
  }

  if (const auto sw = root["sweep"]) {
    check_keys(sw, "sweep", {"omega_A", "z_A", "gamma", "omega_P", "periods_down"});
    for (std::size_t i = 0; i < axis_names.size(); ++i) {
      const auto node = sw[axis_names[i]];
      if (!node) continue;
      const std::string path = std::string("sweep.") + axis_names[i];
      SweepAxis ax;
      ax.axis = static_cast<Axis>(i);
      ax.values = detail::read_grid(node, path, &ax.relative, ax.axis == Axis::z_A);
      if (ax.values.empty()) throw ScenarioError(path, "grid must not be empty");
      for (std::size_t k = 1; k < ax.values.size(); ++k)
        if (!(ax.values[k] > ax.values[k - 1]))
          throw ScenarioError(path, "grid must be strictly increasing");
      sc.sweep.push_back(std::move(ax));
    }
    if (sc.sweep.size() > 2) throw ScenarioError("sweep", "at most two sweep axes are supported");
  }

  if (const auto o = root["outputs"]) {
    if (!o.IsSequence() || o.size() == 0)
      throw ScenarioError("outputs", "expected a non-empty list of quantities");
    std::set<int> seen;
    for (std::size_t i = 0; i < o.size(); ++i) {
      const std::string path = "outputs[" + std::to_string(i) + "]";
      const auto name = detail::scalar_as<std::string>(o[i], path, "a quantity name");
      const auto it = std::find_if(quantity_names.begin(), quantity_names.end(),
                                   [&](const char* q) { return name == q; });
      if (it == quantity_names.end()) throw ScenarioError(path, "unknown quantity '" + name + "'");
      seen.insert(static_cast<int>(it - quantity_names.begin()));
    }
    sc.outputs.clear();
    for (int q : seen) sc.outputs.push_back(static_cast<Quantity>(q));
    if (sc.wants(Quantity::W_theta) && sc.outputs.size() > 1)
      throw ScenarioError("outputs", "W_theta is written in long format and must be requested alone");
  }

  if (const auto t = root["theta"]) {
    check_keys(t, "theta", {"count", "side"});
    if (t["count"]) {
      const int c = detail::read_int(t["count"], "theta.count");
      if (c < 1) throw ScenarioError("theta.count", "must be >= 1");
      sc.theta.count = static_cast<std::size_t>(c);
    }
    if (t["side"]) {
      const auto s = detail::scalar_as<std::string>(t["side"], "theta.side", "above or below");
      if (s == "above") sc.theta.side = Side::above;
      else if (s == "below") sc.theta.side = Side::below;
      else throw ScenarioError("theta.side", "expected above or below");
    }
  }

  if (const auto t = root["tolerances"]) {
    check_keys(t, "tolerances", {"rel", "abs", "max_panels"});
    if (t["rel"]) sc.tolerances.rel_tol = read_number(t["rel"], "tolerances.rel");
    if (t["abs"]) sc.tolerances.abs_tol = read_number(t["abs"], "tolerances.abs");
    if (t["max_panels"]) {
      const int p = detail::read_int(t["max_panels"], "tolerances.max_panels");
      if (p < 1) throw ScenarioError("tolerances.max_panels", "must be >= 1");
      sc.tolerances.max_panels = static_cast<std::size_t>(p);
    }
    if (!(sc.tolerances.rel_tol > 0.0)) throw ScenarioError("tolerances.rel", "must be > 0");
    if (!(sc.tolerances.abs_tol >= 0.0)) throw ScenarioError("tolerances.abs", "must be >= 0");
  }

  if (const auto l = root["local_field"]) {
    check_keys(l, "local_field", {"enabled", "eps_host"});
    if (l["enabled"])
      sc.local_field.enabled = detail::scalar_as<bool>(l["enabled"], "local_field.enabled", "true or false");
    if (l["eps_host"]) sc.local_field.eps_host = detail::read_complex(l["eps_host"], "local_field.eps_host");
  }

  validate_physics(sc);
  return sc;
}

inline Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_scenario(ss.str());
}

/// Parameters of one sweep point.
struct PointParams {
  double omega_A = 1.0;
  double z_A = 0.0;  // absolute, lambda_0 units
  std::optional<double> gamma;
  std::optional<double> omega_P;
  int periods_down = 5;
};

/// The device for one point. Layer thicknesses always come from the unswept
/// materials (and design_omega_P), so tuning studies change the material, not
/// the geometry.
inline LayerStack build_device(const StructureSpec& st, const PointParams& p) {
  const auto& H = st.materials.at("H");
  const auto& L = st.materials.at("L");
  BraggDesign d;
  d.periods_up = st.periods_up;
  d.periods_down = p.periods_down;
  d.defect = st.defect;
  d.adjacent = st.adjacent;
  d.eps_high = H.model(p.omega_P, H.kind == MaterialSpec::Kind::drude_lorentz ? p.gamma : std::nullopt);
  d.eps_low = L.model({}, L.kind == MaterialSpec::Kind::drude_lorentz ? p.gamma : std::nullopt);
  d.eps_emitter = st.materials.at("emitter").model();
  d.eps_outer = st.materials.at("outer").model();
  d.design_high = H.model(st.design_omega_P);
  d.design_low = L.model();
  return build_bragg(d);
}

inline double emitter_layer_thickness(const StructureSpec& st) {
  return (st.defect ? 2.0 : 1.0) * quarter_wave(st.materials.at("emitter").model());
}

/// Expands the sweep into points, first axis varying slowest.
inline std::vector<PointParams> sweep_points(const Scenario& sc) {
  const double dj = emitter_layer_thickness(sc.structure);
  PointParams base;
  base.omega_A = sc.emitter.omega_A;
  base.z_A = sc.emitter.z_A.value_or(0.5 * dj);
  base.periods_down = sc.structure.periods_down;
  std::vector<PointParams> pts{base};
  for (const auto& ax : sc.sweep) {
    std::vector<PointParams> next;
    next.reserve(pts.size() * ax.values.size());
    for (const auto& p : pts) {
      for (double v : ax.values) {
        PointParams q = p;
        switch (ax.axis) {
          case Axis::omega_A: q.omega_A = v; break;
          case Axis::z_A: q.z_A = ax.relative ? v * dj : v; break;
          case Axis::gamma: q.gamma = v; break;
          case Axis::omega_P: q.omega_P = v; break;
          case Axis::periods_down: q.periods_down = static_cast<int>(v); break;
        }
        next.push_back(q);
      }
    }
    pts = std::move(next);
  }
  return pts;
}

inline void validate_physics(const Scenario& sc) {
  const auto& st = sc.structure;
  const auto& mats = st.materials;
  const bool h_dl = mats.at("H").kind == MaterialSpec::Kind::drude_lorentz;
  const bool any_dl = h_dl || mats.at("L").kind == MaterialSpec::Kind::drude_lorentz;

  for (const auto& ax : sc.sweep) {
    const std::string path = std::string("sweep.") + to_string(ax.axis);
    for (std::size_t i = 0; i < ax.values.size(); ++i) {
      const double v = ax.values[i];
      const std::string at = path + "[" + std::to_string(i) + "]";
      switch (ax.axis) {
        case Axis::omega_A:
          if (!(v > 0.0)) throw ScenarioError(at, "omega_A must be > 0");
          break;
        case Axis::gamma:
          if (!any_dl) throw ScenarioError(path, "needs a drude_lorentz H or L material");
          if (!(v >= 0.0)) throw ScenarioError(at, "gamma must be >= 0");
          break;
        case Axis::omega_P:
          if (!h_dl) throw ScenarioError(path, "needs a drude_lorentz H material");
          if (!(v >= 0.0)) throw ScenarioError(at, "omega_P must be >= 0");
          break;
        case Axis::periods_down:
          if (v != std::floor(v) || v < 1.0 || v > 1000.0)
            throw ScenarioError(at, "periods_down must be an integer in [1, 1000]");
          break;
        case Axis::z_A: break;
      }
    }
  }

  double dj = 0.0;
  try {
    dj = emitter_layer_thickness(st);
    PointParams base;
    base.periods_down = st.periods_down;
    build_device(st, base);  // material and thickness sanity only
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScenarioError("structure", e.what());
  }

  auto check_z = [&](double z, const std::string& path) {
    if (!(z > 0.0 && z < dj))
      throw ScenarioError(path, "z_A = " + std::to_string(z) +
                                    " lies outside the emitter layer (0, " + std::to_string(dj) +
                                    ") [lambda_0]");
  };
  if (sc.emitter.z_A) check_z(*sc.emitter.z_A, "emitter.z_A");
  if (const auto* ax = sc.axis(Axis::z_A))
    for (std::size_t i = 0; i < ax->values.size(); ++i)
      check_z(ax->relative ? ax->values[i] * dj : ax->values[i],
              "sweep.z_A[" + std::to_string(i) + "]");

  // The radiative rate and all far-field outputs need a transparent outer half-space.
  const bool needs_side = sc.wants(Quantity::gamma_rad) || sc.wants(Quantity::gamma_ratio) ||
                          sc.wants(Quantity::W_top) || sc.wants(Quantity::W_bottom) ||
                          sc.wants(Quantity::W_theta);
  if (needs_side) {
    std::vector<double> omegas{sc.emitter.omega_A};
    if (const auto* ax = sc.axis(Axis::omega_A)) omegas = ax->values;
    const auto outer = mats.at("outer").model();
    for (double w : omegas) {
      const cplx e = outer(w);
      if (std::abs(e.imag()) > 1e-6 || !(e.real() > 0.0))
        throw ScenarioError("structure.materials.outer",
                            "requested outputs need an effectively real, positive eps");
    }
  }

  if (sc.local_field.enabled) {
    try {
      LocalFieldFactor f(sc.local_field.eps_host);
    } catch (const std::exception& e) {
      throw ScenarioError("local_field.eps_host", e.what());
    }
  }
}

// ---------------------------------------------------------------------------
// Canonical form, presets

namespace detail {

inline nlohmann::ordered_json complex_json(cplx z) {
  if (z.imag() == 0.0) return z.real();
  return nlohmann::ordered_json::array({z.real(), z.imag()});
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace detail

/// Fully defaulted, explicit form of a scenario (grids expanded).
inline nlohmann::ordered_json to_json(const Scenario& sc) {
  using oj = nlohmann::ordered_json;
  oj j;
  j["name"] = sc.name;
  j["description"] = sc.description;
  const auto& st = sc.structure;
  oj s;
  s["periods_up"] = st.periods_up;
  s["periods_down"] = st.periods_down;
  s["defect"] = st.defect;
  s["adjacent_material"] = st.adjacent == Material::high ? "H" : "L";
  oj mats = oj::object();
  for (const char* slot : material_slots) {
    const auto& m = st.materials.at(slot);
    oj mj;
    if (m.kind == MaterialSpec::Kind::constant) {
      mj["model"] = "constant";
      mj["eps"] = detail::complex_json(m.eps);
    } else {
      mj["model"] = "drude_lorentz";
      mj["omega_P"] = m.omega_P;
      mj["omega_T"] = m.omega_T;
      mj["gamma"] = m.gamma;
    }
    mats[slot] = mj;
  }
  s["materials"] = mats;
  if (st.design_omega_P) s["design_omega_P"] = *st.design_omega_P;
  j["structure"] = s;
  oj e;
  e["omega_A"] = sc.emitter.omega_A;
  if (sc.emitter.z_A) e["z_A"] = *sc.emitter.z_A;
  else e["z_A"] = "center";
  if (sc.emitter.orientation == "custom")
    e["orientation"] = {{"w_z", sc.emitter.w_z}, {"w_par", sc.emitter.w_par}};
  else
    e["orientation"] = sc.emitter.orientation;
  j["emitter"] = e;
  oj sw = oj::object();
  for (const auto& ax : sc.sweep) {
    oj a;
    a["values"] = ax.values;
    if (ax.axis == Axis::z_A) a["unit"] = ax.relative ? "layer" : "lambda0";
    sw[to_string(ax.axis)] = a;
  }
  j["sweep"] = sw;
  oj outs = oj::array();
  for (auto q : sc.outputs) outs.push_back(to_string(q));
  j["outputs"] = outs;
  j["theta"] = {{"count", sc.theta.count}, {"side", to_string(sc.theta.side)}};
  j["tolerances"] = {{"rel", sc.tolerances.rel_tol},
                     {"abs", sc.tolerances.abs_tol},
                     {"max_panels", sc.tolerances.max_panels}};
  j["local_field"] = {{"enabled", sc.local_field.enabled},
                      {"eps_host", detail::complex_json(sc.local_field.eps_host)}};
  return j;
}

inline std::string scenario_hash(const Scenario& sc) {
  char buf[17];
  const auto h = detail::fnv1a(to_json(sc).dump());
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct PresetInfo {
  const char* name;
  const char* description;
  const char* document;
};

namespace detail {

// Shared materials block: eps_L = eps_j = eps_0 = eps_n = 1, eps_H Drude-Lorentz.
#define PBG_PRESET_MATERIALS(OMEGA_P, GAMMA)                                   \
  "  materials:\n"                                                            \
  "    H: {model: drude_lorentz, omega_P: " OMEGA_P ", omega_T: 20, gamma: " GAMMA "}\n" \
  "    L: {model: constant, eps: 1}\n"                                        \
  "    emitter: {model: constant, eps: 1}\n"                                  \
  "    outer: {model: constant, eps: 1}\n"

#define PBG_GRID_PLAIN "{start: 0.9, stop: 1.3, count: 801}"
#define PBG_GRID_DEFECT \
  "{start: 0.9, stop: 1.3, count: 801, refine: {start: 0.99, stop: 1.01, factor: 10}}"

inline const std::vector<PresetInfo>& preset_table() {
  static const std::vector<PresetInfo> table{
      {"fig2a", "W_top vs omega_A, no defect, parallel dipole, 5 upper / 5,6,7 lower periods",
       "name: fig2a\n"
       "structure:\n  periods_up: 5\n  periods_down: 5\n  defect: false\n  adjacent_material: H\n"
       PBG_PRESET_MATERIALS("1.7299", "1.0e-7")
       "emitter: {z_A: center, orientation: parallel}\n"
       "sweep:\n  omega_A: " PBG_GRID_PLAIN "\n  periods_down: [5, 6, 7]\n"
       "outputs: [W_top]\n"},
      {"fig2b", "W_top vs omega_A, defect layer, parallel dipole, 5 upper / 5,6,7 lower periods",
       "name: fig2b\n"
       "structure:\n  periods_up: 5\n  periods_down: 5\n  defect: true\n  adjacent_material: H\n"
       PBG_PRESET_MATERIALS("1.7299", "1.0e-7")
       "emitter: {z_A: center, orientation: parallel}\n"
       "sweep:\n  omega_A: " PBG_GRID_DEFECT "\n  periods_down: [5, 6, 7]\n"
       "outputs: [W_top]\n"},
      {"fig2b_inset",
       "W_top switching by tuning omega_P 1.7299 -> 1.7529 omega_T, defect, 5/7 periods",
       "name: fig2b_inset\n"
       "structure:\n  periods_up: 5\n  periods_down: 7\n  defect: true\n  adjacent_material: H\n"
       "  design_omega_P: 1.7299\n"
       PBG_PRESET_MATERIALS("1.7299", "1.0e-7")
       "emitter: {z_A: center, orientation: parallel}\n"
       "sweep:\n  omega_A: {start: 0.995, stop: 1.0, count: 101}\n  omega_P: [1.7299, 1.7529]\n"
       "outputs: [W_top]\n"},
      {"fig2a_inset",
       "W_top near the band edge under the same omega_P tuning, no defect, 5/5 periods",
       "name: fig2a_inset\n"
       "structure:\n  periods_up: 5\n  periods_down: 5\n  defect: false\n  adjacent_material: H\n"
       "  design_omega_P: 1.7299\n"
       PBG_PRESET_MATERIALS("1.7299", "1.0e-7")
       "emitter: {z_A: center, orientation: parallel}\n"
       "sweep:\n  omega_A: {start: 1.2, stop: 1.26, count: 61}\n  omega_P: [1.7299, 1.7529]\n"
       "outputs: [W_top]\n"},
      {"fig3a", "W_top vs omega_A, no defect, perpendicular dipole, 5 upper / 5,6,7 lower periods",
       "name: fig3a\n"
       "structure:\n  periods_up: 5\n  periods_down: 5\n  defect: false\n  adjacent_material: H\n"
       PBG_PRESET_MATERIALS("1.7299", "1.0e-7")
       "emitter: {z_A: center, orientation: perpendicular}\n"
       "sweep:\n  omega_A: " PBG_GRID_PLAIN "\n  periods_down: [5, 6, 7]\n"
       "outputs: [W_top]\n"},
      {"fig3b", "W_top vs omega_A, defect layer, perpendicular dipole, 5 upper / 5,6,7 lower periods",
       "name: fig3b\n"
       "structure:\n  periods_up: 5\n  periods_down: 5\n  defect: true\n  adjacent_material: H\n"
       PBG_PRESET_MATERIALS("1.7299", "1.0e-7")
       "emitter: {z_A: center, orientation: perpendicular}\n"
       "sweep:\n  omega_A: " PBG_GRID_DEFECT "\n  periods_down: [5, 6, 7]\n"
       "outputs: [W_top]\n"},
      {"fig4a", "W_top vs omega_A for gamma in {1e-7, 1e-3, 1e-2}, no defect, 5/7 periods",
       "name: fig4a\n"
       "structure:\n  periods_up: 5\n  periods_down: 7\n  defect: false\n  adjacent_material: H\n"
       PBG_PRESET_MATERIALS("1.7299", "1.0e-7")
       "emitter: {z_A: center, orientation: parallel}\n"
       "sweep:\n  omega_A: " PBG_GRID_PLAIN "\n  gamma: [1.0e-7, 1.0e-3, 1.0e-2]\n"
       "outputs: [W_top]\n"},
      {"fig4b", "W_top vs omega_A for gamma in {1e-7, 1e-3, 1e-2}, defect, 5/7 periods",
       "name: fig4b\n"
       "structure:\n  periods_up: 5\n  periods_down: 7\n  defect: true\n  adjacent_material: H\n"
       PBG_PRESET_MATERIALS("1.7299", "1.0e-7")
       "emitter: {z_A: center, orientation: parallel}\n"
       "sweep:\n  omega_A: " PBG_GRID_DEFECT "\n  gamma: [1.0e-7, 1.0e-3, 1.0e-2]\n"
       "outputs: [W_top]\n"},
      {"fig5a", "decay-rate spectra, no defect, parallel dipole, 5/5 periods",
       "name: fig5a\n"
       "structure:\n  periods_up: 5\n  periods_down: 5\n  defect: false\n  adjacent_material: H\n"
       PBG_PRESET_MATERIALS("1.7299", "1.0e-7")
       "emitter: {z_A: center, orientation: parallel}\n"
       "sweep:\n  omega_A: " PBG_GRID_PLAIN "\n"
       "outputs: [gamma_total, gamma_rad, gamma_ratio]\n"},
      {"fig5b", "decay-rate spectra, defect, parallel dipole, 5/5 periods",
       "name: fig5b\n"
       "structure:\n  periods_up: 5\n  periods_down: 5\n  defect: true\n  adjacent_material: H\n"
       PBG_PRESET_MATERIALS("1.7299", "1.0e-7")
       "emitter: {z_A: center, orientation: parallel}\n"
       "sweep:\n  omega_A: " PBG_GRID_DEFECT "\n"
       "outputs: [gamma_total, gamma_rad, gamma_ratio]\n"},
      {"fig6a", "decay rates vs emitter position at omega_A = 1.25, no defect, 5/5 periods",
       "name: fig6a\n"
       "structure:\n  periods_up: 5\n  periods_down: 5\n  defect: false\n  adjacent_material: H\n"
       PBG_PRESET_MATERIALS("1.7299", "1.0e-7")
       "emitter: {omega_A: 1.25, orientation: parallel}\n"
       "sweep:\n  z_A: {start: 0.02, stop: 0.98, count: 49, unit: layer}\n"
       "outputs: [gamma_total, gamma_rad, gamma_ratio]\n"},
      {"fig6b", "decay rates vs emitter position at omega_A = 1.01, defect, 5/5 periods",
       "name: fig6b\n"
       "structure:\n  periods_up: 5\n  periods_down: 5\n  defect: true\n  adjacent_material: H\n"
       PBG_PRESET_MATERIALS("1.7299", "1.0e-7")
       "emitter: {omega_A: 1.01, orientation: parallel}\n"
       "sweep:\n  z_A: {start: 0.02, stop: 0.98, count: 49, unit: layer}\n"
       "outputs: [gamma_total, gamma_rad, gamma_ratio]\n"},
      {"fig7a", "W(theta) map above the device, no defect, omega_P = 1.7529 omega_T, 5/5 periods",
       "name: fig7a\n"
       "structure:\n  periods_up: 5\n  periods_down: 5\n  defect: false\n  adjacent_material: H\n"
       "  design_omega_P: 1.7299\n"
       PBG_PRESET_MATERIALS("1.7529", "1.0e-7")
       "emitter: {z_A: center, orientation: parallel}\n"
       "sweep:\n  omega_A: {start: 1.2, stop: 1.3, count: 101}\n"
       "outputs: [W_theta]\n"
       "theta: {count: 721, side: above}\n"},
      {"fig7b", "W(theta) map above the device, defect, omega_P = 1.7529 omega_T, 5/5 periods",
       "name: fig7b\n"
       "structure:\n  periods_up: 5\n  periods_down: 5\n  defect: true\n  adjacent_material: H\n"
       "  design_omega_P: 1.7299\n"
       PBG_PRESET_MATERIALS("1.7529", "1.0e-7")
       "emitter: {z_A: center, orientation: parallel}\n"
       "sweep:\n  omega_A: {start: 0.995, stop: 1.0, count: 101}\n"
       "outputs: [W_theta]\n"
       "theta: {count: 721, side: above}\n"},
      {"vacuum", "all-vacuum stack; every rate is 1 and W_top = W_bottom = 1/2",
       "name: vacuum\n"
       "structure:\n  periods_up: 1\n  periods_down: 1\n  defect: false\n"
       "emitter: {z_A: center, orientation: parallel}\n"
       "sweep:\n  omega_A: [0.9, 1.0, 1.1]\n"
       "outputs: [gamma_total, gamma_rad, gamma_ratio, W_top, W_bottom]\n"},
  };
  return table;
}

#undef PBG_PRESET_MATERIALS
#undef PBG_GRID_PLAIN
#undef PBG_GRID_DEFECT

}  // namespace detail

inline const std::vector<PresetInfo>& presets() { return detail::preset_table(); }

inline Scenario preset(std::string_view name) {
  for (const auto& p : presets()) {
    if (name == p.name) {
      auto sc = load_scenario(p.document);
      sc.description = p.description;
      return sc;
    }
  }
  throw ScenarioError("preset", "unknown preset '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Execution

struct ResultRow {
  std::vector<double> coords;                // sweep coordinates (plus theta for W_theta)
  std::vector<std::optional<double>> values;  // empty optional marks a failed point
  double quad_err = 0.0;
  std::string flags;
  bool failed = false;
};

struct ResultTable {
  nlohmann::ordered_json metadata;
  std::vector<std::string> columns;
  std::vector<bool> integer_column;
  std::size_t coord_columns = 0;
  std::vector<ResultRow> rows;
  std::size_t points = 0;
  std::size_t failed_points = 0;
};

namespace detail {

struct PointOutcome {
  std::vector<ResultRow> rows;
  bool failed = false;
};

inline std::vector<double> point_coords(const Scenario& sc, const PointParams& p, bool force_omega) {
  std::vector<double> c;
  if (force_omega && !sc.axis(Axis::omega_A)) c.push_back(p.omega_A);
  for (const auto& ax : sc.sweep) {
    switch (ax.axis) {
      case Axis::omega_A: c.push_back(p.omega_A); break;
      case Axis::z_A: c.push_back(p.z_A); break;
      case Axis::gamma: c.push_back(*p.gamma); break;
      case Axis::omega_P: c.push_back(*p.omega_P); break;
      case Axis::periods_down: c.push_back(p.periods_down); break;
    }
  }
  return c;
}

inline PointOutcome evaluate_point(const Scenario& sc, const PointParams& p) {
  PointOutcome out;
  const bool long_format = sc.wants(Quantity::W_theta);
  const auto coords = point_coords(sc, p, long_format);
  try {
    const auto stack = build_device(sc.structure, p);
    const EmitterConfig emitter{p.omega_A, p.z_A, sc.emitter.w_z, sc.emitter.w_par};
    EngineOptions opt;
    opt.quad = sc.tolerances;
    const EmissionProblem prob(stack, emitter, opt);
    Diagnostics diag = prob.diagnostics();

    if (long_format) {
      const auto pattern = angular_energy(prob, sc.theta.side, theta_grid(sc.theta.count));
      const auto kept = sc.local_field.enabled
                            ? corrected_energy(pattern, sc.local_field.eps_host)
                            : pattern;
      diag = prob.rate_diagnostics();
      for (std::size_t i = 0; i < kept.thetas.size(); ++i) {
        ResultRow r;
        r.coords = coords;
        r.coords.push_back(kept.thetas[i]);
        r.values.push_back(kept.values[i]);
        r.quad_err = prob.total().error;
        r.flags = diag.to_string();
        out.rows.push_back(std::move(r));
      }
      return out;
    }

    const bool want_rad = sc.wants(Quantity::gamma_rad) || sc.wants(Quantity::gamma_ratio);
    RateResult rates;
    rates.gamma_total = prob.total().value;
    rates.quadrature_error = prob.total().error;
    rates.diagnostics = prob.rate_diagnostics();
    if (want_rad) rates = prob.rates();
    if (sc.local_field.enabled) rates = corrected_rates(rates, sc.local_field.eps_host);
    double err = rates.quadrature_error;
    std::optional<EnergyResult> energy;
    if (sc.wants(Quantity::W_top) || sc.wants(Quantity::W_bottom)) {
      energy = total_energy(prob);
      if (sc.local_field.enabled) energy = corrected_energy(*energy, sc.local_field.eps_host);
      err = std::max(err, energy->quadrature_error);
      diag |= energy->diagnostics;
    }
    diag |= rates.diagnostics;
    ResultRow r;
    r.coords = coords;
    for (auto q : sc.outputs) {
      switch (q) {
        case Quantity::gamma_total: r.values.push_back(rates.gamma_total); break;
        case Quantity::gamma_rad: r.values.push_back(rates.gamma_rad); break;
        case Quantity::gamma_ratio: r.values.push_back(rates.gamma_rad / rates.gamma_total); break;
        case Quantity::W_top: r.values.push_back(energy->W_top); break;
        case Quantity::W_bottom: r.values.push_back(energy->W_bottom); break;
        case Quantity::W_theta: break;
      }
    }
    r.quad_err = err;
    r.flags = diag.to_string();
    out.rows.push_back(std::move(r));
  } catch (const std::exception& e) {
    out.failed = true;
    ResultRow r;
    r.coords = coords;
    if (long_format) r.coords.push_back(std::nan(""));
    r.values.assign(long_format ? 1 : sc.outputs.size(), std::nullopt);
    r.quad_err = std::nan("");
    r.failed = true;
    r.flags = std::string("error: ") + e.what();
    if (const auto* q = dynamic_cast<const QuadratureError*>(&e))
      r.quad_err = q->partial().error;
    out.rows.push_back(std::move(r));
  }
  return out;
}

}  // namespace detail

/// Evaluates every sweep point with `jobs` workers. Each point is computed
/// independently and rows are assembled by grid index, so the table does not
/// depend on the worker count.
inline ResultTable run(const Scenario& sc, unsigned jobs = 1) {
  const auto points = sweep_points(sc);
  std::vector<detail::PointOutcome> outcomes(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++)
      outcomes[i] = detail::evaluate_point(sc, points[i]);
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(points.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }

  ResultTable table;
  const bool long_format = sc.wants(Quantity::W_theta);
  if (long_format && !sc.axis(Axis::omega_A)) {
    table.columns.push_back("omega_A");
    table.integer_column.push_back(false);
  }
  for (const auto& ax : sc.sweep) {
    table.columns.push_back(to_string(ax.axis));
    table.integer_column.push_back(ax.axis == Axis::periods_down);
  }
  if (long_format) {
    table.columns.push_back("theta");
    table.integer_column.push_back(false);
  }
  table.coord_columns = table.columns.size();
  for (auto q : sc.outputs) {
    table.columns.push_back(to_string(q));
    table.integer_column.push_back(false);
  }
  table.columns.push_back("quad_err");
  table.columns.push_back("flags");
  table.integer_column.push_back(false);
  table.integer_column.push_back(false);

  table.points = points.size();
  for (auto& o : outcomes) {
    if (o.failed) ++table.failed_points;
    for (auto& r : o.rows) table.rows.push_back(std::move(r));
  }

  using oj = nlohmann::ordered_json;
  auto& m = table.metadata;
  m["scenario_hash"] = scenario_hash(sc);
  m["engine_version"] = engine_version;
  m["tolerances"] = {{"rel", sc.tolerances.rel_tol},
                     {"abs", sc.tolerances.abs_tol},
                     {"max_panels", sc.tolerances.max_panels}};
  m["points"] = table.points;
  m["failed_points"] = table.failed_points;
  oj lf = {{"enabled", sc.local_field.enabled},
           {"eps_host", detail::complex_json(sc.local_field.eps_host)}};
  if (sc.local_field.enabled) {
    const LocalFieldFactor f(sc.local_field.eps_host);
    lf["rate_factor"] = f.factor_sq_abs;
    lf["audit"] = oj::array({"gamma_total and gamma_rad scaled by rate_factor",
                             "W_top, W_bottom and W_theta unchanged: the factor cancels"});
  }
  m["local_field"] = lf;
  m["scenario"] = to_json(sc);
  return table;
}

// ---------------------------------------------------------------------------
// Output

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline void emit_csv(const ResultTable& t, std::ostream& os) {
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    os << (i ? "," : "") << csv_field(t.columns[i]);
  os << '\n';
  for (const auto& r : t.rows) {
    std::size_t col = 0;
    auto sep = [&] { return col++ ? "," : ""; };
    for (double c : r.coords) {
      os << sep();
      if (t.integer_column[col - 1]) os << static_cast<long long>(c);
      else os << format_double(c);
    }
    for (const auto& v : r.values) {
      os << sep();
      if (v) os << format_double(*v);
    }
    os << sep() << format_double(r.quad_err);
    os << sep() << csv_field(r.flags);
    os << '\n';
  }
}

inline void emit_json(const ResultTable& t, std::ostream& os) {
  using oj = nlohmann::ordered_json;
  oj doc;
  doc["metadata"] = t.metadata;
  doc["columns"] = t.columns;
  oj rows = oj::array();
  auto num = [](double v) -> oj { return std::isfinite(v) ? oj(v) : oj(nullptr); };
  for (const auto& r : t.rows) {
    oj row;
    std::size_t col = 0;
    for (double c : r.coords) {
      if (t.integer_column[col]) row[t.columns[col]] = static_cast<long long>(c);
      else row[t.columns[col]] = num(c);
      ++col;
    }
    for (const auto& v : r.values) row[t.columns[col++]] = v ? num(*v) : oj(nullptr);
    row["quad_err"] = num(r.quad_err);
    row["flags"] = r.flags;
    rows.push_back(std::move(row));
  }
  doc["rows"] = std::move(rows);
  os << doc.dump(2) << '\n';
}

enum class Format { csv, json };

inline void emit(const ResultTable& t, Format f, std::ostream& os) {
  if (f == Format::csv) emit_csv(t, os);
  else emit_json(t, os);
}

}  // namespace pbg

#endif  // PBG_SCENARIO_HPP
