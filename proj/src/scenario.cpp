#include "harvest/scenario.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace harvest {

using nlohmann::json;

namespace {

std::string join_problems(const std::vector<std::string>& p) {
  std::string s = "invalid scenario:";
  for (const auto& m : p) s += "\n  " + m;
  return s;
}

class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  bool object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
      fail(path, "expected an object");
      return false;
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      bool known = false;
      for (const char* k : allowed) known = known || it.key() == k;
      if (!known) fail(path + "." + it.key(), "unknown key");
    }
    return true;
  }

  const json* child(const json& j, const char* key, const std::string& path, bool required) {
    auto it = j.find(key);
    if (it == j.end()) {
      if (required) fail(path + "." + key, "missing");
      return nullptr;
    }
    return &*it;
  }

  void number(const json& j, const char* key, const std::string& path, double& out, bool required = false) {
    const json* c = child(j, key, path, required);
    if (!c) return;
    if (!c->is_number()) return fail(path + "." + key, "expected a number");
    out = c->get<double>();
  }

  void integer(const json& j, const char* key, const std::string& path, std::int64_t& out, bool required = false) {
    const json* c = child(j, key, path, required);
    if (!c) return;
    if (!c->is_number_integer()) return fail(path + "." + key, "expected an integer");
    out = c->get<std::int64_t>();
  }

  void integer(const json& j, const char* key, const std::string& path, int& out, bool required = false) {
    std::int64_t v = out;
    integer(j, key, path, v, required);
    out = static_cast<int>(v);
  }

  void boolean(const json& j, const char* key, const std::string& path, bool& out) {
    const json* c = child(j, key, path, false);
    if (!c) return;
    if (!c->is_boolean()) return fail(path + "." + key, "expected true or false");
    out = c->get<bool>();
  }

  void string(const json& j, const char* key, const std::string& path, std::string& out) {
    const json* c = child(j, key, path, false);
    if (!c) return;
    if (!c->is_string()) return fail(path + "." + key, "expected a string");
    out = c->get<std::string>();
  }

  template <int N>
  bool numbers(const json& j, const std::string& path, double (&out)[N]) {
    if (!j.is_array() || j.size() != N) {
      fail(path, "expected an array of " + std::to_string(N) + " numbers");
      return false;
    }
    for (int i = 0; i < N; ++i) {
      if (!j[i].is_number()) {
        fail(path + "[" + std::to_string(i) + "]", "expected a number");
        return false;
      }
      out[i] = j[i].get<double>();
    }
    return true;
  }

  void vec3(const json& j, const char* key, const std::string& path, Vec3& out, bool required = false) {
    const json* c = child(j, key, path, required);
    if (!c) return;
    double v[3];
    if (numbers(*c, path + "." + key, v)) out = Vec3(v[0], v[1], v[2]);
  }

  void color(const json& j, const char* key, const std::string& path, Rgb& out) {
    const json* c = child(j, key, path, false);
    if (!c) return;
    double v[3];
    if (!numbers(*c, path + "." + key, v)) return;
    for (int i = 0; i < 3; ++i) {
      if (v[i] < 0 || v[i] > 255 || v[i] != std::floor(v[i])) {
        return fail(path + "." + key, "expected integers in [0, 255]");
      }
    }
    out = {static_cast<std::uint8_t>(v[0]), static_cast<std::uint8_t>(v[1]), static_cast<std::uint8_t>(v[2])};
  }

  void transform(const json& j, const char* key, const std::string& path, Eigen::Isometry3d& out,
                 bool required = false) {
    const json* c = child(j, key, path, required);
    if (!c) return;
    const std::string p = path + "." + key;
    if (!object(*c, p, {"xyz", "rpy"})) return;
    Vec3 xyz = Vec3::Zero(), rpy = Vec3::Zero();
    vec3(*c, "xyz", p, xyz);
    vec3(*c, "rpy", p, rpy);
    out = Eigen::Isometry3d::Identity();
    out.linear() = rotation_from_rpy(rpy);
    out.translation() = xyz;
  }

  void arm(const json& j, const std::string& path, ArmModel& m) {
    if (!object(j, path, {"base", "tool", "joints", "capsules"})) return;
    transform(j, "base", path, m.base, true);
    transform(j, "tool", path, m.tool, true);
    if (const json* js = child(j, "joints", path, true)) {
      if (!js->is_array() || js->size() != kArmDof) {
        fail(path + ".joints", "expected an array of " + std::to_string(kArmDof) + " joints");
      } else {
        for (int i = 0; i < kArmDof; ++i) {
          const std::string p = path + ".joints[" + std::to_string(i) + "]";
          const json& jj = (*js)[i];
          if (!object(jj, p, {"origin", "axis", "lower", "upper", "max_velocity"})) continue;
          JointDescriptor& d = m.joints[i];
          transform(jj, "origin", p, d.origin, true);
          vec3(jj, "axis", p, d.axis, true);
          number(jj, "lower", p, d.lower, true);
          number(jj, "upper", p, d.upper, true);
          number(jj, "max_velocity", p, d.max_velocity, true);
          const double n = d.axis.norm();
          if (n < 1e-9) {
            fail(p + ".axis", "must be non-zero");
          } else {
            d.axis /= n;
          }
        }
      }
    }
    if (const json* cs = child(j, "capsules", path, false)) {
      if (!cs->is_array()) return fail(path + ".capsules", "expected an array");
      for (size_t i = 0; i < cs->size(); ++i) {
        const std::string p = path + ".capsules[" + std::to_string(i) + "]";
        const json& cj = (*cs)[i];
        if (!object(cj, p, {"name", "link", "a", "b", "radius", "self_collision", "environment"})) continue;
        LinkCapsule c;
        string(cj, "name", p, c.name);
        if (const json* l = child(cj, "link", p, true)) {
          if (l->is_string() && l->get<std::string>() == "tool") {
            c.link = LinkCapsule::kToolLink;
          } else if (l->is_number_integer() && l->get<int>() >= 0 && l->get<int>() < kArmDof) {
            c.link = l->get<int>();
          } else {
            fail(p + ".link", "expected a joint index 0-6 or \"tool\"");
          }
        }
        vec3(cj, "a", p, c.a, true);
        vec3(cj, "b", p, c.b, true);
        number(cj, "radius", p, c.radius, true);
        boolean(cj, "self_collision", p, c.self_collision);
        boolean(cj, "environment", p, c.environment);
        if (!(c.radius > 0.0)) fail(p + ".radius", "must be positive");
        m.capsules.push_back(c);
      }
    }
  }

  void joint_values(const json& j, const char* key, const std::string& path, Eigen::Ref<JointVector> out) {
    const json* c = child(j, key, path, true);
    if (!c) return;
    double v[kArmDof];
    if (!numbers(*c, path + "." + key, v)) return;
    for (int i = 0; i < kArmDof; ++i) out[i] = v[i];
  }

  void scene(const json& j, const std::string& path, SceneDescription& s) {
    if (!object(j, path, {"trunk", "fruits", "occluders", "background", "depth_noise"})) return;
    if (const json* t = child(j, "trunk", path, false); t && !t->is_null()) {
      const std::string p = path + ".trunk";
      if (object(*t, p, {"axis_point", "radius", "color"})) {
        SceneTrunk tr;
        vec3(*t, "axis_point", p, tr.axis_point, true);
        number(*t, "radius", p, tr.radius, true);
        color(*t, "color", p, tr.color);
        if (!(tr.radius > 0.0)) fail(p + ".radius", "must be positive");
        if (!(tr.axis_point.z() > tr.radius)) fail(p + ".axis_point", "trunk must lie in front of the camera");
        s.trunk = tr;
      }
    }
    if (const json* fs = child(j, "fruits", path, true)) {
      if (!fs->is_array()) {
        fail(path + ".fruits", "expected an array");
      } else {
        for (size_t i = 0; i < fs->size(); ++i) {
          const std::string p = path + ".fruits[" + std::to_string(i) + "]";
          const json& fj = (*fs)[i];
          if (!object(fj, p, {"name", "center", "d_h", "d_v", "color"})) continue;
          SceneFruit f;
          f.name = "fruit_" + std::to_string(i);
          string(fj, "name", p, f.name);
          vec3(fj, "center", p, f.center, true);
          number(fj, "d_h", p, f.d_h, true);
          number(fj, "d_v", p, f.d_v, true);
          color(fj, "color", p, f.color);
          if (!(f.d_h > 0.0)) fail(p + ".d_h", "must be positive");
          if (!(f.d_v > 0.0)) fail(p + ".d_v", "must be positive");
          if (!(f.center.z() > 0.0)) fail(p + ".center", "z must be positive (in front of the camera)");
          s.fruits.push_back(f);
        }
      }
    }
    if (const json* os = child(j, "occluders", path, false)) {
      if (!os->is_array()) {
        fail(path + ".occluders", "expected an array");
      } else {
        for (size_t i = 0; i < os->size(); ++i) {
          const std::string p = path + ".occluders[" + std::to_string(i) + "]";
          const json& oj = (*os)[i];
          if (!object(oj, p, {"min", "max", "color"})) continue;
          SceneBox b;
          vec3(oj, "min", p, b.min, true);
          vec3(oj, "max", p, b.max, true);
          color(oj, "color", p, b.color);
          if (!(b.min.array() < b.max.array()).all()) fail(p, "min must be below max on every axis");
          s.occluders.push_back(b);
        }
      }
    }
    if (const json* bg = child(j, "background", path, false)) {
      const std::string p = path + ".background";
      if (object(*bg, p, {"color", "depth"})) {
        color(*bg, "color", p, s.background.color);
        number(*bg, "depth", p, s.background.depth);
        if (!(s.background.depth > 0.0)) fail(p + ".depth", "must be positive");
      }
    }
    number(j, "depth_noise", path, s.depth_noise);
    if (s.depth_noise < 0.0) fail(path + ".depth_noise", "must be non-negative");
  }

  void controller(const json& j, const std::string& path, ControllerParams& c) {
    if (!object(j, path,
                {"d_s_cut", "d_z", "kp_position", "kp_orientation", "v_max_linear", "v_max_angular", "tol_position",
                 "tol_orientation", "phase_timeout", "dwell", "exempt_target"}))
      return;
    number(j, "d_s_cut", path, c.d_s_cut);
    number(j, "d_z", path, c.d_z);
    number(j, "kp_position", path, c.kp_position);
    number(j, "kp_orientation", path, c.kp_orientation);
    number(j, "v_max_linear", path, c.v_max_linear);
    number(j, "v_max_angular", path, c.v_max_angular);
    number(j, "tol_position", path, c.tol_position);
    number(j, "tol_orientation", path, c.tol_orientation);
    number(j, "phase_timeout", path, c.phase_timeout);
    number(j, "dwell", path, c.dwell);
    boolean(j, "exempt_target", path, c.exempt_target);
    if (const std::string msg = c.validate(); !msg.empty()) fail(path, msg);
  }

  void perception(const json& j, const std::string& path, PerceptionParams& p) {
    if (!object(j, path, {"hsv", "depth_max", "min_tree_pixels", "jump_threshold", "stale_frames"})) return;
    if (const json* h = child(j, "hsv", path, false)) {
      const std::string hp = path + ".hsv";
      if (object(*h, hp, {"h", "s", "v"})) {
        auto pair = [&](const char* key, int& lo, int& hi) {
          const json* c = child(*h, key, hp, false);
          if (!c) return;
          double v[2];
          if (!numbers(*c, hp + "." + key, v)) return;
          lo = static_cast<int>(v[0]);
          hi = static_cast<int>(v[1]);
        };
        pair("h", p.tree.hsv.h_lo, p.tree.hsv.h_hi);
        pair("s", p.tree.hsv.s_lo, p.tree.hsv.s_hi);
        pair("v", p.tree.hsv.v_lo, p.tree.hsv.v_hi);
        if (!p.tree.hsv.valid()) fail(hp, "bounds must be ordered and within H 0-180, S/V 0-255");
      }
    }
    number(j, "depth_max", path, p.tree.depth_max);
    integer(j, "min_tree_pixels", path, p.tree.min_pixels);
    number(j, "jump_threshold", path, p.registry.jump_threshold);
    integer(j, "stale_frames", path, p.registry.stale_frames);
    if (!(p.tree.depth_max > 0.0)) fail(path + ".depth_max", "must be positive");
    if (p.tree.min_pixels < 1) fail(path + ".min_tree_pixels", "must be at least 1");
    if (!(p.registry.jump_threshold > 0.0)) fail(path + ".jump_threshold", "must be positive");
    if (p.registry.stale_frames < 1) fail(path + ".stale_frames", "must be at least 1");
  }
};

}  // namespace

ScenarioError::ScenarioError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

std::vector<std::string> validate_scenario(const Scenario& s) {
  std::vector<std::string> out;
  if (!s.camera.valid()) out.push_back("camera: focal lengths must be positive and the principal point inside the image");
  if (!(s.dt > 0.0) || !std::isfinite(s.dt)) out.push_back("dt: must be positive");
  if (!(s.max_time > 0.0) || !std::isfinite(s.max_time)) out.push_back("max_time: must be positive");
  if (!(s.perception_rate > 0.0)) out.push_back("perception_rate: must be positive");
  if (s.dt > 0.0 && s.perception_rate * s.dt > 1.0) out.push_back("perception_rate: must not exceed the control rate 1/dt");
  if (!s.damper.valid()) out.push_back("damper: need activation > safety > 0 and xi > 0");
  if (!s.perception.tracker.valid()) out.push_back("tracker: need 0 < min_iou <= 1, n_init >= 1, max_age >= 1");
  const std::pair<const char*, const ArmModel*> arms[] = {{"arms.cutting", &s.arms.cutting},
                                                          {"arms.collecting", &s.arms.collecting}};
  for (const auto& [path, m] : arms) {
    try {
      m->validate();
    } catch (const std::exception& e) {
      out.push_back(std::string(path) + ": " + e.what());
    }
  }
  if (out.empty()) {
    if (!s.arms.cutting.within_limits(s.initial.cutting()))
      out.push_back("initial_q.cutting: outside the joint limits");
    if (!s.arms.collecting.within_limits(s.initial.collecting()))
      out.push_back("initial_q.collecting: outside the joint limits");
  }
  return out;
}

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError({std::string("(document): ") + e.what()});
  }
  Reader r;
  Scenario s;
  const std::string root = "scenario";
  if (!r.object(j, root,
                {"schema_version", "name", "camera", "arms", "initial_q", "scene", "controller", "damper", "tracker",
                 "perception", "dt", "max_time", "perception_rate", "seed"})) {
    throw ScenarioError(r.errors);
  }
  std::int64_t version = kScenarioSchemaVersion;
  r.integer(j, "schema_version", root, version, true);
  if (version != kScenarioSchemaVersion) {
    r.fail(root + ".schema_version", "unsupported version " + std::to_string(version));
  }
  r.string(j, "name", root, s.name);

  if (const json* c = r.child(j, "camera", root, true)) {
    const std::string p = root + ".camera";
    if (r.object(*c, p, {"fx", "fy", "cx", "cy", "width", "height"})) {
      r.number(*c, "fx", p, s.camera.fx, true);
      r.number(*c, "fy", p, s.camera.fy, true);
      r.number(*c, "cx", p, s.camera.cx, true);
      r.number(*c, "cy", p, s.camera.cy, true);
      r.integer(*c, "width", p, s.camera.width, true);
      r.integer(*c, "height", p, s.camera.height, true);
    }
  }
  if (const json* a = r.child(j, "arms", root, true)) {
    const std::string p = root + ".arms";
    if (r.object(*a, p, {"cutting", "collecting"})) {
      if (const json* c = r.child(*a, "cutting", p, true)) r.arm(*c, p + ".cutting", s.arms.cutting);
      if (const json* c = r.child(*a, "collecting", p, true)) r.arm(*c, p + ".collecting", s.arms.collecting);
      s.arms.cutting.name = "cutting";
      s.arms.collecting.name = "collecting";
    }
  }
  if (const json* q = r.child(j, "initial_q", root, true)) {
    const std::string p = root + ".initial_q";
    if (r.object(*q, p, {"cutting", "collecting"})) {
      r.joint_values(*q, "cutting", p, s.initial.q.head<kArmDof>());
      r.joint_values(*q, "collecting", p, s.initial.q.tail<kArmDof>());
    }
  }
  if (const json* sc = r.child(j, "scene", root, true)) r.scene(*sc, root + ".scene", s.scene);
  if (const json* c = r.child(j, "controller", root, false)) r.controller(*c, root + ".controller", s.controller);
  if (const json* d = r.child(j, "damper", root, false)) {
    const std::string p = root + ".damper";
    if (r.object(*d, p, {"activation", "safety", "xi"})) {
      r.number(*d, "activation", p, s.damper.activation);
      r.number(*d, "safety", p, s.damper.safety);
      r.number(*d, "xi", p, s.damper.xi);
    }
  }
  if (const json* t = r.child(j, "tracker", root, false)) {
    const std::string p = root + ".tracker";
    if (r.object(*t, p, {"min_iou", "n_init", "max_age"})) {
      r.number(*t, "min_iou", p, s.perception.tracker.min_iou);
      r.integer(*t, "n_init", p, s.perception.tracker.n_init);
      r.integer(*t, "max_age", p, s.perception.tracker.max_age);
    }
  }
  if (const json* pj = r.child(j, "perception", root, false)) r.perception(*pj, root + ".perception", s.perception);
  r.number(j, "dt", root, s.dt);
  r.number(j, "max_time", root, s.max_time);
  r.number(j, "perception_rate", root, s.perception_rate);
  if (const json* seed = r.child(j, "seed", root, false)) {
    if (!seed->is_number_unsigned() && !(seed->is_number_integer() && seed->get<std::int64_t>() >= 0)) {
      r.fail(root + ".seed", "expected a non-negative integer");
    } else {
      s.seed = seed->get<std::uint64_t>();
    }
  }
  for (const std::string& m : validate_scenario(s)) r.errors.push_back(root + "." + m);
  if (!r.errors.empty()) throw ScenarioError(r.errors);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace harvest
