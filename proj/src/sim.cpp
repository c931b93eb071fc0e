#include "harvest/sim.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <json.hpp>

namespace harvest {

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Done: return "done";
    case RunStatus::Timeout: return "timeout";
    case RunStatus::Aborted: return "aborted";
  }
  return "unknown";
}

int integrate(const DualArmModels& models, DualArmState& state, const DualJointVector& qdot, double dt) {
  if (!qdot.allFinite()) throw SimulationError("non-finite joint velocity command");
  state.q += qdot * dt;
  int clamped = 0;
  for (int i = 0; i < kDualDof; ++i) {
    const JointDescriptor& j = i < kArmDof ? models.cutting.joints[i] : models.collecting.joints[i - kArmDof];
    const double c = std::clamp(state.q[i], j.lower, j.upper);
    if (std::abs(c - state.q[i]) > 1e-9) ++clamped;
    state.q[i] = c;
  }
  return clamped;
}

int nearest_scene_fruit(const SceneDescription& scene, const Vec3& p, double max_distance) {
  int best = -1;
  double best_d = max_distance;
  for (size_t i = 0; i < scene.fruits.size(); ++i) {
    const double d = (scene.fruits[i].center - p).norm();
    if (d <= best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

namespace {

struct TruthContact {
  std::string key;
  double clearance;
};

// Penetration test against the true scene. Fruits use the ellipsoid grown by
// the capsule radius, which contains the exact swept volume.
void truth_contacts(const DualArmModels& models, const DualArmState& state, const SceneDescription& scene,
                    std::vector<TruthContact>& contacts, double& trunk_clearance, double& fruit_clearance) {
  const ArmFrames frames[2] = {compute_frames(models.cutting, state.cutting()),
                               compute_frames(models.collecting, state.collecting())};
  const ArmModel* arms[2] = {&models.cutting, &models.collecting};
  std::vector<std::pair<std::string, std::pair<Segment, double>>> self[2];
  for (int a = 0; a < 2; ++a) {
    for (const LinkCapsule& c : arms[a]->capsules) {
      const auto& fr = frames[a].frame_of(c.link);
      const Segment seg{fr * c.a, fr * c.b};
      const std::string who = arms[a]->name + "." + c.name;
      if (c.self_collision) self[a].push_back({who, {seg, c.radius}});
      if (!c.environment) continue;
      if (scene.trunk) {
        const Witness w = closest_points_segment_line(seg, scene.trunk->axis_point, Vec3::UnitY());
        const double d = w.distance - c.radius - scene.trunk->radius;
        trunk_clearance = std::min(trunk_clearance, d);
        if (d < 0.0) contacts.push_back({who + "|trunk", d});
      }
      for (const SceneFruit& f : scene.fruits) {
        const Vec3 grown(f.d_h + c.radius, f.d_v + c.radius, f.d_h + c.radius);
        // closest segment point in the scaled space where the grown ellipsoid is a unit sphere
        const Segment scaled{(seg.a - f.center).cwiseQuotient(grown), (seg.b - f.center).cwiseQuotient(grown)};
        const double r = closest_point_on_segment(Vec3::Zero(), scaled).norm();
        const Vec3 p = closest_point_on_segment(f.center, seg);
        fruit_clearance = std::min(fruit_clearance, (p - f.center).norm() - c.radius - std::max(f.d_h, f.d_v));
        if (r < 1.0) contacts.push_back({who + "|" + f.name, r - 1.0});
      }
    }
  }
  for (const auto& [na, sa] : self[0]) {
    for (const auto& [nb, sb] : self[1]) {
      const double d = dist_segment_segment(sa.first, sb.first) - sa.second - sb.second;
      if (d < 0.0) contacts.push_back({na + "|" + nb, d});
    }
  }
}

}  // namespace

RunLog run(const Scenario& sc) {
  const auto wall_start = std::chrono::steady_clock::now();
  RunLog log;
  RunSummary& sum = log.summary;
  sum.scenario = sc.name;
  sum.simd = to_string(kernels::active_isa());

  SceneDescription scene = sc.scene;
  DualArmState state = sc.initial;
  PerceptionPipeline perception(sc.camera, sc.perception);
  HarvestController controller(sc.arms, sc.controller, sc.damper, sc.dt);
  PerceptionSnapshot snapshot;
  std::int64_t last_tick = -1;
  std::map<int, std::string> fruit_names;
  std::map<std::string, bool> in_contact;

  auto add_event = [&](std::int64_t step, double t, RunEvent e) {
    e.step = step;
    e.t = t;
    log.events.push_back(std::move(e));
  };

  const auto max_steps = static_cast<std::int64_t>(std::ceil(sc.max_time / sc.dt - 1e-9));
  sum.status = RunStatus::Timeout;
  for (std::int64_t k = 0; k < max_steps; ++k) {
    const double t = static_cast<double>(k) * sc.dt;
    const auto tick = static_cast<std::int64_t>(std::floor(t * sc.perception_rate + 1e-9));
    if (tick != last_tick) {
      const RenderOutput r = render_synthetic_frame(scene, sc.camera, tick, sc.seed);
      std::vector<BoundingBox> boxes;
      boxes.reserve(r.detections.size());
      for (const Detection& d : r.detections) boxes.push_back(d.box);
      snapshot = perception.process(r.frame, boxes);
      last_tick = tick;
      ++sum.perception_frames;
    }

    StepOutput out;
    try {
      out = controller.step(state, snapshot);
    } catch (const KinematicsError& e) {
      sum.status = RunStatus::Aborted;
      sum.abort_reason = e.what();
      add_event(k, t, {0, 0, "abort", -1, {}, {}, {}, e.what()});
      break;
    }
    for (const ControllerEvent& ce : out.events) {
      RunEvent e;
      e.type = ce.type;
      e.fruit_id = ce.fruit_id;
      e.detail = ce.detail;
      if (ce.type == "phase") {
        e.from = to_string(ce.from);
        e.to = to_string(ce.to);
      }
      if (ce.type == "target_selected" && !fruit_names.count(ce.fruit_id)) {
        if (const auto f = perception.registry().find(ce.fruit_id)) {
          const int idx = nearest_scene_fruit(scene, f->center, 0.05);
          if (idx >= 0) fruit_names[ce.fruit_id] = scene.fruits[idx].name;
        }
      }
      if (ce.type == "harvested") {
        const auto f = perception.registry().find(ce.fruit_id);
        const int idx = f ? nearest_scene_fruit(scene, f->center, 0.05) : -1;
        if (idx >= 0) {
          fruit_names[ce.fruit_id] = scene.fruits[idx].name;
          sum.harvested_names.push_back(scene.fruits[idx].name);
          scene.fruits.erase(scene.fruits.begin() + idx);
        } else {
          e.detail = "no scene fruit near the estimate";
        }
      }
      if (fruit_names.count(ce.fruit_id)) e.fruit_name = fruit_names[ce.fruit_id];
      add_event(k, t, std::move(e));
    }

    StepRecord rec;
    rec.step = k;
    rec.t = t;
    rec.phase = controller.phase();
    rec.target = controller.target() ? controller.target()->id : -1;
    rec.perception_frame = last_tick;
    rec.q = state.q;
    rec.qdot = out.qdot;
    rec.diag = out.diag;
    sum.min_clearance.trunk = std::min(sum.min_clearance.trunk, out.diag.clearance.trunk);
    sum.min_clearance.fruit = std::min(sum.min_clearance.fruit, out.diag.clearance.fruit);
    sum.min_clearance.self = std::min(sum.min_clearance.self, out.diag.clearance.self);
    sum.max_violation = std::max(sum.max_violation, out.diag.max_violation);
    log.steps.push_back(rec);

    if (controller.phase() == HarvestPhase::Done) {
      sum.status = RunStatus::Done;
      break;
    }
    try {
      const int clamped = integrate(sc.arms, state, out.qdot, sc.dt);
      if (clamped > 0) {
        sum.clamp_count += clamped;
        add_event(k, t, {0, 0, "joint_clamp", -1, {}, {}, {}, std::to_string(clamped) + " joint(s)"});
      }
    } catch (const SimulationError& e) {
      sum.status = RunStatus::Aborted;
      sum.abort_reason = e.what();
      add_event(k, t, {0, 0, "abort", -1, {}, {}, {}, e.what()});
      break;
    }

    std::vector<TruthContact> contacts;
    truth_contacts(sc.arms, state, scene, contacts, sum.min_true_trunk_clearance, sum.min_true_fruit_clearance);
    std::map<std::string, bool> now;
    for (const TruthContact& c : contacts) {
      now[c.key] = true;
      if (!in_contact.count(c.key)) {
        ++sum.collision_events;
        char buf[64];
        std::snprintf(buf, sizeof buf, " penetration %.6f", -c.clearance);
        add_event(k, t + sc.dt, {0, 0, "collision", -1, {}, {}, {}, c.key + buf});
      }
    }
    in_contact = std::move(now);
  }

  sum.steps = static_cast<std::int64_t>(log.steps.size());
  sum.sim_time = log.steps.empty() ? 0.0 : log.steps.back().t;
  sum.harvested = controller.harvested();
  sum.blacklisted.assign(controller.blacklisted().begin(), controller.blacklisted().end());
  sum.solver_failures = controller.solver_failures();
  sum.level2_fallbacks = controller.level2_fallbacks();
  sum.cuts = controller.cut_records();
  sum.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return log;
}

namespace {

void append_number(std::string& s, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  s += buf;
}

}  // namespace

std::string timeseries_header() {
  std::string h = "step,t,phase,target,perception_frame";
  for (int i = 0; i < kDualDof; ++i) h += ",q" + std::to_string(i);
  for (int i = 0; i < kDualDof; ++i) h += ",qdot" + std::to_string(i);
  h += ",abs_pos_err,abs_rot_err,rel_pos_err,rel_rot_err,min_d_trunk,min_d_fruit,min_d_self,r_obs";
  h += ",active_joint_limit,active_self,active_trunk,active_fruit,max_violation,level2_fallback\n";
  return h;
}

std::string timeseries_csv(const RunLog& log) {
  std::string s = timeseries_header();
  s.reserve(s.size() + log.steps.size() * 700);
  for (const StepRecord& r : log.steps) {
    s += std::to_string(r.step);
    s += ',';
    append_number(s, r.t);
    s += ',';
    s += to_string(r.phase);
    s += ',' + std::to_string(r.target) + ',' + std::to_string(r.perception_frame);
    for (int i = 0; i < kDualDof; ++i) {
      s += ',';
      append_number(s, r.q[i]);
    }
    for (int i = 0; i < kDualDof; ++i) {
      s += ',';
      append_number(s, r.qdot[i]);
    }
    const StepDiagnostics& d = r.diag;
    for (double v : {d.abs_position_error, d.abs_orientation_error, d.rel_position_error, d.rel_orientation_error,
                     d.clearance.trunk, d.clearance.fruit, d.clearance.self, d.r_obs}) {
      s += ',';
      append_number(s, v);
    }
    for (int v : {d.active_joint_limit, d.active_self, d.active_trunk, d.active_fruit}) s += ',' + std::to_string(v);
    s += ',';
    append_number(s, d.max_violation);
    s += d.level2_fallback ? ",1\n" : ",0\n";
  }
  return s;
}

std::string events_ndjson(const RunLog& log) {
  std::string s;
  for (const RunEvent& e : log.events) {
    nlohmann::ordered_json j;
    j["step"] = e.step;
    j["t"] = e.t;
    j["type"] = e.type;
    if (e.fruit_id >= 0) j["fruit_id"] = e.fruit_id;
    if (!e.fruit_name.empty()) j["fruit"] = e.fruit_name;
    if (!e.from.empty()) j["from"] = e.from;
    if (!e.to.empty()) j["to"] = e.to;
    if (!e.detail.empty()) j["detail"] = e.detail;
    s += j.dump() + "\n";
  }
  return s;
}

std::string summary_json(const RunSummary& s) {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(); };
  nlohmann::ordered_json j;
  j["scenario"] = s.scenario;
  j["status"] = to_string(s.status);
  if (!s.abort_reason.empty()) j["abort_reason"] = s.abort_reason;
  j["harvest_count"] = s.harvested.size();
  j["harvested"] = s.harvested;
  j["harvested_fruits"] = s.harvested_names;
  j["blacklisted"] = s.blacklisted;
  j["steps"] = s.steps;
  j["sim_time"] = s.sim_time;
  j["perception_frames"] = s.perception_frames;
  j["joint_clamps"] = s.clamp_count;
  j["collision_events"] = s.collision_events;
  j["solver_failures"] = s.solver_failures;
  j["level2_fallbacks"] = s.level2_fallbacks;
  j["min_distance"] = {{"trunk", finite_or_null(s.min_clearance.trunk)},
                       {"fruit", finite_or_null(s.min_clearance.fruit)},
                       {"self", finite_or_null(s.min_clearance.self)},
                       {"true_trunk", finite_or_null(s.min_true_trunk_clearance)},
                       {"true_fruit", finite_or_null(s.min_true_fruit_clearance)}};
  j["max_constraint_violation"] = s.max_violation;
  nlohmann::ordered_json cuts = nlohmann::ordered_json::array();
  for (const CutRecord& c : s.cuts) {
    cuts.push_back({{"fruit_id", c.fruit_id},
                    {"abs_position_error", c.abs_position_error},
                    {"rel_position_error", c.rel_position_error},
                    {"abs_orientation_error", c.abs_orientation_error},
                    {"rel_orientation_error", c.rel_orientation_error}});
  }
  j["cuts"] = cuts;
  j["simd"] = s.simd;
  j["wall_time"] = s.wall_time;
  return j.dump(2) + "\n";
}

void export_run(const RunLog& log, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());
  const std::pair<const char*, std::string> files[] = {{"timeseries.csv", timeseries_csv(log)},
                                                       {"events.ndjson", events_ndjson(log)},
                                                       {"summary.json", summary_json(log.summary)}};
  std::vector<fs::path> staged;
  auto cleanup = [&] {
    for (const auto& p : staged) fs::remove(p, ec);
  };
  for (const auto& [name, content] : files) {
    const fs::path tmp = dir / (std::string(".") + name + ".tmp");
    std::ofstream out(tmp, std::ios::binary);
    if (out) out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      cleanup();
      throw std::runtime_error("cannot write " + tmp.string());
    }
    staged.push_back(tmp);
  }
  for (size_t i = 0; i < staged.size(); ++i) {
    fs::rename(staged[i], dir / files[i].first, ec);
    if (ec) {
      cleanup();
      throw std::runtime_error("cannot move output into place: " + (dir / files[i].first).string());
    }
  }
}

}  // namespace harvest
