#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "harvest/image.hpp"
#include "harvest/perception.hpp"
#include "harvest/sim.hpp"

using namespace harvest;

namespace {

enum Exit { kOk = 0, kIoError = 1, kInvalid = 2, kAborted = 3, kTimeout = 4 };

int report(const ScenarioError& e) {
  std::cerr << "invalid scenario:\n";
  for (const auto& p : e.problems()) std::cerr << "  " << p << "\n";
  return kInvalid;
}

struct Overrides {
  std::optional<double> dt;
  std::optional<double> max_time;
  std::optional<std::uint64_t> seed;
};

Scenario load_with(const std::string& path, const Overrides& o) {
  Scenario s = load_scenario(path);
  if (o.dt) s.dt = *o.dt;
  if (o.max_time) s.max_time = *o.max_time;
  if (o.seed) s.seed = *o.seed;
  if (auto problems = validate_scenario(s); !problems.empty()) throw ScenarioError(std::move(problems));
  return s;
}

int cmd_run(const std::string& path, const std::string& out, const Overrides& o) {
  const Scenario s = load_with(path, o);
  const RunLog log = run(s);
  export_run(log, out);
  const RunSummary& sum = log.summary;
  std::printf("%s: %s after %.2f s simulated, %zu harvested, %zu blacklisted, %d collision(s), %d clamp(s)\n",
              s.name.c_str(), to_string(sum.status), sum.sim_time, sum.harvested.size(), sum.blacklisted.size(),
              sum.collision_events, sum.clamp_count);
  switch (sum.status) {
    case RunStatus::Done: return kOk;
    case RunStatus::Aborted: return kAborted;
    case RunStatus::Timeout: return kTimeout;
  }
  return kAborted;
}

int cmd_validate(const std::string& path) {
  const Scenario s = load_with(path, {});
  std::printf("%s: ok (%zu fruit(s), trunk %s)\n", s.name.c_str(), s.scene.fruits.size(),
              s.scene.trunk ? "present" : "absent");
  return kOk;
}

int cmd_render(const std::string& path, std::int64_t frame, const std::string& out, bool perceive) {
  const Scenario s = load_with(path, {});
  const RenderOutput r = render_synthetic_frame(s.scene, s.camera, frame, s.seed);
  std::filesystem::create_directories(out);
  save_frame(out, r.frame);
  std::printf("wrote %s/%s_{rgb.ppm,depth.pgm}, %zu detection(s)\n", out.c_str(), frame_stem(frame).c_str(),
              r.detections.size());
  for (const Detection& d : r.detections) {
    std::printf("  box [%.1f %.1f %.1f %.1f] fruit %s visible %.2f", d.box.u_tl, d.box.v_tl, d.box.u_br, d.box.v_br,
                s.scene.fruits[d.fruit].name.c_str(), d.visible_fraction);
    if (perceive) {
      if (const auto est = localize_fruit(d.box, r.frame, s.camera)) {
        std::printf("  center (%.4f %.4f %.4f) d_h %.4f d_v %.4f", est->center.x(), est->center.y(), est->center.z(),
                    est->d_h, est->d_v);
      }
    }
    std::printf("\n");
  }
  if (perceive) {
    if (const auto tree = localize_tree(r.frame, s.camera, s.perception.tree)) {
      std::printf("  tree (%.4f %.4f %.4f) from %d pixel(s)\n", tree->center.x(), tree->center.y(), tree->center.z(),
                  tree->pixel_count);
    } else {
      std::printf("  tree not found\n");
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-arm harvesting simulator"};
  app.require_subcommand(1);

  std::string scenario, out;
  Overrides over;
  std::int64_t frame = 0;
  bool perceive = false;

  auto* run_cmd = app.add_subcommand("run", "simulate a scenario and write logs");
  run_cmd->add_option("--scenario", scenario, "scenario file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out, "output directory")->required();
  run_cmd->add_option("--dt", over.dt, "control period override (s)");
  run_cmd->add_option("--max-time", over.max_time, "simulated time budget override (s)");
  run_cmd->add_option("--seed", over.seed, "random seed override");

  auto* validate_cmd = app.add_subcommand("validate", "check a scenario file");
  validate_cmd->add_option("--scenario", scenario, "scenario file")->required()->check(CLI::ExistingFile);

  auto* render_cmd = app.add_subcommand("render", "dump the synthetic RGB and depth pair of one frame");
  render_cmd->add_option("--scenario", scenario, "scenario file")->required()->check(CLI::ExistingFile);
  render_cmd->add_option("--frame", frame, "frame index")->required()->check(CLI::NonNegativeNumber);
  render_cmd->add_option("--out", out, "output directory")->required();
  render_cmd->add_flag("--perceive", perceive, "also print fruit and trunk estimates");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(scenario, out, over);
    if (*validate_cmd) return cmd_validate(scenario);
    if (*render_cmd) return cmd_render(scenario, frame, out, perceive);
  } catch (const ScenarioError& e) {
    return report(e);
  } catch (const ImageIoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  }
  return kOk;
}
