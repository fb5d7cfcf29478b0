// Command-line front end: plan / simulate / homotopy / mvee / compare.

#include "slap/scenario.hpp"
#include "slap/simulate.hpp"
#include "slap/svg.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using slap::Json;
using slap::Vec;
using slap::Vec2;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw slap::ScenarioError("cannot write " + path.string());
  out << text;
}

slap::Scenario load(const std::string& path, std::uint64_t seed_override,
                    int horizon_override) {
  slap::Scenario s = slap::load_scenario(path);
  if (seed_override != 0) s.seed = seed_override;
  if (horizon_override > 0) s.horizon = horizon_override;
  return s;
}

void print_log_summary(const slap::RunLog& log) {
  std::cout << "status: " << log.status << "\n"
            << "steps: " << log.steps.size() << "\n"
            << "final goal probability: " << log.final_goal_prob << "\n"
            << "belief spread initial -> terminal: " << log.initial_spread
            << " -> " << log.terminal_spread << "\n"
            << "min landmark distance: " << log.min_landmark_distance << "\n"
            << "collision: " << (log.any_collision() ? "yes" : "no") << "\n";
}

int cmd_plan(const std::string& scenario_path, std::uint64_t seed,
             int horizon, const std::string& out_dir, bool plot) {
  slap::Scenario s = load(scenario_path, seed, horizon);
  slap::RngStream init_rng(s.seed, 1);
  slap::ParticleBelief belief = slap::initial_belief(s, init_rng);
  slap::RhcController ctrl(slap::make_rhc_config(s));

  std::vector<slap::ObstacleTrack> tracks;
  for (const auto& ob : s.obstacles)
    tracks.push_back(slap::obstacle_estimate(ob, 0.0, s.process.dt(), 0.0,
                                             nullptr));
  slap::RngStream plan_rng(s.seed, 3);
  slap::PlanResult plan;
  ctrl.act(belief, tracks, plan_rng, &plan);

  std::cout << "horizon: " << plan.controls.size() << "\n"
            << "cost: total " << plan.cost.total << " (info " << plan.cost.info
            << ", effort " << plan.cost.effort << ", obstacle "
            << plan.cost.obstacle << ", terminal " << plan.cost.terminal
            << ")\n"
            << "iterations: " << plan.iterations << "\n"
            << "signature: " << slap::signature_string(plan.sig) << "\n"
            << "barrier capped: " << (plan.barrier_violation ? "yes" : "no")
            << "\n";

  if (!out_dir.empty()) {
    Json j;
    j["scenario"] = s.name;
    j["seed"] = s.seed;
    j["signature"] = slap::signature_string(plan.sig);
    j["cost"] = Json{{"info", plan.cost.info},
                     {"effort", plan.cost.effort},
                     {"obstacle", plan.cost.obstacle},
                     {"terminal", plan.cost.terminal},
                     {"total", plan.cost.total}};
    Json xs = Json::array(), us = Json::array();
    for (const Vec& x : plan.nominal) xs.push_back(slap::detail::vec_json(x));
    for (const Vec& u : plan.controls) us.push_back(slap::detail::vec_json(u));
    j["nominal"] = xs;
    j["controls"] = us;
    write_file(fs::path(out_dir) / "plan.json", j.dump(2) + "\n");
    if (plot) {
      slap::RunLog log;
      log.scenario = s.name;
      log.seed = s.seed;
      log.status = "open-loop plan";
      log.initial_particles = belief.particles;
      for (const Vec& x : plan.nominal)
        log.seed_polyline.push_back(x.head<2>());
      write_file(fs::path(out_dir) / "plan.svg", slap::render_plot(log, s));
    }
    std::cout << "wrote " << (fs::path(out_dir) / "plan.json").string() << "\n";
  }
  return 0;
}

int cmd_simulate(const std::string& scenario_path, std::uint64_t seed,
                 int horizon, const std::string& out_dir, bool plot,
                 bool jsonl, bool timing, bool no_info) {
  slap::Scenario s = load(scenario_path, seed, horizon);
  slap::RunLog log = slap::run_simulation(
      s, no_info ? std::optional<bool>(false) : std::nullopt,
      /*particle_snapshot_every=*/plot ? 5 : 0);
  print_log_summary(log);

  if (!out_dir.empty()) {
    if (jsonl) {
      write_file(fs::path(out_dir) / "run.jsonl",
                 slap::serialize_log_jsonl(log, timing));
    } else {
      write_file(fs::path(out_dir) / "run.json",
                 slap::serialize_log(log, timing).dump(2) + "\n");
    }
    if (plot)
      write_file(fs::path(out_dir) / "run.svg", slap::render_plot(log, s));
    std::cout << "wrote " << out_dir << "\n";
  }
  return log.status.rfind("error:", 0) == 0 ? 1 : 0;
}

int cmd_homotopy(const std::string& scenario_path, std::uint64_t seed, int k) {
  slap::Scenario s = load(scenario_path, seed, 0);
  if (s.obstacles.empty()) {
    std::cerr << "homotopy: scenario has no obstacles\n";
    return 1;
  }
  std::vector<slap::Ellipsoid> obs;
  for (const auto& ob : s.obstacles) obs.push_back(slap::obstacle_pose(ob, 0.0));
  const Vec x0 = slap::true_start_state(s);
  slap::VisibilityGraph g = slap::build_visibility_graph(
      x0.head<2>(), s.goal.head<2>(), obs, s.homotopy_delta);
  const auto paths = slap::enumerate_paths(g, obs, k > 0 ? k : s.homotopy_k);
  std::cout << "classes: " << paths.size() << "\n";
  for (std::size_t i = 0; i < paths.size(); ++i) {
    double len = 0.0;
    for (std::size_t j = 0; j + 1 < paths[i].size(); ++j)
      len += (paths[i][j + 1] - paths[i][j]).norm();
    std::cout << (i + 1) << ". signature "
              << slap::signature_string(slap::signature(paths[i], obs))
              << "  length " << len << "  waypoints " << paths[i].size()
              << "\n";
  }
  return 0;
}

int cmd_mvee(const std::string& points_path, const std::string& out_path) {
  std::ifstream in(points_path);
  if (!in) {
    std::cerr << "mvee: cannot open " << points_path << "\n";
    return 1;
  }
  std::vector<Vec2> pts;
  double x, y;
  while (in >> x >> y) pts.push_back(Vec2(x, y));
  if (pts.size() < 3) {
    std::cerr << "mvee: need at least 3 points (one 'x y' pair per line)\n";
    return 1;
  }
  const slap::Ellipsoid e = slap::mvee(pts);
  Json j = slap::detail::ellipsoid_json(e);
  std::cout << j.dump(2) << "\n";
  if (!out_path.empty()) write_file(out_path, j.dump(2) + "\n");
  return 0;
}

int cmd_compare(const std::string& scenario_path, std::uint64_t seed,
                const std::string& out_dir, bool plot) {
  slap::Scenario s = load(scenario_path, seed, 0);
  slap::ComparisonResult r = slap::run_comparison(s, plot ? 5 : 0);
  std::cout << "--- information cost ON ---\n";
  print_log_summary(r.with_info);
  std::cout << "--- information cost OFF ---\n";
  print_log_summary(r.without_info);
  if (!out_dir.empty()) {
    write_file(fs::path(out_dir) / "run_info_on.json",
               slap::serialize_log(r.with_info).dump(2) + "\n");
    write_file(fs::path(out_dir) / "run_info_off.json",
               slap::serialize_log(r.without_info).dump(2) + "\n");
    if (plot) {
      write_file(fs::path(out_dir) / "run_info_on.svg",
                 slap::render_plot(r.with_info, s));
      write_file(fs::path(out_dir) / "run_info_off.svg",
                 slap::render_plot(r.without_info, s));
    }
    std::cout << "wrote " << out_dir << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Belief-space motion planning under non-Gaussian uncertainty"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir, points_path, out_path;
  std::uint64_t seed = 0;
  int horizon = 0, k = 0;
  bool plot = false, jsonl = false, timing = false, no_info = false;

  auto add_common = [&](CLI::App* c, bool needs_scenario = true) {
    if (needs_scenario)
      c->add_option("scenario", scenario_path, "scenario JSON file")
          ->required()
          ->check(CLI::ExistingFile);
    c->add_option("--seed", seed, "override the scenario RNG seed");
    c->add_option("--output", out_dir, "output directory");
    c->add_flag("--plot", plot, "also write an SVG plot");
  };

  auto* plan = app.add_subcommand("plan", "solve one open-loop problem");
  add_common(plan);
  plan->add_option("--horizon", horizon, "override the planning horizon");

  auto* sim = app.add_subcommand("simulate", "closed-loop run to the goal");
  add_common(sim);
  sim->add_option("--horizon", horizon, "override the planning horizon");
  sim->add_flag("--jsonl", jsonl, "write a JSONL stream instead of JSON");
  sim->add_flag("--timing", timing, "include per-step solve times in the log");
  sim->add_flag("--no-info", no_info, "disable the information cost");

  auto* hom = app.add_subcommand("homotopy", "rank homotopy-class seed paths");
  hom->add_option("scenario", scenario_path, "scenario JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  hom->add_option("--seed", seed, "override the scenario RNG seed");
  hom->add_option("-k", k, "maximum number of candidate paths");

  auto* mv = app.add_subcommand("mvee", "minimum-volume enclosing ellipsoid");
  mv->add_option("points", points_path, "text file, one 'x y' pair per line")
      ->required()
      ->check(CLI::ExistingFile);
  mv->add_option("--output", out_path, "write the ellipsoid JSON here");

  auto* cmp = app.add_subcommand(
      "compare", "paired runs with the information cost on and off");
  add_common(cmp);

  CLI11_PARSE(app, argc, argv);

  try {
    if (plan->parsed()) return cmd_plan(scenario_path, seed, horizon, out_dir, plot);
    if (sim->parsed())
      return cmd_simulate(scenario_path, seed, horizon, out_dir, plot, jsonl,
                          timing, no_info);
    if (hom->parsed()) return cmd_homotopy(scenario_path, seed, k);
    if (mv->parsed()) return cmd_mvee(points_path, out_path);
    if (cmp->parsed()) return cmd_compare(scenario_path, seed, out_dir, plot);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
