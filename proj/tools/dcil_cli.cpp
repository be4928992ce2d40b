#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dcil/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Sequential goal-conditioned imitation from a single demonstration"};
  app.require_subcommand(1);

  dcil::GenerateDemoOptions gen;
  std::vector<int> band;
  auto* g = app.add_subcommand("generate-demo", "plan a demonstration through a maze with RRT");
  g->add_option("--maze", gen.maze_path, "maze INI (canonical maze when omitted)");
  g->add_option("--config", gen.config_path, "training config providing planner settings");
  g->add_option("--seed", gen.seed, "planner seed")->default_val(0);
  g->add_option("--out", gen.out, "output CSV")->required();
  g->add_option("--goal-band", band, "accept only plans with MIN..MAX goals")->expected(2);
  g->add_option("--max-tries", gen.max_tries, "plans drawn when a goal band is set")
      ->default_val(200);

  std::filesystem::path config, demo, out_dir, checkpoint;
  auto* t = app.add_subcommand("train", "extract goals from a demonstration and train");
  t->add_option("config", config, "training config INI")->required();
  t->add_option("demo", demo, "demonstration CSV")->required();
  t->add_option("out_dir", out_dir, "run directory")->required();

  auto* e = app.add_subcommand("eval", "deterministic rollout from the first demonstrated state");
  e->add_option("checkpoint", checkpoint, "checkpoint directory")->required();
  e->add_option("demo", demo, "demonstration CSV")->required();

  int index = 1;
  int resolution = 50;
  auto* v = app.add_subcommand("value-map", "critic value rasters for one goal index");
  v->add_option("checkpoint", checkpoint, "checkpoint directory")->required();
  v->add_option("index", index, "goal index (1-based)")->required();
  v->add_option("out_dir", out_dir, "output directory")->required();
  v->add_option("--resolution", resolution, "cells per side")->default_val(50);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : dcil::exit_config;
  }

  const int verbosity = dcil::verbosity_from_env();
  try {
    if (g->parsed()) {
      if (!band.empty()) gen.goal_band = std::make_pair(band[0], band[1]);
      dcil::cmd_generate_demo(gen, std::cout, verbosity);
    } else if (t->parsed()) {
      dcil::cmd_train(config, demo, out_dir, std::cout, verbosity);
    } else if (e->parsed()) {
      dcil::cmd_eval(checkpoint, demo, std::cout);
    } else if (v->parsed()) {
      dcil::cmd_value_map(checkpoint, index, out_dir, resolution, std::cout);
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return dcil::exit_code_for_current_exception();
  }
  return dcil::exit_ok;
}
