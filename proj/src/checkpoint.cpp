#include "dcil/checkpoint.hpp"

#include <fstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dcil/error.hpp"

namespace dcil {

void save_checkpoint(const std::filesystem::path& dir, const TrainConfig& cfg,
                     const GoalSequence& gseq, std::int64_t step, const SacAgent& agent) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "config.ini");
    if (!out) throw IoError("cannot write " + (dir / "config.ini").string());
    out << format_train_config(cfg);
  }
  save_goal_sequence(gseq, dir / "goals.txt");
  std::ofstream out(dir / "agent.txt");
  if (!out) throw IoError("cannot write " + (dir / "agent.txt").string());
  fmt::print(out, "dcil-checkpoint 1\nstep {}\n", step);
  agent.save(out);
  if (!out) throw IoError("failed writing " + (dir / "agent.txt").string());
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  TrainConfig cfg = load_train_config(dir / "config.ini");
  GoalSequence gseq = load_goal_sequence(dir / "goals.txt");
  std::ifstream in(dir / "agent.txt");
  if (!in) throw IoError("cannot open " + (dir / "agent.txt").string());
  std::string tag, step_tag;
  int version = 0;
  std::int64_t step = 0;
  if (!(in >> tag >> version >> step_tag >> step) || tag != "dcil-checkpoint" ||
      version != 1 || step_tag != "step") {
    throw ParseError("not a version 1 checkpoint: " + (dir / "agent.txt").string());
  }
  SacAgent agent =
      SacAgent::load(in, cfg.sac, cfg.mode, gseq.size(), cfg.dubins.max_steer);
  return {std::move(cfg), std::move(gseq), step, std::move(agent)};
}

}  // namespace dcil
