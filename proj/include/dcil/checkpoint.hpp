#pragma once

// A checkpoint is a directory holding the config that produced it, the goal
// sequence and the agent parameters, so evaluation needs nothing else.

#include <cstdint>
#include <filesystem>

#include "dcil/demo.hpp"
#include "dcil/sac.hpp"
#include "dcil/trainer.hpp"

namespace dcil {

struct Checkpoint {
  TrainConfig config;
  GoalSequence gseq;
  std::int64_t step = 0;
  SacAgent agent;
};

void save_checkpoint(const std::filesystem::path& dir, const TrainConfig& cfg,
                     const GoalSequence& gseq, std::int64_t step, const SacAgent& agent);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace dcil
