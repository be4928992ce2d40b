#pragma once

// End-to-end commands behind the dcil executable. Each one reads and writes
// files only; progress text goes to `log` subject to `verbosity`
// (0 quiet, 1 summary, 2 progress).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "dcil/demo.hpp"
#include "dcil/trainer.hpp"

namespace dcil {

/// Process exit codes.
enum ExitCode : int {
  exit_ok = 0,
  exit_error = 1,
  exit_config = 2,
  exit_planning = 3,
  exit_divergence = 4,
};

/// Maps the exception currently being handled to an exit code.
int exit_code_for_current_exception();

/// Verbosity from the DCIL_VERBOSE environment variable, 1 when unset.
int verbosity_from_env();

/// Git-style blob hash: sha1("blob <size>\0" + bytes), lowercase hex.
std::string git_blob_sha1(const std::string& bytes);

struct GenerateDemoOptions {
  /// Maze INI; the canonical maze when empty.
  std::filesystem::path maze_path;
  /// Training config whose [demo] and [env] sections set the planner.
  std::filesystem::path config_path;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  /// Keep drawing plans from seed, seed + 1, ... until the goal count lies in
  /// this band. Falls back to the config's [demo] band; disabled when neither
  /// is set.
  std::optional<std::pair<int, int>> goal_band;
  int max_tries = 200;
};

struct GenerateDemoResult {
  Demonstration demo;
  int n_goals = 0;
  std::uint64_t plan_seed = 0;
};

/// Writes the demonstration CSV at `out` and a plan summary next to it
/// (`<out>.summary`).
GenerateDemoResult cmd_generate_demo(const GenerateDemoOptions& opt, std::ostream& log,
                                     int verbosity);

struct TrainOutput {
  TrainResult result;
  std::filesystem::path run_dir;
};

/// Output layout:
///   config.ini       resolved config (input file copied as config.input.ini)
///   demo.csv         copy of the demonstration
///   goals.txt        extracted goal sequence
///   manifest.json    seed, mode, input hashes, layout
///   metrics.csv      one row per evaluation
///   checkpoints/step_<n>/ and checkpoints/final/
TrainOutput cmd_train(const std::filesystem::path& config_path,
                      const std::filesystem::path& demo_path,
                      const std::filesystem::path& out_dir, std::ostream& log, int verbosity);

/// Prints goals_reached / N and chain_success for a deterministic rollout.
EvalResult cmd_eval(const std::filesystem::path& checkpoint_dir,
                    const std::filesystem::path& demo_path, std::ostream& out);

/// Graymaps for theta in {0, pi/2, pi, -pi/2}, the max raster and a CSV with
/// resolution^2 rows.
ValueGrid cmd_value_map(const std::filesystem::path& checkpoint_dir, int index,
                        const std::filesystem::path& out_dir, int resolution, std::ostream& log);

}  // namespace dcil
