#pragma once

// Constant-speed Dubins car in a walled 2D maze.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dcil {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Underlying state: position in maze units and heading in (-pi, pi].
struct CarState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  bool operator==(const CarState&) const = default;
};

/// Heading-rate command in radians per step.
struct SteerAction {
  double dtheta = 0.0;
};

/// Goal space point; orientation is not part of a goal.
struct Goal {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Goal&) const = default;
};

struct Segment {
  Vec2 a;
  Vec2 b;
};

struct Bounds {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 1.0;
  double ymax = 1.0;
};

class MazeLayout {
 public:
  MazeLayout(Bounds bounds, std::vector<Segment> walls, CarState start = {},
             Goal target = {});

  /// S-shaped two-wall maze on [0,6]^2 used throughout the benchmarks.
  static MazeLayout canonical();

  const Bounds& bounds() const noexcept { return bounds_; }
  std::span<const Segment> walls() const noexcept { return walls_; }
  const CarState& start() const noexcept { return start_; }
  const Goal& target() const noexcept { return target_; }

  /// Strictly inside the outer rectangle.
  bool inside(Vec2 p) const noexcept;

 private:
  Bounds bounds_;
  std::vector<Segment> walls_;
  CarState start_;
  Goal target_;
};

struct DubinsParams {
  double speed = 0.5;
  double dt = 1.0;
  int substeps = 5;
  double max_steer = 1.0;
};

/// Wraps an angle into (-pi, pi].
double wrap_angle(double theta) noexcept;

double clamp_steer(double dtheta, double max_steer) noexcept;

/// Explicit Euler step of the kinematics. Position advances along the
/// current heading, then the heading integrates the clamped command.
CarState step_dynamics(const CarState& state, SteerAction action, double speed,
                       double dt, double max_steer = 1.0) noexcept;

/// True when the closed segment p0-p1 touches any wall or leaves the open
/// interior of the maze bounds.
bool check_collision(Vec2 p0, Vec2 p1, const MazeLayout& maze) noexcept;

struct EnvStep {
  CarState state;
  bool env_done = false;
};

class DubinsEnv {
 public:
  explicit DubinsEnv(MazeLayout maze, DubinsParams params = {});

  /// One control step. The straight Euler displacement is split into
  /// `substeps` pieces; on the first colliding piece the episode ends and the
  /// last collision-free sub-state is returned.
  EnvStep step(const CarState& state, SteerAction action) const noexcept;

  const MazeLayout& maze() const noexcept { return maze_; }
  const DubinsParams& params() const noexcept { return params_; }

 private:
  MazeLayout maze_;
  DubinsParams params_;
};

inline Goal project_goal(const CarState& s) noexcept { return {s.x, s.y}; }

double goal_distance(const Goal& a, const Goal& b) noexcept;

/// Strict test: distance from the projected state to the goal below eps.
bool is_success(const CarState& state, const Goal& goal, double eps) noexcept;

/// Reads a maze from an INI file with a [maze] section:
///   bounds = xmin ymin xmax ymax
///   start  = x y theta
///   target = x y
///   walls  = x0 y0 x1 y1; x0 y0 x1 y1; ...
MazeLayout load_maze(const std::filesystem::path& path);
MazeLayout parse_maze(const std::string& text);
std::string format_maze(const MazeLayout& maze);

}  // namespace dcil
