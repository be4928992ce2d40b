#include "dcil/dubins.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dcil/error.hpp"

namespace dcil {

namespace {

bool within(const Bounds& b, Vec2 p) {
  return p.x >= b.xmin && p.x <= b.xmax && p.y >= b.ymin && p.y <= b.ymax;
}

// Sign of the cross product (b - a) x (c - a).
int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  return (v > 0.0) - (v < 0.0);
}

// c is collinear with a-b; is it within the bounding box of a-b?
bool on_segment(Vec2 a, Vec2 b, Vec2 c) {
  return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= c.y && c.y <= std::max(a.y, b.y);
}

bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  // Touching and collinear overlap both count as contact.
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

}  // namespace

MazeLayout::MazeLayout(Bounds bounds, std::vector<Segment> walls,
                       CarState start, Goal target)
    : bounds_(bounds), walls_(std::move(walls)), start_(start), target_(target) {
  if (!(bounds_.xmax > bounds_.xmin) || !(bounds_.ymax > bounds_.ymin)) {
    throw ConfigError("maze bounds must have positive extent");
  }
  for (const auto& w : walls_) {
    if (!within(bounds_, w.a) || !within(bounds_, w.b)) {
      throw ConfigError("maze wall lies outside the bounds");
    }
  }
}

MazeLayout MazeLayout::canonical() {
  return MazeLayout({0.0, 0.0, 6.0, 6.0},
                    {{{2.0, 0.0}, {2.0, 4.0}}, {{4.0, 2.0}, {4.0, 6.0}}},
                    {0.5, 0.5, 0.0}, {5.5, 5.5});
}

bool MazeLayout::inside(Vec2 p) const noexcept {
  return p.x > bounds_.xmin && p.x < bounds_.xmax && p.y > bounds_.ymin &&
         p.y < bounds_.ymax;
}

double wrap_angle(double theta) noexcept {
  constexpr double kPi = std::numbers::pi;
  double r = std::remainder(theta, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

double clamp_steer(double dtheta, double max_steer) noexcept {
  if (std::isnan(dtheta)) return 0.0;
  return std::clamp(dtheta, -max_steer, max_steer);
}

CarState step_dynamics(const CarState& s, SteerAction action, double speed,
                       double dt, double max_steer) noexcept {
  const double u = clamp_steer(action.dtheta, max_steer);
  return {s.x + speed * std::cos(s.theta) * dt,
          s.y + speed * std::sin(s.theta) * dt, wrap_angle(s.theta + u * dt)};
}

bool check_collision(Vec2 p0, Vec2 p1, const MazeLayout& maze) noexcept {
  // The interior is convex, so the segment stays inside iff both ends do.
  if (!maze.inside(p0) || !maze.inside(p1)) return true;
  for (const auto& w : maze.walls()) {
    if (segments_intersect(p0, p1, w.a, w.b)) return true;
  }
  return false;
}

DubinsEnv::DubinsEnv(MazeLayout maze, DubinsParams params)
    : maze_(std::move(maze)), params_(params) {
  if (!(params_.speed > 0.0) || !(params_.dt > 0.0) || params_.substeps < 1 ||
      !(params_.max_steer > 0.0)) {
    throw ConfigError("dubins parameters must be positive");
  }
}

EnvStep DubinsEnv::step(const CarState& state, SteerAction action) const noexcept {
  const CarState end = step_dynamics(state, action, params_.speed, params_.dt,
                                     params_.max_steer);
  const double u = clamp_steer(action.dtheta, params_.max_steer);
  const int n = params_.substeps;

  CarState prev = state;
  for (int k = 1; k <= n; ++k) {
    const double f = static_cast<double>(k) / n;
    const CarState sub =
        k == n ? end
               : CarState{state.x + f * (end.x - state.x),
                          state.y + f * (end.y - state.y),
                          wrap_angle(state.theta + u * params_.dt * f)};
    if (check_collision({prev.x, prev.y}, {sub.x, sub.y}, maze_)) {
      return {prev, true};
    }
    prev = sub;
  }
  return {end, false};
}

double goal_distance(const Goal& a, const Goal& b) noexcept {
  return std::hypot(a.x - b.x, a.y - b.y);
}

bool is_success(const CarState& state, const Goal& goal, double eps) noexcept {
  return goal_distance(project_goal(state), goal) < eps;
}

}  // namespace dcil
