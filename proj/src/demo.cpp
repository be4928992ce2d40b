#include "dcil/demo.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

#include <fmt/format.h>
#include <fmt/os.h>

#include "dcil/error.hpp"

namespace dcil {

namespace {

struct RrtNode {
  CarState state;
  int parent = -1;
  // States visited from the parent, ending at `state`.
  std::vector<CarState> path;
  std::vector<SteerAction> tape;
};

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(sep, pos);
    out.push_back(line.substr(pos, next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

double parse_double(std::string_view field, std::size_t line_no) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
    field.remove_suffix(1);
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw ParseError("malformed number '" + std::string(field) + "'", line_no);
  }
  return v;
}

bool blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

}  // namespace

Demonstration rrt_plan(const DubinsEnv& env, const CarState& start,
                       const Goal& target, double target_radius,
                       std::uint64_t seed, const RrtParams& params) {
  const auto& maze = env.maze();
  if (!maze.inside({start.x, start.y})) {
    throw PlanningFailed("start state lies outside the maze");
  }
  std::mt19937_64 rng(seed);
  const auto& b = maze.bounds();
  std::uniform_real_distribution<double> ux(b.xmin, b.xmax);
  std::uniform_real_distribution<double> uy(b.ymin, b.ymax);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> steer(-env.params().max_steer,
                                               env.params().max_steer);

  std::vector<RrtNode> tree;
  tree.push_back({start, -1, {}, {}});

  auto backtrack = [&](int leaf, std::vector<CarState> tail,
                       std::vector<SteerAction> tail_tape) {
    Demonstration demo;
    std::vector<int> chain;
    for (int n = leaf; n >= 0; n = tree[n].parent) chain.push_back(n);
    demo.states.push_back(start);
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      const auto& node = tree[*it];
      demo.states.insert(demo.states.end(), node.path.begin(), node.path.end());
      demo.actions.insert(demo.actions.end(), node.tape.begin(), node.tape.end());
    }
    demo.states.insert(demo.states.end(), tail.begin(), tail.end());
    demo.actions.insert(demo.actions.end(), tail_tape.begin(), tail_tape.end());
    return demo;
  };

  if (is_success(start, target, target_radius)) {
    // Already there. Every step moves a fixed distance, so circle at full
    // lock until the car is back inside; otherwise let the tree search it.
    const double m = env.params().max_steer;
    const int lap = static_cast<int>(std::ceil(2.0 * std::numbers::pi / (m * env.params().dt))) + 2;
    for (double u : {m, -m}) {
      Demonstration loop{{start}, {}};
      for (int k = 0; k < lap; ++k) {
        const auto step = env.step(loop.states.back(), {u});
        if (step.env_done) break;
        loop.states.push_back(step.state);
        loop.actions.push_back({u});
        if (is_success(step.state, target, target_radius)) return loop;
      }
    }
  }

  for (int attempt = 0; attempt < params.max_nodes; ++attempt) {
    const Goal sample = unit(rng) < params.goal_bias ? target : Goal{ux(rng), uy(rng)};

    int nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < tree.size(); ++n) {
      const double d = goal_distance(project_goal(tree[n].state), sample);
      if (d < best) {
        best = d;
        nearest = static_cast<int>(n);
      }
    }

    const SteerAction u{steer(rng)};
    RrtNode node{tree[nearest].state, nearest, {}, {}};
    bool collided = false;
    for (int k = 0; k < params.k_extend; ++k) {
      const auto step = env.step(node.state, u);
      if (step.env_done) {
        collided = true;
        break;
      }
      node.state = step.state;
      node.path.push_back(step.state);
      node.tape.push_back(u);
      if (is_success(step.state, target, target_radius)) {
        return backtrack(nearest, std::move(node.path), std::move(node.tape));
      }
    }
    if (!collided) tree.push_back(std::move(node));
  }
  throw PlanningFailed(fmt::format("no path to ({}, {}) after {} expansions",
                                   target.x, target.y, params.max_nodes));
}

Demonstration load_demonstration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open demonstration " + path.string());
  Demonstration demo;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 3) {
      throw ParseError(fmt::format("expected 3 fields x,y,theta, got {}", fields.size()),
                       line_no);
    }
    demo.states.push_back({parse_double(fields[0], line_no),
                           parse_double(fields[1], line_no),
                           parse_double(fields[2], line_no)});
  }
  if (demo.states.size() < 2) {
    throw ParseError("a demonstration needs at least two states", line_no);
  }
  return demo;
}

void save_demonstration(const Demonstration& demo,
                        const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write demonstration " + path.string());
  for (const auto& s : demo.states) {
    out << fmt::format("{},{},{}\n", s.x, s.y, s.theta);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

double projected_arc_length(const Demonstration& demo) {
  double total = 0.0;
  for (std::size_t j = 1; j < demo.states.size(); ++j) {
    total += goal_distance(project_goal(demo.states[j - 1]),
                           project_goal(demo.states[j]));
  }
  return total;
}

GoalSequence extract_goals(const Demonstration& demo, double eps_dist,
                           double eps_success) {
  if (!(eps_dist > 0.0)) throw DemoTooShort("eps_dist must be positive");
  const auto& states = demo.states;
  if (states.empty()) throw DemoTooShort("empty demonstration");

  std::vector<double> arc(states.size(), 0.0);
  for (std::size_t j = 1; j < states.size(); ++j) {
    arc[j] = arc[j - 1] + goal_distance(project_goal(states[j - 1]),
                                        project_goal(states[j]));
  }
  const double total = arc.back();
  const double tol = 1e-9 * std::max(1.0, total);
  if (total + tol < eps_dist) {
    throw DemoTooShort(fmt::format("projected arc length {} below eps_dist {}",
                                   total, eps_dist));
  }

  GoalSequence gseq;
  gseq.eps_dist = eps_dist;
  gseq.eps_success = eps_success;

  std::size_t seg = 1;  // arc[seg-1] <= cut <= arc[seg]
  std::size_t below = 0;
  for (int k = 0;; ++k) {
    const double start_arc = k * eps_dist;
    while (below + 1 < states.size() && arc[below + 1] <= start_arc + tol) ++below;
    gseq.reset_states.push_back(states[below]);

    const double cut = (k + 1) * eps_dist;
    if (cut >= total - tol) {
      gseq.goals.push_back(project_goal(states.back()));
      break;
    }
    while (arc[seg] < cut) ++seg;
    const double span = arc[seg] - arc[seg - 1];
    const double f = span > 0.0 ? (cut - arc[seg - 1]) / span : 0.0;
    const auto& p = states[seg - 1];
    const auto& q = states[seg];
    gseq.goals.push_back({p.x + f * (q.x - p.x), p.y + f * (q.y - p.y)});
  }
  return gseq;
}

BandedPlan plan_with_goal_band(const DubinsEnv& env, const CarState& start, const Goal& target,
                               double target_radius, std::uint64_t seed,
                               const RrtParams& params, double eps_dist, double eps_success,
                               int min_goals, int max_goals, int max_tries) {
  for (int k = 0; k < max_tries; ++k) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(k);
    Demonstration demo;
    GoalSequence gseq;
    try {
      demo = rrt_plan(env, start, target, target_radius, s, params);
      gseq = extract_goals(demo, eps_dist, eps_success);
    } catch (const PlanningFailed&) {
      continue;
    } catch (const DemoTooShort&) {
      continue;
    }
    if (gseq.size() >= min_goals && gseq.size() <= max_goals) {
      return {std::move(demo), std::move(gseq), s, k + 1};
    }
  }
  throw PlanningFailed(fmt::format("no plan with {}..{} goals in {} tries from seed {}",
                                   min_goals, max_goals, max_tries, seed));
}

void save_goal_sequence(const GoalSequence& gseq,
                        const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write goal sequence " + path.string());
  out << fmt::format("dcil-goals 1\neps_success {}\neps_dist {}\ncount {}\n",
                     gseq.eps_success, gseq.eps_dist, gseq.size());
  for (int k = 0; k < gseq.size(); ++k) {
    const auto& g = gseq.goals[k];
    const auto& r = gseq.reset_states[k];
    out << fmt::format("{} {} {} {} {}\n", g.x, g.y, r.x, r.y, r.theta);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

GoalSequence load_goal_sequence(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open goal sequence " + path.string());
  std::string magic;
  int version = 0;
  GoalSequence gseq;
  std::string key;
  int count = 0;
  if (!(in >> magic >> version) || magic != "dcil-goals" || version != 1) {
    throw ParseError("not a dcil-goals v1 file", 1);
  }
  if (!(in >> key >> gseq.eps_success) || key != "eps_success") throw ParseError("eps_success", 2);
  if (!(in >> key >> gseq.eps_dist) || key != "eps_dist") throw ParseError("eps_dist", 3);
  if (!(in >> key >> count) || key != "count" || count < 1) throw ParseError("count", 4);
  for (int k = 0; k < count; ++k) {
    Goal g;
    CarState r;
    if (!(in >> g.x >> g.y >> r.x >> r.y >> r.theta)) {
      throw ParseError("truncated goal record", static_cast<std::size_t>(5 + k));
    }
    gseq.goals.push_back(g);
    gseq.reset_states.push_back(r);
  }
  return gseq;
}

}  // namespace dcil
