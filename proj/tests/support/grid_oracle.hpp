#pragma once

// Brute-force value iteration over a discretized (x, y, theta, index) version
// of the sequential goal MDP. Transitions use the real environment step from
// each cell centre and snap the result to the nearest cell.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "dcil/dubins.hpp"
#include "dcil/demo.hpp"

namespace oracle {

using namespace dcil;

class GridValueOracle {
 public:
  GridValueOracle(const DubinsEnv& env, const GoalSequence& gseq, double gamma, double cell,
                  int n_theta, int n_actions)
      : env_(env), gseq_(gseq), gamma_(gamma), cell_(cell), nt_(n_theta) {
    const auto& b = env.maze().bounds();
    nx_ = static_cast<int>(std::ceil((b.xmax - b.xmin) / cell - 1e-9));
    ny_ = static_cast<int>(std::ceil((b.ymax - b.ymin) / cell - 1e-9));
    const int cells = nx_ * ny_ * nt_;
    const double m = env.params().max_steer;
    for (int k = 0; k < n_actions; ++k) {
      actions_.push_back(n_actions == 1 ? 0.0 : -m + 2.0 * m * k / (n_actions - 1));
    }
    valid_.assign(cells, 0);
    next_.assign(static_cast<std::size_t>(cells) * n_actions, -1);
    crash_.assign(next_.size(), 0);
    hit_.assign(next_.size() * gseq.size(), 0);
    for (int c = 0; c < cells; ++c) {
      const CarState s = centre(c);
      valid_[c] = env.maze().inside({s.x, s.y});
      if (!valid_[c]) continue;
      for (int a = 0; a < n_actions; ++a) {
        const auto r = env.step(s, {actions_[a]});
        const std::size_t e = static_cast<std::size_t>(c) * n_actions + a;
        next_[e] = snap(r.state);
        crash_[e] = r.env_done;
        for (int i = 1; i <= gseq.size(); ++i) {
          hit_[e * gseq.size() + (i - 1)] = is_success(r.state, gseq.goal(i), gseq.eps_success);
        }
      }
    }
    solve();
  }

  int snap(const CarState& s) const {
    const auto& b = env_.maze().bounds();
    const int ix = std::clamp(static_cast<int>((s.x - b.xmin) / cell_), 0, nx_ - 1);
    const int iy = std::clamp(static_cast<int>((s.y - b.ymin) / cell_), 0, ny_ - 1);
    const double t = wrap_angle(s.theta) + std::numbers::pi;
    const int it = static_cast<int>(std::lround(t / (2 * std::numbers::pi) * nt_)) % nt_;
    return (it * ny_ + iy) * nx_ + ix;
  }

  CarState centre(int c) const {
    const auto& b = env_.maze().bounds();
    const int ix = c % nx_;
    const int iy = (c / nx_) % ny_;
    const int it = c / (nx_ * ny_);
    return {b.xmin + (ix + 0.5) * cell_, b.ymin + (iy + 0.5) * cell_,
            wrap_angle(-std::numbers::pi + 2 * std::numbers::pi * it / nt_)};
  }

  /// Optimal value of observing `s` with goal index `index`.
  double value(const CarState& s, int index) const {
    const int c = snap(s);
    return valid_[c] ? v_[index - 1][c] : 0.0;
  }

  /// Return of a transition that has just landed on a success of goal
  /// `index`: reward 1 plus the discounted continuation, nothing after the
  /// final goal.
  double landing_value(const CarState& s, int index) const {
    if (index == gseq_.size()) return 1.0;
    return 1.0 + gamma_ * value(s, index + 1);
  }

  int iterations() const noexcept { return iterations_; }
  std::size_t cell_count() const noexcept { return valid_.size(); }

 private:
  void solve() {
    const int n = gseq_.size();
    const std::size_t cells = valid_.size();
    const std::size_t na = actions_.size();
    v_.assign(n, std::vector<double>(cells, 0.0));
    for (iterations_ = 1; iterations_ <= 1000; ++iterations_) {
      double delta = 0.0;
      // later indices first so that index i sees fresh values of i + 1
      for (int i = n; i >= 1; --i) {
        auto& vi = v_[i - 1];
        for (std::size_t c = 0; c < cells; ++c) {
          if (!valid_[c]) continue;
          double best = 0.0;
          for (std::size_t a = 0; a < na; ++a) {
            const std::size_t e = c * na + a;
            const bool hit = hit_[e * n + (i - 1)];
            double q = hit ? 1.0 : 0.0;
            const bool done = crash_[e] || (hit && i == n);
            if (!done) q += gamma_ * (hit ? v_[i][next_[e]] : vi[next_[e]]);
            best = std::max(best, q);
          }
          delta = std::max(delta, std::abs(best - vi[c]));
          vi[c] = best;
        }
      }
      if (delta < 1e-10) break;
    }
  }

  DubinsEnv env_;
  GoalSequence gseq_;
  double gamma_;
  double cell_;
  int nx_ = 0, ny_ = 0, nt_;
  std::vector<double> actions_;
  std::vector<std::uint8_t> valid_;
  std::vector<int> next_;
  std::vector<std::uint8_t> crash_;
  std::vector<std::uint8_t> hit_;
  std::vector<std::vector<double>> v_;
  int iterations_ = 0;
};

}  // namespace oracle
