#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>

#include "dcil/demo.hpp"
#include "dcil/dubins.hpp"
#include "dcil/mlp.hpp"
#include "dcil/seq_mdp.hpp"

namespace fixtures {

using namespace dcil;

inline MazeLayout open_box(double w, double h) {
  return MazeLayout({0.0, 0.0, w, h}, {}, {0.5, 0.5, 0.0}, {w - 0.5, h - 0.5});
}

/// States along y = `y` from x0 to x1 every `dx`, heading +x.
inline Demonstration straight_demo(double x0, double x1, double dx, double y = 0.0) {
  Demonstration d;
  const int n = static_cast<int>(std::lround((x1 - x0) / dx));
  for (int k = 0; k <= n; ++k) d.states.push_back({x0 + k * dx, y, 0.0});
  return d;
}

/// n goals at (1, y), (2, y), ... with reset states one unit behind each.
inline GoalSequence line_goals(int n, double y = 1.0, double eps = 0.1) {
  GoalSequence g;
  g.eps_success = eps;
  g.eps_dist = 1.0;
  for (int k = 1; k <= n; ++k) {
    g.goals.push_back({static_cast<double>(k), y});
    g.reset_states.push_back({static_cast<double>(k - 1) + 0.5, y, 0.0});
  }
  return g;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::path(DCIL_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Central differences of `loss` w.r.t. every parameter of `net`, compared
/// with the analytic gradients; returns the worst relative error, measured as
/// |a - n| / max(|a|, |n|, floor).
inline double max_relative_error(Mlp& net, const MlpGradients& analytic,
                                 const std::function<double()>& loss, double h = 1e-5,
                                 double floor = 1e-6) {
  double worst = 0.0;
  auto check = [&](double& p, double a) {
    const double keep = p;
    p = keep + h;
    const double up = loss();
    p = keep - h;
    const double down = loss();
    p = keep;
    const double n = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor}));
  };
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    auto& w = net.weights()[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) check(w(i, j), analytic.weights[l](i, j));
    }
    auto& b = net.biases()[l];
    for (Eigen::Index i = 0; i < b.size(); ++i) check(b(i), analytic.biases[l](i));
  }
  return worst;
}

}  // namespace fixtures
