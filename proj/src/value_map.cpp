#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dcil/error.hpp"
#include "dcil/trainer.hpp"

namespace dcil {

double ValueGrid::x_at(int ix) const {
  return bounds.xmin + (ix + 0.5) * (bounds.xmax - bounds.xmin) / nx;
}

double ValueGrid::y_at(int iy) const {
  return bounds.ymin + (iy + 0.5) * (bounds.ymax - bounds.ymin) / ny;
}

ValueGrid export_value_grid(const SacAgent& agent, int index, const Goal& goal,
                            const std::vector<double>& thetas, int nx, int ny,
                            const Bounds& bounds) {
  if (nx < 1 || ny < 1 || thetas.empty()) throw ConfigError("value grid needs cells and headings");
  if (index < 1 || index > agent.layout().n_goals) {
    throw IndexOutOfRange(fmt::format("value grid index {} outside [1, {}]", index,
                                      agent.layout().n_goals));
  }
  ValueGrid g;
  g.nx = nx;
  g.ny = ny;
  g.bounds = bounds;
  g.thetas = thetas;
  const std::size_t cells = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
  g.max_values.assign(cells, -std::numeric_limits<double>::infinity());
  std::vector<ExtendedState> obs(cells);
  for (double theta : thetas) {
    for (int iy = 0; iy < ny; ++iy) {
      for (int ix = 0; ix < nx; ++ix) {
        obs[static_cast<std::size_t>(iy) * nx + ix] = {{g.x_at(ix), g.y_at(iy), theta}, index, goal};
      }
    }
    const Vector q = agent.q_values(obs, agent.mean_actions(obs));
    std::vector<double> v(q.data(), q.data() + q.size());
    for (std::size_t k = 0; k < cells; ++k) g.max_values[k] = std::max(g.max_values[k], v[k]);
    g.values.push_back(std::move(v));
  }
  return g;
}

namespace {

void write_pgm(const std::filesystem::path& path, const ValueGrid& g,
               const std::vector<double>& v, double v_max) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  fmt::print(out, "P5\n{} {}\n255\n", g.nx, g.ny);
  // first image row is the top of the maze
  for (int iy = g.ny - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      const double x = v[static_cast<std::size_t>(iy) * g.nx + ix];
      const double u = v_max > 0.0 ? std::clamp(x / v_max, 0.0, 1.0) : 0.0;
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * u))));
    }
  }
}

std::string theta_tag(double theta) {
  return fmt::format("{}", std::lround(theta * 180.0 / std::numbers::pi));
}

}  // namespace

void write_value_grid(const ValueGrid& grid, double v_max, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t t = 0; t < grid.thetas.size(); ++t) {
    write_pgm(dir / ("value_theta_" + theta_tag(grid.thetas[t]) + ".pgm"), grid,
              grid.values[t], v_max);
  }
  write_pgm(dir / "value_max.pgm", grid, grid.max_values, v_max);

  std::ofstream csv(dir / "values.csv");
  if (!csv) throw IoError("cannot write " + (dir / "values.csv").string());
  csv << "x,y";
  for (double th : grid.thetas) csv << ",q_theta_" << theta_tag(th);
  csv << ",q_max\n";
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      const std::size_t k = static_cast<std::size_t>(iy) * grid.nx + ix;
      fmt::print(csv, "{},{}", grid.x_at(ix), grid.y_at(iy));
      for (const auto& v : grid.values) fmt::print(csv, ",{}", v[k]);
      fmt::print(csv, ",{}\n", grid.max_values[k]);
    }
  }
}

}  // namespace dcil
