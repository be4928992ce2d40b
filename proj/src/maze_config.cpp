#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "dcil/dubins.hpp"
#include "dcil/error.hpp"
#include "ini.hpp"

namespace dcil {

namespace detail {

MazeLayout maze_from_section(const ini::Tree& sec) {
  ini::reject_unknown(sec, "maze", {"bounds", "start", "target", "walls"});
  const auto b = ini::numbers("bounds", sec.get<std::string>("bounds", "0 0 6 6"), 4);
  const auto s = ini::numbers("start", sec.get<std::string>("start", "0.5 0.5 0"), 3);
  const auto t = ini::numbers("target", sec.get<std::string>("target", "5.5 5.5"), 2);

  std::vector<Segment> walls;
  std::istringstream in(sec.get<std::string>("walls", ""));
  std::string item;
  while (std::getline(in, item, ';')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    const auto w = ini::numbers("walls", item, 4);
    walls.push_back({{w[0], w[1]}, {w[2], w[3]}});
  }
  return MazeLayout({b[0], b[1], b[2], b[3]}, std::move(walls),
                    {s[0], s[1], s[2]}, {t[0], t[1]});
}

}  // namespace detail

MazeLayout parse_maze(const std::string& text) {
  const auto tree = ini::parse(text);
  const auto sec = tree.get_child_optional("maze");
  if (!sec) throw ConfigError("missing [maze] section");
  return detail::maze_from_section(*sec);
}

MazeLayout load_maze(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open maze config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_maze(ss.str());
}

std::string format_maze(const MazeLayout& maze) {
  const auto& b = maze.bounds();
  std::string walls;
  for (const auto& w : maze.walls()) {
    if (!walls.empty()) walls += "; ";
    walls += fmt::format("{} {} {} {}", w.a.x, w.a.y, w.b.x, w.b.y);
  }
  return fmt::format(
      "[maze]\nbounds = {} {} {} {}\nstart = {} {} {}\ntarget = {} {}\nwalls = {}\n",
      b.xmin, b.ymin, b.xmax, b.ymax, maze.start().x, maze.start().y,
      maze.start().theta, maze.target().x, maze.target().y, walls);
}

}  // namespace dcil
