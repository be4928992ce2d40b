#pragma once

// Thin helpers over boost::property_tree's INI reader shared by the maze and
// training configuration loaders.

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "dcil/error.hpp"

namespace dcil::ini {

using Tree = boost::property_tree::ptree;

inline Tree parse(const std::string& text) {
  Tree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(e.message(), e.line());
  }
  return tree;
}

inline std::vector<double> numbers(const std::string& key,
                                   const std::string& value) {
  std::istringstream in(value);
  std::vector<double> out;
  double v = 0.0;
  while (in >> v) out.push_back(v);
  if (!in.eof()) throw ConfigError("non-numeric value for '" + key + "'");
  return out;
}

inline std::vector<double> numbers(const std::string& key,
                                   const std::string& value, std::size_t n) {
  auto out = numbers(key, value);
  if (out.size() != n) {
    throw ConfigError("'" + key + "' expects " + std::to_string(n) +
                      " numbers, got " + std::to_string(out.size()));
  }
  return out;
}

inline void reject_unknown(const Tree& section, const std::string& name,
                           const std::set<std::string>& allowed) {
  for (const auto& [key, _] : section) {
    if (!allowed.contains(key)) {
      throw ConfigError("unknown key '" + key + "' in [" + name + "]");
    }
  }
}

}  // namespace dcil::ini
