#pragma once

#include <charconv>
#include <cstdio>
#include <string>

namespace spml {

// Shortest round-trip decimal form; keeps CSV output byte-stable across runs.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace spml
