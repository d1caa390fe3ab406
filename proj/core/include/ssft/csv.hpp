#pragma once

#include <charconv>
#include <string>

namespace ssft::csv {

// Shortest round-trip decimal form. Deterministic, locale-free, and parses
// back to the identical double, which the artifact hashing relies on.
inline std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace ssft::csv
