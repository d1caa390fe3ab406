#pragma once

#include <stdexcept>
#include <string>

namespace ssft {

// Invalid or inconsistent configuration (bad spec parameters, unparseable
// config files, missing fields). Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Optimization blew up (loss increased for several consecutive full-batch
// epochs, or became non-finite). Maps to CLI exit code 2.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what)
      : std::runtime_error(what) {}
};

// Filesystem trouble while reading or writing artifacts. Exit code 3.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// The max-margin solver found no feasible point within its iteration cap.
class NonSeparableError : public std::runtime_error {
 public:
  explicit NonSeparableError(const std::string& what)
      : std::runtime_error(what) {}
};

// Internal consistency check failed (e.g. weight-update decomposition does
// not reconstruct the weights). Signals an implementation bug, not bad data.
class ReconstructionError : public std::logic_error {
 public:
  explicit ReconstructionError(const std::string& what)
      : std::logic_error(what) {}
};

}  // namespace ssft
