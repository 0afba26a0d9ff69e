#pragma once

#include <stdexcept>
#include <string>

namespace mftd {

// Invalid user input: config files, CLI arguments, malformed data files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Solver breakdown, non-finite values, singular systems.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mftd
