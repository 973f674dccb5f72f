#pragma once

#include <stdexcept>

namespace mmsrc {

/// Invalid configuration: malformed group trees, bad method tags,
/// out-of-range settings. Maps to CLI exit code 2.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Invalid or inconsistent data: unreadable files, shape mismatches,
/// degenerate inputs, numerical divergence. Maps to CLI exit code 3.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mmsrc
