#pragma once

#include <stdexcept>
#include <string>

namespace iris {

// Error taxonomy. Everything derives from std::runtime_error so callers can
// catch coarsely at the CLI boundary.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainingDivergedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace iris
