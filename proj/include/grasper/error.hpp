#pragma once

#include <stdexcept>
#include <string>

namespace grasper {

// Error taxonomy. Caller-supplied bad data is an input_error, shape/width
// mismatches between configured components are config_error, numerical
// blowups during optimization are training_error.
struct input_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct training_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Instance sampling could not satisfy its constraints.
struct generation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct no_path_error : input_error {
  using input_error::input_error;
};

// An exact oracle was asked to expand more states than its guard allows.
struct refusal_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace grasper
