#pragma once

#include <stdexcept>
#include <string>

namespace safe {

// Shape or dimension disagreement between tensors/operands.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed input data: JSONL lines, vocab files, label values.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unreadable or corrupt serialized artifacts (checkpoints, vocab files).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad configuration values (negative temperature, weight simplex violation).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A broken internal invariant; indicates a bug, not bad input.
struct InternalError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace safe
