#pragma once

#include <stdexcept>
#include <string>

namespace pattc {

// Input file/schema problems (missing columns, bad types).
struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

// Data that loads fine but cannot support the requested computation
// (empty arm, single class, no treated rows, ...).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller passed an out-of-range or inconsistent argument.
struct ArgumentError : std::invalid_argument {
  explicit ArgumentError(const std::string& msg) : std::invalid_argument(msg) {}
};

// A numeric procedure could not produce a defined result.
struct EstimationError : std::runtime_error {
  explicit EstimationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace pattc
