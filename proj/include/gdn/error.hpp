#pragma once

#include <stdexcept>
#include <string>

namespace gdn {

// Invalid graph structure: dangling endpoints, bad node ids.
struct structural_error : std::runtime_error {
  explicit structural_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Ragged or dimensionally inconsistent data.
struct shape_error : std::runtime_error {
  explicit shape_error(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse: wrong mode, missing precondition.
struct usage_error : std::runtime_error {
  explicit usage_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failure: NaN loss, zero norm, diverging iteration.
struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gdn
