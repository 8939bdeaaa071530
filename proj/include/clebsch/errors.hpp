#pragma once

#include <stdexcept>
#include <string>

namespace clebsch {

// Iterative solver (Newton / fixed point) exceeded its iteration budget.
struct NonConvergence : std::runtime_error {
  explicit NonConvergence(const std::string& what) : std::runtime_error(what) {}
};

// A metric lost positive-definiteness during evaluation or integration.
struct SingularMetric : std::runtime_error {
  explicit SingularMetric(const std::string& what) : std::runtime_error(what) {}
};

// Operands belong to different groups, or to a group the operation does not support.
struct GroupMismatch : std::invalid_argument {
  explicit GroupMismatch(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace clebsch
