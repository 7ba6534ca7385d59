#pragma once

#include <stdexcept>
#include <string>

namespace metaload {

/// Operand shapes violate an op's shape rule.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values, or inputs outside an operation's numeric domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Misuse of the differentiation graph (unreachable tensors, non-scalar loss, mixed graphs).
class GraphError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed or insufficient input data (CSV files, series too short, empty batches).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration; messages carry the offending field path.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A run stage failed; the message names the stage and the cause.
class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace metaload
