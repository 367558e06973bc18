#pragma once

#include <stdexcept>
#include <string>

namespace wqc {

/// Invalid user input: malformed files, unknown ids, inconsistent settings.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The water-quality model cannot be built or stepped (CFL violation,
/// stagnant network, emptying tank, dimension mismatch).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure inside the controller (non-PD weights, infeasible QP
/// that cannot be recovered).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wqc
