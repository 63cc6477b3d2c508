#pragma once

#include <stdexcept>
#include <string>

namespace corap {

/// Thrown when a caller violates an operation's precondition (bad mode,
/// mismatched shapes, rank out of range).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rank-1 extraction from an all-zero matrix.
class DegenerateRank1 : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A failed rank-1 component in the algebraic coupled solve.
class DegenerateComponent : public std::runtime_error {
 public:
  DegenerateComponent(int core, long component)
      : std::runtime_error("degenerate rank-1 component " + std::to_string(component) +
                           " in core " + std::to_string(core)),
        core_(core),
        component_(component) {}

  int core() const noexcept { return core_; }
  long component() const noexcept { return component_; }

 private:
  int core_;
  long component_;
};

/// Wraps a failure inside a multi-stage pipeline with the stage name.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

inline void require(bool condition, const char* message) {
  if (!condition) throw ContractViolation(message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace corap
