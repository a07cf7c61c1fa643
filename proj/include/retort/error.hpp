#pragma once

#include <stdexcept>
#include <string>

namespace retort {

/// Base of every error the simulator throws. Carries the process exit code the
/// CLI should map it to.
class Error : public std::runtime_error {
 public:
  Error(const std::string& what, int exit_code)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kIo = 1;
inline constexpr int kDeck = 2;
inline constexpr int kSolver = 3;
inline constexpr int kAudit = 4;
inline constexpr int kUsage = 64;
}  // namespace exit_code

class DeckError : public Error {
 public:
  explicit DeckError(const std::string& what) : Error(what, exit_code::kDeck) {}
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(what, exit_code::kDeck) {}
};

/// Argument outside the domain of a constitutive law (e.g. S_L <= S_Lr).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(what, exit_code::kSolver) {}
};

class SolverError : public Error {
 public:
  explicit SolverError(const std::string& what) : Error(what, exit_code::kSolver) {}
};

class ConvergenceFailure : public SolverError {
 public:
  using SolverError::SolverError;
};

class CflUnderflow : public SolverError {
 public:
  using SolverError::SolverError;
};

class StiffnessFailure : public SolverError {
 public:
  using SolverError::SolverError;
};

class SingularEquilibrium : public SolverError {
 public:
  using SolverError::SolverError;
};

class TargetNotFound : public DeckError {
 public:
  using DeckError::DeckError;
};

class MismatchedTimes : public SolverError {
 public:
  using SolverError::SolverError;
};

class AuditFailure : public Error {
 public:
  explicit AuditFailure(const std::string& what) : Error(what, exit_code::kAudit) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what, exit_code::kIo) {}
};

}  // namespace retort
