#pragma once

#include <stdexcept>
#include <string>

namespace subhom {

/// Base class for every error raised by the library. `kind()` is a short
/// machine-readable tag used by the CLI error line.
class Error : public std::runtime_error
{
public:
  Error(std::string kind, const std::string &what)
    : std::runtime_error(what)
    , kind_(std::move(kind))
  {}

  const std::string &kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

class InvalidArgument : public Error
{
public:
  explicit InvalidArgument(const std::string &what)
    : Error("invalid_argument", what)
  {}
};

/// A length that does not sit on the fine grid.
class AlignmentError : public Error
{
public:
  explicit AlignmentError(const std::string &what)
    : Error("alignment", what)
  {}
};

class GridMismatch : public Error
{
public:
  explicit GridMismatch(const std::string &what)
    : Error("grid_mismatch", what)
  {}
};

class SolverError : public Error
{
public:
  explicit SolverError(const std::string &what)
    : Error("solver", what)
  {}
};

class ConfigError : public Error
{
public:
  explicit ConfigError(const std::string &what)
    : Error("config", what)
  {}
};

} // namespace subhom
