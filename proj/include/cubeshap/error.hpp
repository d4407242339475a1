#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cubeshap {

enum class Errc {
  // validation
  NonWildcardDrill,
  EmptyDomain,
  ColumnMismatch,
  ShapeMismatch,
  SyntaxError,
  UnknownSubMeasure,
  UnknownAttribute,
  UnknownColumn,
  TypeMismatch,
  NonAdditiveAggregator,
  EngineMismatch,
  TooManyPlayers,
  InvalidArgument,
  InvalidConfig,
  NoRecords,
  UnknownExperiment,
  // numerical
  DivisionByZero,
  UndefinedMeasure,
  PathSingularity,
  SingularSystem,
  ZeroDenominator,
  // i/o
  Io,
};

enum class ErrorCategory { Validation, Numerical, Io };

const char* errc_name(Errc code) noexcept;
ErrorCategory category_of(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  Errc code_;
};

/// Parse failure in a measure expression; position is a 0-based byte offset.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, const std::string& what);

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace cubeshap
