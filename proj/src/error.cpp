#include "cubeshap/error.hpp"

namespace cubeshap {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::NonWildcardDrill: return "NonWildcardDrill";
    case Errc::EmptyDomain: return "EmptyDomain";
    case Errc::ColumnMismatch: return "ColumnMismatch";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::UnknownSubMeasure: return "UnknownSubMeasure";
    case Errc::UnknownAttribute: return "UnknownAttribute";
    case Errc::UnknownColumn: return "UnknownColumn";
    case Errc::TypeMismatch: return "TypeMismatch";
    case Errc::NonAdditiveAggregator: return "NonAdditiveAggregator";
    case Errc::EngineMismatch: return "EngineMismatch";
    case Errc::TooManyPlayers: return "TooManyPlayers";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::NoRecords: return "NoRecords";
    case Errc::UnknownExperiment: return "UnknownExperiment";
    case Errc::DivisionByZero: return "DivisionByZero";
    case Errc::UndefinedMeasure: return "UndefinedMeasure";
    case Errc::PathSingularity: return "PathSingularity";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::ZeroDenominator: return "ZeroDenominator";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

ErrorCategory category_of(Errc code) noexcept {
  switch (code) {
    case Errc::DivisionByZero:
    case Errc::UndefinedMeasure:
    case Errc::PathSingularity:
    case Errc::SingularSystem:
    case Errc::ZeroDenominator:
      return ErrorCategory::Numerical;
    case Errc::Io:
      return ErrorCategory::Io;
    default:
      return ErrorCategory::Validation;
  }
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

SyntaxError::SyntaxError(std::size_t position, const std::string& what)
    : Error(Errc::SyntaxError, what + " at position " + std::to_string(position)),
      position_(position) {}

}  // namespace cubeshap
