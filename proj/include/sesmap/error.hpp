#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sesmap {

enum class ErrorKind {
  Io,
  Config,
  InvalidArgument,
  MalformedRow,
  DuplicateBrandId,
  DuplicateUserId,
  UnknownDomain,
  EmptyInput,
  EmptyResult,
  ZeroMarginal,
  DimensionMismatch,
  DegenerateMatrix,
  ConvergenceFailure,
  EmptySupport,
  UnknownAnchor,
  ZeroVariance,
  LengthMismatch,
  TooFewObservations,
  TooFewGroups,
  UnknownEntity,
  DegenerateParams,
  InsufficientCoverage,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure surfaced by the library. `line()` is set for row-level
// ingestion errors (1-based physical line where the record starts).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(message), kind_(kind), line_(line) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> line_;
};

}  // namespace sesmap
