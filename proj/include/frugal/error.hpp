#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace frugal {

enum class ErrorKind {
  InvalidDimension,
  Shape,
  SingularMatrix,
  InvalidArgument,
  InvalidConfig,
  InvalidPair,
  TrainingDiverged,
  InsufficientPool,
  LabelMismatch,
  Phase,
  Parse,
  DuplicateId,
  UndefinedMetric,
  NotFound,
  Conflict,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so callers (the HTTP
/// layer in particular) can map it without parsing messages.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

/// Raised by matrix inversion; remembers the 1-norm condition estimate and,
/// when raised from a network, which layer failed.
class SingularMatrixError : public Error {
public:
  SingularMatrixError(const std::string& message, double condition, int layer = -1)
      : Error(ErrorKind::SingularMatrix, message), condition_(condition), layer_(layer) {}

  double condition() const noexcept { return condition_; }
  int layer() const noexcept { return layer_; }

private:
  double condition_;
  int layer_;
};

class TrainingDivergedError : public Error {
public:
  TrainingDivergedError(const std::string& message, std::size_t epoch)
      : Error(ErrorKind::TrainingDiverged, message), epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

private:
  std::size_t epoch_;
};

class ParseError : public Error {
public:
  ParseError(ErrorKind kind, const std::string& message, std::size_t offset)
      : Error(kind, message + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

}  // namespace frugal
