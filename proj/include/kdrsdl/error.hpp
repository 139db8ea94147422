#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kdrsdl {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree, or an index is out of range.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A scalar argument is outside its admissible range (negative threshold,
/// rho <= 1, single-class labels, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// The Stein equation has (numerically) no unique solution.
class SingularEquationError : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefiniteError : public Error {
 public:
  using Error::Error;
};

/// The operation only supports symmetric input.
class AsymmetricInputError : public Error {
 public:
  using Error::Error;
};

enum class FormatErrorKind {
  kIo,
  kBadMagic,
  kTruncated,
  kTrailingBytes,
  kBadHeader,
  kNonFinite,
  kUnsupportedImage,
  kBadMaxval,
  kMixedDimensions,
};

const char* to_string(FormatErrorKind kind);

/// Malformed or unreadable file.
class FormatError : public Error {
 public:
  FormatError(FormatErrorKind kind, const std::string& what)
      : Error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  FormatErrorKind kind() const noexcept { return kind_; }

 private:
  FormatErrorKind kind_;
};

}  // namespace kdrsdl
