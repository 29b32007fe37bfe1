#pragma once

#include <stdexcept>
#include <string>

namespace tupi {

enum class ErrorKind {
  InvalidInput,
  DegenerateScale,
  DegenerateEmbedding,
  DegenerateRange,
  SingularBasis,
  NumericalFailure,
  NoOrderedPairs,
  ParseError,
  IoError,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// One subclass per kind so callers (and tests) can catch precisely.
#define TUPI_DEFINE_ERROR(Name)                                    \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what)                         \
        : Error(ErrorKind::Name, what) {}                          \
  };

TUPI_DEFINE_ERROR(InvalidInput)
TUPI_DEFINE_ERROR(DegenerateScale)
TUPI_DEFINE_ERROR(DegenerateEmbedding)
TUPI_DEFINE_ERROR(DegenerateRange)
TUPI_DEFINE_ERROR(SingularBasis)
TUPI_DEFINE_ERROR(NumericalFailure)
TUPI_DEFINE_ERROR(NoOrderedPairs)
TUPI_DEFINE_ERROR(ParseError)
TUPI_DEFINE_ERROR(IoError)

#undef TUPI_DEFINE_ERROR

}  // namespace tupi
