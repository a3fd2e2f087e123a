#pragma once

#include <stdexcept>
#include <string>

namespace puq {

enum class ErrorKind {
  kShape,
  kInput,
  kDomain,
  kNumeric,
  kFormat,
  kConfig,
  kDegenerate,
};

// Base of every exception thrown by the library. The kind drives the CLI
// exit code mapping.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define PUQ_DEFINE_ERROR(Name, Kind)                                  \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& what) : Error(Kind, what) {}     \
  };

PUQ_DEFINE_ERROR(ShapeError, ErrorKind::kShape)
PUQ_DEFINE_ERROR(InputError, ErrorKind::kInput)
PUQ_DEFINE_ERROR(DomainError, ErrorKind::kDomain)
PUQ_DEFINE_ERROR(NumericError, ErrorKind::kNumeric)
PUQ_DEFINE_ERROR(FormatError, ErrorKind::kFormat)
PUQ_DEFINE_ERROR(ConfigError, ErrorKind::kConfig)
PUQ_DEFINE_ERROR(DegenerateError, ErrorKind::kDegenerate)

#undef PUQ_DEFINE_ERROR

}  // namespace puq
