#pragma once

#include <stdexcept>
#include <string>

namespace feedrank {

enum class ErrorKind {
  DimensionMismatch,
  DegenerateEmbedding,
  DuplicateId,
  EmptyLog,
  EmptyFeed,
  ModeMismatch,
  SessionExhausted,
  ZeroLabelMass,
  DegenerateLabels,
  BadEdges,
  InvalidConfig,
  IoError,
  VersionMismatch,
  CorruptModel,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace feedrank
