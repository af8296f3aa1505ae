#include "feedrank/errors.hpp"

namespace feedrank {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DegenerateEmbedding: return "DegenerateEmbedding";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::EmptyLog: return "EmptyLog";
    case ErrorKind::EmptyFeed: return "EmptyFeed";
    case ErrorKind::ModeMismatch: return "ModeMismatch";
    case ErrorKind::SessionExhausted: return "SessionExhausted";
    case ErrorKind::ZeroLabelMass: return "ZeroLabelMass";
    case ErrorKind::DegenerateLabels: return "DegenerateLabels";
    case ErrorKind::BadEdges: return "BadEdges";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::CorruptModel: return "CorruptModel";
  }
  return "Error";
}

}  // namespace feedrank
