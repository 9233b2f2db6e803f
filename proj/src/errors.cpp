#include "lemsim/common.hpp"

namespace lemsim {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedDocument: return "MalformedDocument";
    case ErrorKind::NonRadial: return "NonRadial";
    case ErrorKind::DuplicateBusId: return "DuplicateBusId";
    case ErrorKind::UnknownBus: return "UnknownBus";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::BusFailure: return "BusFailure";
    case ErrorKind::MismatchedProvenance: return "MismatchedProvenance";
    case ErrorKind::Config: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

}  // namespace lemsim
