#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace lemsim {

inline constexpr int kHours = 24;

/// One value per hour of the day-ahead horizon.
using Profile = std::array<double, kHours>;

using BusId = int;
using ParticipantId = std::string;

inline Profile constant_profile(double value) {
  Profile p;
  p.fill(value);
  return p;
}

enum class ErrorKind {
  MalformedDocument,
  NonRadial,
  DuplicateBusId,
  UnknownBus,
  NoConvergence,
  Infeasible,
  InvalidSpec,
  InvalidArgument,
  BusFailure,
  MismatchedProvenance,
  Config,
};

const char* to_string(ErrorKind kind);

/// Every failure surfaced by the library carries one of the ErrorKind tags so
/// callers (and the CLI exit-code mapping) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace lemsim
