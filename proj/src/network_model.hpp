#pragma once

#include <vector>

#include <Eigen/Dense>

#include "lemsim/distflow.hpp"
#include "lemsim/feeder.hpp"

namespace lemsim::detail {

/// Voltage-constraint rows are multiplied by this so their coefficients are
/// of the same order as the 0/1 line-flow rows.
inline constexpr double kVoltageScale = 1e4;

/// Linear sensitivities of the lossless branch-flow model.
struct NetworkSensitivity {
  Eigen::MatrixXd subtree;       // lines x buses: 1 if the bus is fed through the line
  Eigen::MatrixXd resistance;    // buses x buses: common root-path resistance (pu)
  std::vector<Profile> q_drop;   // per bus: squared-voltage drop caused by reactive demand
};

NetworkSensitivity network_sensitivity(const FeederModel& feeder, const NetInjection& reactive);

/// Reactive demand used by every clearing model: nominal kvar at load buses.
NetInjection reactive_injection(const FeederModel& feeder);

}  // namespace lemsim::detail
