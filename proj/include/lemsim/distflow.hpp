#pragma once

#include <string>
#include <vector>

#include "lemsim/feeder.hpp"

namespace lemsim {

/// Net nodal demand, indexed by bus position in the feeder (kW / kvar,
/// positive = consumption).
struct NetInjection {
  std::vector<Profile> p_kw;
  std::vector<Profile> q_kvar;

  static NetInjection zeros(const FeederModel& feeder);
  /// Nominal bus demand times `scale`.
  static NetInjection nominal(const FeederModel& feeder, double scale = 1.0);
};

struct FlowState {
  std::vector<Profile> v_sq;    // per bus, per-unit squared magnitude
  std::vector<Profile> p_flow;  // per line, kW, parent -> child
  std::vector<Profile> q_flow;  // per line, kvar
  Profile p_root{};             // root import, kW
  double residual = 0.0;        // largest equation residual (pu); 0 for the linear model
  int iterations = 0;
};

/// Lossless linearised branch flow on the radial tree.
FlowState lindistflow(const FeederModel& feeder, const NetInjection& injection);

/// Full DistFlow equations solved by backward-forward sweep. Throws
/// NoConvergence when the sweep diverges or stalls above `tolerance`.
FlowState nonlinear_distflow_oracle(const FeederModel& feeder, const NetInjection& injection,
                                    double tolerance = 1e-8, int max_iterations = 500);

struct Violation {
  enum class Quantity { VoltageLow, VoltageHigh, LineFlow };
  Quantity quantity;
  int element;  // bus id for voltage, line index for flow
  int hour;
  double value;
  double bound;
};

std::string to_string(Violation::Quantity q);

/// Voltage and thermal-limit check; values within `tolerance` of a bound are
/// not reported.
std::vector<Violation> check_limits(const FeederModel& feeder, const FlowState& state, double tolerance = 1e-6);

}  // namespace lemsim
