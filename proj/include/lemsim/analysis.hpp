#pragma once

#include <vector>

#include "lemsim/attack.hpp"
#include "lemsim/distflow.hpp"
#include "lemsim/market.hpp"

namespace lemsim {

/// Baseline prices below this magnitude are compared in absolute terms.
inline constexpr double kRelativeFloor = 1e-4;

struct ImpactReport {
  std::vector<BusId> bus_ids;
  std::vector<Profile> dlmp_dev_pct;  // per bus; absolute $/kWh where flagged
  std::vector<std::array<bool, kHours>> absolute;
  double max_dev_pct = 0.0;  // signed value of largest magnitude
  BusId argmax_bus = 0;
  int argmax_hour = 0;
  double mean_abs_dev_pct = 0.0;
  std::vector<double> node_max_dev_pct;  // per bus, signed value of largest magnitude
  std::vector<Profile> demand_shift_kw;  // per bus, attacked - baseline
  double cost_delta = 0.0;
  std::vector<Violation> new_violations;
  std::vector<ParticipantId> participant_ids;
  std::vector<double> payment_delta;

  /// True when every field is zero or empty.
  bool zero() const;
};

/// Throws MismatchedProvenance when the two results were cleared from
/// different inputs.
ImpactReport impact(const FeederModel& feeder, const ClearingResult& baseline, const ClearingResult& attacked);

/// Hour-by-hour shift summed over the given buses. Throws UnknownBus.
Profile demand_shift_profile(const ImpactReport& report, const std::vector<BusId>& buses);

struct SensitivityProbe {
  double alpha = 1.1;
  std::vector<int> hours{16};
  std::vector<BusId> buses;  // empty: every bus hosting a participant
  /// Resume every probe from the converged baseline instead of a cold start.
  bool warm_start = true;
  RunOptions run;
};

struct SensitivityEntry {
  BusId bus = 0;
  double score = 0.0;  // |max_dev_pct|
  bool converged = true;
};

/// One insider probe per bus; sorted by score (descending, ties by bus id).
std::vector<SensitivityEntry> sensitivity_scan(const FeederModel& feeder, const std::vector<ParticipantModel>& pop,
                                               const Profile& wholesale, const AdmmConfig& cfg,
                                               const SensitivityProbe& probe = {});

}  // namespace lemsim
