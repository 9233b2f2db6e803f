#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lemsim/comms.hpp"
#include "lemsim/market.hpp"

namespace lemsim {

enum class AttackKind { InsiderDemandInflation, ExternalDlmpTamper };

std::string to_string(AttackKind kind);

inline constexpr double kMaxInflation = 3.0;

/// Price rewrite used by the external attacker: valley hours are scaled by
/// valley_factor, every other hour by peak_factor.
struct TamperRule {
  std::vector<int> valley_hours;
  double valley_factor = 1.0;
  double peak_factor = 1.0;

  void validate() const;
  double factor(int hour) const;
  Profile apply(const Profile& prices) const;
};

struct AttackScenario {
  AttackKind kind = AttackKind::InsiderDemandInflation;
  std::vector<ParticipantId> participants;  // insider targets
  std::vector<BusId> buses;                 // external targets
  std::vector<int> hours;                   // insider tamper hours
  double alpha = 1.0;
  TamperRule rule;
  bool tamper_every_iteration = true;
  std::uint64_t seed = 0;

  /// Shape checks only; validate_against() also resolves the targets.
  void validate() const;
  void validate_against(const FeederModel& feeder, const std::vector<ParticipantModel>& pop) const;
  bool targets(const ParticipantId& id) const;
  bool targets(BusId bus) const;
};

/// Participant ids located at the given buses, in population order.
std::vector<ParticipantId> participants_at(const std::vector<ParticipantModel>& pop, const std::vector<BusId>& buses);

/// Scales the consumption entries of a Signal1b at the scenario hours and
/// re-tags it with the insider's own key.
SignalEnvelope insider_inflate(const AttackScenario& scenario, SignalEnvelope offer, const Bytes& insider_key);

/// Rewrites the DLMP vector of a Signal3 per the tamper rule. The tag is left
/// as it was, so a verifying receiver notices.
SignalEnvelope external_tamper(const AttackScenario& scenario, SignalEnvelope prices);

/// Hooks that make the target participants behave as insiders inside the
/// consensus iteration. Alongside inflating what they report, insiders scale
/// the consensus they are sent back down by the same factor so their own
/// iteration stays consistent with what they really do.
AgentHooks insider_hooks(const AttackScenario& scenario);

/// Interceptors placed on the participant <-> operator link by the external
/// attacker.
InterceptorChain external_chain(const AttackScenario& scenario);

struct RunOptions {
  bool enforce_integrity = false;
  std::uint64_t key_seed = 0;
  std::ostream* wire_dump = nullptr;
  const AdmmWarmStart* warm = nullptr;
};

struct AttackedRun {
  ClearingResult result;
  std::size_t rejected = 0;
  std::size_t modified = 0;
};

struct ScenarioOutcome {
  ClearingResult baseline;
  ClearingResult attacked;
  std::size_t rejected = 0;  // tampered envelopes caught at the receiver
  std::size_t modified = 0;  // envelopes changed in transit
};

AttackedRun run_attacked(const FeederModel& feeder, const std::vector<ParticipantModel>& pop,
                         const Profile& wholesale, const AdmmConfig& cfg, const AttackScenario& scenario,
                         const RunOptions& opts = {});

/// Baseline over an untouched bus, then the attacked run with the same keys
/// and settings.
ScenarioOutcome run_scenario(const FeederModel& feeder, const std::vector<ParticipantModel>& pop,
                             const Profile& wholesale, const AdmmConfig& cfg, const AttackScenario& scenario,
                             const RunOptions& opts = {});

}  // namespace lemsim
