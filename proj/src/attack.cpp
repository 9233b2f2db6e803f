#include "lemsim/attack.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace lemsim {

std::string to_string(AttackKind kind) {
  return kind == AttackKind::InsiderDemandInflation ? "insider_inflation" : "external_tamper";
}

namespace {

void check_hours(const std::vector<int>& hours, const char* what) {
  std::set<int> seen;
  for (int h : hours) {
    if (h < 0 || h >= kHours) throw Error(ErrorKind::InvalidArgument, std::string(what) + " hour out of range");
    if (!seen.insert(h).second) throw Error(ErrorKind::InvalidArgument, std::string(what) + " hour listed twice");
  }
}

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

void inflate(const AttackScenario& s, Profile& net) {
  for (int h : s.hours) {
    if (net[h] > 0.0) net[h] *= s.alpha;
  }
}

}  // namespace

void TamperRule::validate() const {
  check_hours(valley_hours, "valley");
  if (!(valley_factor > 0.0 && valley_factor <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "valley_factor must lie in (0, 1]");
  }
  if (!(peak_factor >= 1.0) || !std::isfinite(peak_factor)) {
    throw Error(ErrorKind::InvalidArgument, "peak_factor must be finite and >= 1");
  }
}

double TamperRule::factor(int hour) const { return contains(valley_hours, hour) ? valley_factor : peak_factor; }

Profile TamperRule::apply(const Profile& prices) const {
  Profile out = prices;
  for (int h = 0; h < kHours; ++h) out[h] *= factor(h);
  return out;
}

void AttackScenario::validate() const {
  if (kind == AttackKind::InsiderDemandInflation) {
    if (participants.empty()) throw Error(ErrorKind::InvalidArgument, "insider scenario without target participants");
    if (hours.empty()) throw Error(ErrorKind::InvalidArgument, "insider scenario without hours");
    check_hours(hours, "attack");
    if (!(alpha >= 1.0 && alpha <= kMaxInflation)) {
      throw Error(ErrorKind::InvalidArgument, "inflation factor must lie in [1, " + std::to_string(kMaxInflation) + "]");
    }
  } else {
    if (buses.empty()) throw Error(ErrorKind::InvalidArgument, "external scenario without target buses");
    check_hours(hours, "attack");
    rule.validate();
  }
}

void AttackScenario::validate_against(const FeederModel& feeder, const std::vector<ParticipantModel>& pop) const {
  validate();
  if (kind == AttackKind::InsiderDemandInflation) {
    for (const auto& id : participants) {
      const bool found = std::any_of(pop.begin(), pop.end(), [&](const ParticipantModel& p) { return p.id == id; });
      if (!found) throw Error(ErrorKind::InvalidArgument, "unknown target participant " + id);
    }
  } else {
    for (BusId b : buses) feeder.bus_index(b);
  }
}

bool AttackScenario::targets(const ParticipantId& id) const {
  return std::find(participants.begin(), participants.end(), id) != participants.end();
}

bool AttackScenario::targets(BusId bus) const { return std::find(buses.begin(), buses.end(), bus) != buses.end(); }

std::vector<ParticipantId> participants_at(const std::vector<ParticipantModel>& pop, const std::vector<BusId>& buses) {
  std::vector<ParticipantId> out;
  for (const auto& p : pop) {
    if (std::find(buses.begin(), buses.end(), p.bus) != buses.end()) out.push_back(p.id);
  }
  return out;
}

SignalEnvelope insider_inflate(const AttackScenario& scenario, SignalEnvelope offer, const Bytes& insider_key) {
  if (scenario.kind != AttackKind::InsiderDemandInflation) {
    throw Error(ErrorKind::InvalidArgument, "insider_inflate needs an insider scenario");
  }
  if (offer.kind != SignalKind::Signal1b) throw Error(ErrorKind::InvalidArgument, "insider_inflate rewrites Signal1b only");
  if (!scenario.targets(offer.sender)) throw Error(ErrorKind::InvalidArgument, offer.sender + " is not an insider");
  inflate(scenario, offer.offer().net_kw);
  return tag_integrity(std::move(offer), insider_key);
}

SignalEnvelope external_tamper(const AttackScenario& scenario, SignalEnvelope prices) {
  if (scenario.kind != AttackKind::ExternalDlmpTamper) {
    throw Error(ErrorKind::InvalidArgument, "external_tamper needs an external scenario");
  }
  if (prices.kind != SignalKind::Signal3) throw Error(ErrorKind::InvalidArgument, "external_tamper rewrites Signal3 only");
  auto& pp = prices.prices();
  if (!scenario.targets(pp.bus)) throw Error(ErrorKind::InvalidArgument, "bus " + std::to_string(pp.bus) + " is not targeted");
  pp.dlmp = scenario.rule.apply(pp.dlmp);
  return prices;
}

AgentHooks insider_hooks(const AttackScenario& scenario) {
  AgentHooks hooks;
  if (scenario.kind != AttackKind::InsiderDemandInflation) return hooks;
  hooks.on_offer = [scenario](const ParticipantModel& p, std::int64_t, bool final_round, OfferPayload& offer) {
    if (!scenario.targets(p.id)) return;
    if (scenario.tamper_every_iteration || final_round) inflate(scenario, offer.net_kw);
  };
  hooks.on_prices = [scenario](const ParticipantModel& p, std::int64_t round, PricePayload& pp) {
    if (!scenario.targets(p.id) || !scenario.tamper_every_iteration || round == 0) return;
    for (int h : scenario.hours) {
      if (pp.consensus[h] > 0.0) {
        pp.consensus[h] /= scenario.alpha;
        pp.dual[h] /= scenario.alpha;
      }
    }
  };
  return hooks;
}

InterceptorChain external_chain(const AttackScenario& scenario) {
  InterceptorChain chain;
  if (scenario.kind != AttackKind::ExternalDlmpTamper) return chain;
  chain.push_back(only_kind(SignalKind::Signal3, [scenario](SignalEnvelope env) -> std::optional<SignalEnvelope> {
    const auto& pp = env.prices();
    if (!scenario.targets(pp.bus)) return env;
    if (!scenario.tamper_every_iteration && !pp.final_round) return env;
    return external_tamper(scenario, std::move(env));
  }));
  return chain;
}

AttackedRun run_attacked(const FeederModel& feeder, const std::vector<ParticipantModel>& pop,
                         const Profile& wholesale, const AdmmConfig& cfg, const AttackScenario& scenario,
                         const RunOptions& opts) {
  scenario.validate_against(feeder, pop);
  MessageBus bus(KeyRing(opts.key_seed), opts.enforce_integrity);
  bus.set_chain(external_chain(scenario));
  bus.set_wire_dump(opts.wire_dump);
  AttackedRun run;
  run.result = admm_clear(feeder, pop, wholesale, cfg, bus, insider_hooks(scenario), opts.warm);
  run.rejected = bus.rejected_count();
  run.modified = bus.modified_count();
  return run;
}

ScenarioOutcome run_scenario(const FeederModel& feeder, const std::vector<ParticipantModel>& pop,
                             const Profile& wholesale, const AdmmConfig& cfg, const AttackScenario& scenario,
                             const RunOptions& opts) {
  scenario.validate_against(feeder, pop);
  ScenarioOutcome out;
  {
    MessageBus bus(KeyRing(opts.key_seed), opts.enforce_integrity);
    out.baseline = admm_clear(feeder, pop, wholesale, cfg, bus, {}, opts.warm);
  }
  auto run = run_attacked(feeder, pop, wholesale, cfg, scenario, opts);
  out.attacked = std::move(run.result);
  out.rejected = run.rejected;
  out.modified = run.modified;
  return out;
}

}  // namespace lemsim
