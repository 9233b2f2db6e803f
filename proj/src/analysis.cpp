#include "lemsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "lemsim/parallel.hpp"

namespace lemsim {

bool ImpactReport::zero() const {
  for (const auto& row : dlmp_dev_pct) {
    for (double v : row) {
      if (v != 0.0) return false;
    }
  }
  for (const auto& row : demand_shift_kw) {
    for (double v : row) {
      if (v != 0.0) return false;
    }
  }
  for (double v : payment_delta) {
    if (v != 0.0) return false;
  }
  return max_dev_pct == 0.0 && mean_abs_dev_pct == 0.0 && cost_delta == 0.0 && new_violations.empty();
}

namespace {

bool same_violation(const Violation& a, const Violation& b) {
  return a.quantity == b.quantity && a.element == b.element && a.hour == b.hour;
}

}  // namespace

ImpactReport impact(const FeederModel& feeder, const ClearingResult& baseline, const ClearingResult& attacked) {
  if (baseline.provenance != attacked.provenance || baseline.participant_ids != attacked.participant_ids ||
      baseline.dlmp.bus_ids != attacked.dlmp.bus_ids) {
    throw Error(ErrorKind::MismatchedProvenance, "baseline and attacked results come from different inputs");
  }
  if (baseline.dlmp.bus_ids.size() != feeder.buses.size()) {
    throw Error(ErrorKind::MismatchedProvenance, "results were not cleared on this feeder");
  }
  ImpactReport r;
  r.bus_ids = baseline.dlmp.bus_ids;
  const std::size_t nb = r.bus_ids.size();
  r.dlmp_dev_pct.assign(nb, Profile{});
  r.absolute.assign(nb, std::array<bool, kHours>{});
  r.node_max_dev_pct.assign(nb, 0.0);
  r.demand_shift_kw.assign(nb, Profile{});
  double sum_abs = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    for (int h = 0; h < kHours; ++h) {
      const double base = baseline.dlmp.price[b][h];
      const double diff = attacked.dlmp.price[b][h] - base;
      double dev;
      if (std::abs(base) < kRelativeFloor) {
        dev = diff;
        r.absolute[b][h] = true;
      } else {
        dev = 100.0 * diff / base;
      }
      r.dlmp_dev_pct[b][h] = dev;
      sum_abs += std::abs(dev);
      if (std::abs(dev) > std::abs(r.node_max_dev_pct[b])) r.node_max_dev_pct[b] = dev;
      if (std::abs(dev) > std::abs(r.max_dev_pct)) {
        r.max_dev_pct = dev;
        r.argmax_bus = r.bus_ids[b];
        r.argmax_hour = h;
      }
      r.demand_shift_kw[b][h] = attacked.nodal.p_kw[b][h] - baseline.nodal.p_kw[b][h];
    }
  }
  if (nb > 0) r.mean_abs_dev_pct = sum_abs / static_cast<double>(nb * kHours);
  if (r.max_dev_pct == 0.0 && nb > 0) r.argmax_bus = r.bus_ids[0];
  r.cost_delta = attacked.operational_cost - baseline.operational_cost;

  const auto before = check_limits(feeder, baseline.flow);
  for (const auto& v : check_limits(feeder, attacked.flow)) {
    const bool old = std::any_of(before.begin(), before.end(), [&](const Violation& b) { return same_violation(b, v); });
    if (!old) r.new_violations.push_back(v);
  }

  r.participant_ids = baseline.participant_ids;
  const auto pay_base = settle(baseline);
  const auto pay_att = settle(attacked);
  r.payment_delta.resize(pay_base.size());
  for (std::size_t p = 0; p < pay_base.size(); ++p) r.payment_delta[p] = pay_att[p] - pay_base[p];
  return r;
}

Profile demand_shift_profile(const ImpactReport& report, const std::vector<BusId>& buses) {
  Profile out{};
  for (BusId bus : buses) {
    auto it = std::find(report.bus_ids.begin(), report.bus_ids.end(), bus);
    if (it == report.bus_ids.end()) throw Error(ErrorKind::UnknownBus, "bus " + std::to_string(bus) + " is not in the report");
    const auto& row = report.demand_shift_kw[static_cast<std::size_t>(it - report.bus_ids.begin())];
    for (int h = 0; h < kHours; ++h) out[h] += row[h];
  }
  return out;
}

std::vector<SensitivityEntry> sensitivity_scan(const FeederModel& feeder, const std::vector<ParticipantModel>& pop,
                                               const Profile& wholesale, const AdmmConfig& cfg,
                                               const SensitivityProbe& probe) {
  std::vector<BusId> buses = probe.buses;
  if (buses.empty()) {
    for (const auto& b : feeder.buses) {
      const bool hosted = std::any_of(pop.begin(), pop.end(), [&](const ParticipantModel& p) { return p.bus == b.id; });
      if (hosted) buses.push_back(b.id);
    }
  }
  std::vector<AttackScenario> scenarios;
  for (BusId b : buses) {
    feeder.bus_index(b);
    AttackScenario s;
    s.kind = AttackKind::InsiderDemandInflation;
    s.participants = participants_at(pop, {b});
    if (s.participants.empty()) throw Error(ErrorKind::InvalidArgument, "no participant at bus " + std::to_string(b));
    s.hours = probe.hours;
    s.alpha = probe.alpha;
    s.validate_against(feeder, pop);
    scenarios.push_back(std::move(s));
  }

  RunOptions opts = probe.run;
  opts.wire_dump = nullptr;
  opts.warm = nullptr;
  ClearingResult reference;
  AdmmWarmStart warm;
  {
    MessageBus bus(KeyRing(opts.key_seed), opts.enforce_integrity);
    reference = admm_clear(feeder, pop, wholesale, cfg, bus);
  }
  if (probe.warm_start) {
    warm = AdmmWarmStart::from(reference);
    opts.warm = &warm;
    MessageBus bus(KeyRing(opts.key_seed), opts.enforce_integrity);
    reference = admm_clear(feeder, pop, wholesale, cfg, bus, {}, &warm);
  }

  std::vector<SensitivityEntry> out(scenarios.size());
  parallel_for(scenarios.size(), [&](std::size_t i) {
    const auto run = run_attacked(feeder, pop, wholesale, cfg, scenarios[i], opts);
    out[i] = {buses[i], std::abs(impact(feeder, reference, run.result).max_dev_pct), run.result.converged};
  });
  std::stable_sort(out.begin(), out.end(), [](const SensitivityEntry& a, const SensitivityEntry& b) {
    return std::tie(b.score, a.bus) < std::tie(a.score, b.bus);
  });
  return out;
}

}  // namespace lemsim
