#include <algorithm>
#include <cmath>

#include "lemsim/participant.hpp"

namespace lemsim {

Profile FlexibleLoad::uniform_allocation() const {
  Profile out{};
  if (window.empty()) return out;
  const double each = energy_kwh / static_cast<double>(window.size());
  for (int h : window) out[h] = each;
  return out;
}

std::vector<int> EvModel::plugged_hours() const {
  std::vector<int> hours;
  int span = ((departure_hour - arrival_hour) % kHours + kHours) % kHours;
  if (span == 0) span = kHours;
  for (int k = 0; k < span; ++k) hours.push_back((arrival_hour + k) % kHours);
  return hours;
}

const Profile& pv_shape() {
  static const Profile shape = {0.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.05, 0.18, 0.36, 0.55, 0.72, 0.86,
                                0.96, 1.0,  0.95, 0.83, 0.66, 0.45, 0.24, 0.07, 0.0,  0.0,  0.0,  0.0};
  return shape;
}

namespace {

void require(bool ok, const ParticipantModel& p, const std::string& what) {
  if (!ok) throw Error(ErrorKind::Infeasible, "participant " + p.id + ": " + what);
}

constexpr double kSlack = 1e-9;

}  // namespace

void check_device_feasibility(const ParticipantModel& p) {
  require(p.discomfort_coeff >= 0.0, p, "negative discomfort coefficient");
  require(p.wear_coeff >= 0.0, p, "negative wear coefficient");
  for (int h = 0; h < kHours; ++h) require(p.fixed.profile_kw[h] >= 0.0, p, "negative fixed load");
  for (const auto& pv : p.pvs) {
    for (int h = 0; h < kHours; ++h) require(pv.profile_kw[h] >= 0.0, p, "negative PV output");
  }
  if (p.flex) {
    const auto& f = *p.flex;
    require(f.energy_kwh >= 0.0 && f.max_kw >= 0.0, p, "flexible load needs non-negative energy and power");
    require(std::is_sorted(f.window.begin(), f.window.end()) &&
                std::adjacent_find(f.window.begin(), f.window.end()) == f.window.end(),
            p, "flexible window must be sorted and unique");
    for (int h : f.window) require(h >= 0 && h < kHours, p, "flexible window hour out of range");
    require(f.energy_kwh <= f.max_kw * static_cast<double>(f.window.size()) + kSlack, p,
            "flexible energy exceeds max_kw x window");
  }
  for (const auto& ev : p.evs) {
    require(ev.arrival_hour >= 0 && ev.arrival_hour < kHours && ev.departure_hour >= 0 && ev.departure_hour < kHours,
            p, "EV hours out of range");
    require(ev.efficiency > 0.0 && ev.efficiency <= 1.0, p, "EV efficiency outside (0,1]");
    require(ev.capacity_kwh > 0.0 && ev.max_charge_kw >= 0.0 && ev.max_discharge_kw >= 0.0, p,
            "EV limits must be non-negative");
    require(ev.soc0_kwh >= 0.0 && ev.soc0_kwh <= ev.capacity_kwh, p, "EV initial SoC outside capacity");
    require(ev.required_kwh <= ev.capacity_kwh, p, "EV requirement exceeds capacity");
    const double reach = ev.soc0_kwh + std::sqrt(ev.efficiency) * ev.max_charge_kw *
                                           static_cast<double>(ev.plugged_hours().size());
    require(reach + kSlack >= ev.required_kwh, p, "EV requirement unreachable within the plugged window");
  }
  for (const auto& b : p.batteries) {
    require(b.efficiency > 0.0 && b.efficiency <= 1.0, p, "battery efficiency outside (0,1]");
    require(b.capacity_kwh > 0.0 && b.max_charge_kw >= 0.0 && b.max_discharge_kw >= 0.0, p,
            "battery limits must be non-negative");
    require(b.soc0_kwh >= 0.0 && b.soc0_kwh <= b.capacity_kwh, p, "battery initial SoC outside capacity");
    require(b.soc_final_min_kwh <= b.capacity_kwh, p, "battery terminal floor exceeds capacity");
    const double reach = b.soc0_kwh + std::sqrt(b.efficiency) * b.max_charge_kw * kHours;
    require(reach + kSlack >= b.soc_final_min_kwh, p, "battery terminal floor unreachable");
  }
}

}  // namespace lemsim
