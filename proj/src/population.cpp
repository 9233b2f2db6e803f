#include <array>
#include <cmath>
#include <cstdio>
#include <random>

#include "lemsim/participant.hpp"

namespace lemsim {

namespace {

// mt19937_64 output is fixed by the standard; the distributions are not, so
// draws are mapped to [0,1) by hand.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : gen_(seed) {}
  double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  int index(int n) { return std::min(n - 1, static_cast<int>(unit() * n)); }
  template <std::size_t N>
  int weighted(const std::array<double, N>& w) {
    double total = 0.0;
    for (double v : w) total += v;
    double u = unit() * total;
    for (std::size_t i = 0; i < N; ++i) {
      if (u < w[i]) return static_cast<int>(i);
      u -= w[i];
    }
    return static_cast<int>(N) - 1;
  }

 private:
  std::mt19937_64 gen_;
};

constexpr int kArrivalFirst = 15;
constexpr std::array<double, 8> kArrivalWeight = {1, 2, 4, 6, 4, 3, 2, 1};  // 15..22
constexpr int kDepartureFirst = 6;
constexpr std::array<double, 4> kDepartureWeight = {3, 5, 3, 1};  // 6..9

}  // namespace

std::vector<ParticipantModel> generate_population(const FeederModel& feeder, const PopulationSpec& spec,
                                                  std::uint64_t seed) {
  if (spec.evs < 0 || spec.pvs < 0 || spec.batteries < 0) {
    throw Error(ErrorKind::InvalidSpec, "device counts must be non-negative");
  }
  if (!(spec.flex_share >= 0.0) || !std::isfinite(spec.flex_share)) {
    throw Error(ErrorKind::InvalidSpec, "flex_share must be a non-negative number");
  }
  if (spec.max_devices_per_bus <= 0) throw Error(ErrorKind::InvalidSpec, "max_devices_per_bus must be positive");
  const auto buses = feeder.load_buses();
  const long long devices = static_cast<long long>(spec.evs) + spec.pvs + spec.batteries;
  const int nb = static_cast<int>(buses.size());
  if (devices > 0 && nb == 0) throw Error(ErrorKind::InvalidSpec, "devices requested on a feeder without load buses");
  if (devices > static_cast<long long>(nb) * spec.max_devices_per_bus) {
    throw Error(ErrorKind::InvalidSpec, std::to_string(devices) + " devices exceed " +
                                            std::to_string(spec.max_devices_per_bus) + " per bus on " +
                                            std::to_string(nb) + " load buses");
  }

  std::vector<ParticipantModel> out;
  out.reserve(buses.size());
  for (BusId b : buses) {
    ParticipantModel p;
    char name[16];
    std::snprintf(name, sizeof name, "P%03d", b);
    p.id = name;
    p.bus = b;
    p.fixed.profile_kw = feeder.buses[feeder.bus_index(b)].nominal_kw;
    p.discomfort_coeff = spec.discomfort_coeff;
    p.wear_coeff = spec.wear_coeff;
    if (spec.flex_share > 0.0) {
      double daily = 0.0;
      for (double v : p.fixed.profile_kw) daily += v;
      FlexibleLoad f;
      f.energy_kwh = spec.flex_share * daily;
      f.max_kw = 3.0 * f.energy_kwh / kHours;
      for (int h = 0; h < kHours; ++h) f.window.push_back(h);
      p.flex = f;
    }
    out.push_back(std::move(p));
  }

  Draw rng(seed);
  std::vector<int> used(buses.size(), 0);
  auto place = [&]() -> ParticipantModel& {
    int i = rng.index(nb);
    while (used[i] >= spec.max_devices_per_bus) i = (i + 1) % nb;
    ++used[i];
    return out[i];
  };

  for (int k = 0; k < spec.evs; ++k) {
    auto& p = place();
    EvModel ev;
    ev.capacity_kwh = rng.uniform(40.0, 75.0);
    ev.arrival_hour = kArrivalFirst + rng.weighted(kArrivalWeight);
    ev.departure_hour = kDepartureFirst + rng.weighted(kDepartureWeight);
    ev.soc0_kwh = rng.uniform(0.2, 0.5) * ev.capacity_kwh;
    ev.required_kwh = std::min(0.9 * ev.capacity_kwh, ev.soc0_kwh + rng.uniform(8.0, 25.0));
    ev.max_charge_kw = 7.2;
    ev.max_discharge_kw = 7.2;
    ev.efficiency = 0.9;
    p.evs.push_back(ev);
  }
  for (int k = 0; k < spec.pvs; ++k) {
    auto& p = place();
    const double kwp = rng.uniform(3.0, 8.0);
    PvModel pv;
    for (int h = 0; h < kHours; ++h) pv.profile_kw[h] = kwp * pv_shape()[h];
    p.pvs.push_back(pv);
  }
  for (int k = 0; k < spec.batteries; ++k) {
    auto& p = place();
    BessModel b;
    b.capacity_kwh = rng.uniform(5.0, 15.0);
    b.max_charge_kw = b.capacity_kwh / 2.5;
    b.max_discharge_kw = b.max_charge_kw;
    b.efficiency = 0.9;
    b.soc0_kwh = 0.5 * b.capacity_kwh;
    b.soc_final_min_kwh = b.soc0_kwh;
    p.batteries.push_back(b);
  }
  return out;
}

}  // namespace lemsim
