#include "instances.hpp"

#include <fstream>

namespace lemtest {

using namespace lemsim;

std::filesystem::path data_dir() { return LEMSIM_DATA_DIR; }
std::filesystem::path test_data_dir() { return LEMSIM_TEST_DATA_DIR; }
std::filesystem::path scenario_dir() { return LEMSIM_SCENARIO_DIR; }

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return nlohmann::json::parse(in);
}

FeederModel mini5() { return load_feeder(test_data_dir() / "mini5.json"); }

std::vector<ParticipantModel> mini5_population() {
  const FeederModel f = mini5();
  auto base = [&](BusId b) { return f.buses[f.bus_index(b)].nominal_kw; };
  std::vector<int> all(kHours);
  for (int h = 0; h < kHours; ++h) all[h] = h;

  ParticipantModel p2;
  p2.id = "P2";
  p2.bus = 2;
  p2.fixed.profile_kw = base(2);
  p2.flex = FlexibleLoad{240.0, 20.0, all};
  p2.batteries.push_back({100.0, 25.0, 25.0, 0.9, 50.0, 50.0});

  ParticipantModel p4;
  p4.id = "P4";
  p4.bus = 4;
  p4.fixed.profile_kw = base(4);
  std::vector<int> day;
  for (int h = 8; h < 22; ++h) day.push_back(h);
  p4.flex = FlexibleLoad{60.0, 10.0, day};
  EvModel ev;
  ev.arrival_hour = 18;
  ev.departure_hour = 7;
  ev.capacity_kwh = 60.0;
  ev.required_kwh = 40.0;
  ev.max_charge_kw = 11.0;
  ev.max_discharge_kw = 0.0;
  ev.efficiency = 0.9;
  ev.soc0_kwh = 10.0;
  p4.evs.push_back(ev);
  PvModel pv;
  for (int h = 0; h < kHours; ++h) pv.profile_kw[h] = 60.0 * pv_shape()[h];
  p4.pvs.push_back(pv);
  p4.batteries.push_back({30.0, 10.0, 10.0, 0.9, 15.0, 15.0});

  ParticipantModel p5;
  p5.id = "P5";
  p5.bus = 5;
  p5.fixed.profile_kw = base(5);
  p5.flex = FlexibleLoad{120.0, 15.0, all};
  p5.batteries.push_back({80.0, 20.0, 20.0, 0.92, 40.0, 40.0});
  return {p2, p4, p5};
}

FeederModel ieee69() { return load_feeder(data_dir() / "ieee69.json"); }

std::vector<ParticipantModel> ieee69_population(std::uint64_t seed) {
  return generate_population(ieee69(), PopulationSpec{}, seed);
}

std::vector<ParticipantModel> uniform_population(const FeederModel& feeder, double flex_kwh, double battery_kwh) {
  std::vector<int> all(kHours);
  for (int h = 0; h < kHours; ++h) all[h] = h;
  std::vector<ParticipantModel> pop;
  for (const auto& bus : feeder.buses) {
    if (bus.id == feeder.root) continue;
    ParticipantModel p;
    p.id = "U" + std::to_string(bus.id);
    p.bus = bus.id;
    p.fixed.profile_kw = bus.nominal_kw;
    p.flex = FlexibleLoad{flex_kwh, flex_kwh / 4.0, all};
    p.batteries.push_back({battery_kwh, battery_kwh / 4.0, battery_kwh / 4.0, 0.9, battery_kwh / 2.0, battery_kwh / 2.0});
    pop.push_back(std::move(p));
  }
  return pop;
}

}  // namespace lemtest
