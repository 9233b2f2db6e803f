#include <bit>
#include <cmath>
#include <cstring>

#include "clearing_detail.hpp"
#include "network_model.hpp"

namespace lemsim {

const Profile& default_wholesale() {
  static const Profile w = {0.060, 0.055, 0.052, 0.050, 0.052, 0.058, 0.070, 0.085, 0.095, 0.098, 0.100, 0.100,
                            0.098, 0.095, 0.095, 0.100, 0.050, 0.125, 0.145, 0.160, 0.150, 0.125, 0.095, 0.075};
  return w;
}

void AdmmConfig::validate() const {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw Error(ErrorKind::InvalidArgument, "admm rho must be positive");
  if (max_iters < 1) throw Error(ErrorKind::InvalidArgument, "admm max_iters must be at least 1");
  if (!(eps_primal > 0.0) || !(eps_dual > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "admm tolerances must be positive");
  }
  if (anderson_memory < 1) throw Error(ErrorKind::InvalidArgument, "anderson_memory must be at least 1");
}

const Profile& DlmpVector::at(BusId bus) const {
  for (std::size_t i = 0; i < bus_ids.size(); ++i) {
    if (bus_ids[i] == bus) return price[i];
  }
  throw Error(ErrorKind::UnknownBus, "no price for bus " + std::to_string(bus));
}

Profile DlmpVector::congestion(BusId bus) const {
  Profile out = at(bus);
  for (int h = 0; h < kHours; ++h) out[h] -= wholesale[h];
  return out;
}

int ClearingResult::participant_index(const ParticipantId& id) const {
  for (std::size_t i = 0; i < participant_ids.size(); ++i) {
    if (participant_ids[i] == id) return static_cast<int>(i);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown participant " + id);
}

namespace {

class Fnv {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= b[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void num(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    bytes(&bits, sizeof bits);
  }
  void num(long long v) { bytes(&v, sizeof v); }
  void str(const std::string& s) {
    num(static_cast<long long>(s.size()));
    bytes(s.data(), s.size());
  }
  void profile(const Profile& p) {
    for (double v : p) num(v);
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace

std::uint64_t provenance_fingerprint(const FeederModel& feeder, const std::vector<ParticipantModel>& pop,
                                     const Profile& wholesale) {
  Fnv f;
  f.str(feeder.name);
  f.num(static_cast<long long>(feeder.root));
  f.num(feeder.vmin_pu);
  f.num(feeder.vmax_pu);
  for (const auto& b : feeder.buses) {
    f.num(static_cast<long long>(b.id));
    f.profile(b.nominal_kw);
    f.profile(b.nominal_kvar);
  }
  for (const auto& l : feeder.lines) {
    f.num(static_cast<long long>(l.from_bus));
    f.num(static_cast<long long>(l.to_bus));
    f.num(l.r);
    f.num(l.x);
    f.num(l.capacity_kw);
  }
  for (const auto& p : pop) {
    f.str(p.id);
    f.num(static_cast<long long>(p.bus));
    f.profile(p.fixed.profile_kw);
    f.num(p.discomfort_coeff);
    f.num(p.wear_coeff);
    if (p.flex) {
      f.num(p.flex->energy_kwh);
      f.num(p.flex->max_kw);
      for (int h : p.flex->window) f.num(static_cast<long long>(h));
    }
    for (const auto& ev : p.evs) {
      for (double v : {ev.capacity_kwh, ev.required_kwh, ev.max_charge_kw, ev.max_discharge_kw, ev.efficiency,
                       ev.soc0_kwh}) {
        f.num(v);
      }
      f.num(static_cast<long long>(ev.arrival_hour * 100 + ev.departure_hour));
    }
    for (const auto& pv : p.pvs) f.profile(pv.profile_kw);
    for (const auto& b : p.batteries) {
      for (double v : {b.capacity_kwh, b.max_charge_kw, b.max_discharge_kw, b.efficiency, b.soc0_kwh,
                       b.soc_final_min_kwh}) {
        f.num(v);
      }
    }
  }
  f.profile(wholesale);
  return f.value();
}

NetInjection nodal_injection(const FeederModel& feeder, const std::vector<BusId>& participant_bus,
                             const std::vector<Profile>& net_kw) {
  NetInjection inj = detail::reactive_injection(feeder);
  for (std::size_t p = 0; p < participant_bus.size(); ++p) {
    auto& row = inj.p_kw[feeder.bus_index(participant_bus[p])];
    for (int h = 0; h < kHours; ++h) row[h] += net_kw[p][h];
  }
  return inj;
}

namespace detail {

void finish_result(const FeederModel& feeder, const std::vector<ParticipantModel>& pop, const Profile& wholesale,
                   ClearingResult& r) {
  r.participant_ids.clear();
  r.participant_bus.clear();
  std::vector<Profile> net;
  for (std::size_t p = 0; p < pop.size(); ++p) {
    r.participant_ids.push_back(pop[p].id);
    r.participant_bus.push_back(pop[p].bus);
    net.push_back(r.schedules[p].net_kw);
  }
  r.nodal = nodal_injection(feeder, r.participant_bus, net);
  r.flow = lindistflow(feeder, r.nodal);
  r.root_import_kw = r.flow.p_root;
  r.energy_cost = 0.0;
  for (int h = 0; h < kHours; ++h) r.energy_cost += wholesale[h] * r.root_import_kw[h];
  r.discomfort_cost = 0.0;
  for (const auto& s : r.schedules) r.discomfort_cost += s.discomfort;
  r.operational_cost = r.energy_cost + r.discomfort_cost;
  r.provenance = provenance_fingerprint(feeder, pop, wholesale);
}

}  // namespace detail

std::vector<double> settle(const ClearingResult& result) {
  std::vector<double> pay;
  for (std::size_t p = 0; p < result.schedules.size(); ++p) {
    const Profile& price = result.dlmp.at(result.participant_bus[p]);
    double total = 0.0;
    for (int h = 0; h < kHours; ++h) total += price[h] * result.schedules[p].net_kw[h];
    pay.push_back(total);
  }
  return pay;
}

double congestion_rent(const ClearingResult& result) {
  double paid = 0.0;
  for (double v : settle(result)) paid += v;
  return paid - result.energy_cost;
}

}  // namespace lemsim
