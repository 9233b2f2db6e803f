#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "lemsim/common.hpp"
#include "lemsim/feeder.hpp"

namespace lemsim {

struct FixedLoad {
  Profile profile_kw{};
};

struct FlexibleLoad {
  double energy_kwh = 0.0;
  double max_kw = 0.0;
  std::vector<int> window;  // admissible hours, sorted and unique

  /// Energy spread evenly over the window; the discomfort reference.
  Profile uniform_allocation() const;
};

/// Plugged from arrival_hour up to (excluding) departure_hour, wrapping past
/// midnight. required_kwh is the state of charge needed at departure.
struct EvModel {
  int arrival_hour = 18;
  int departure_hour = 7;
  double capacity_kwh = 50.0;
  double required_kwh = 0.0;
  double max_charge_kw = 7.2;
  double max_discharge_kw = 0.0;
  double efficiency = 0.9;  // round trip
  double soc0_kwh = 0.0;

  std::vector<int> plugged_hours() const;
};

struct PvModel {
  Profile profile_kw{};
};

struct BessModel {
  double capacity_kwh = 10.0;
  double max_charge_kw = 5.0;
  double max_discharge_kw = 5.0;
  double efficiency = 0.9;  // round trip
  double soc0_kwh = 5.0;
  double soc_final_min_kwh = 5.0;
};

inline constexpr double kDefaultDiscomfort = 0.001;  // $/kW^2h
inline constexpr double kDefaultWear = 0.01;          // $/kW^2h on EV/BESS charge and discharge

struct ParticipantModel {
  ParticipantId id;
  BusId bus = 0;
  FixedLoad fixed;
  std::optional<FlexibleLoad> flex;
  std::vector<EvModel> evs;
  std::vector<PvModel> pvs;
  std::vector<BessModel> batteries;
  double discomfort_coeff = kDefaultDiscomfort;
  double wear_coeff = kDefaultWear;
};

/// Per-device power and state-of-charge trajectory. soc_kwh is the state at
/// the end of each hour; EV entries outside the plugged interval are zero.
struct DeviceTrace {
  Profile charge_kw{};
  Profile discharge_kw{};
  Profile soc_kwh{};
};

struct Schedule {
  Profile net_kw{};  // positive = consumption
  Profile fixed_kw{};
  Profile pv_kw{};
  Profile flex_kw{};
  std::vector<DeviceTrace> evs;
  std::vector<DeviceTrace> batteries;
  double discomfort = 0.0;  // $ of flex discomfort plus storage wear at this schedule
};

/// Throws Infeasible when a device cannot meet its own constraints in
/// isolation (e.g. an EV that cannot reach its departure target).
void check_device_feasibility(const ParticipantModel& p);

/// Reusable local solver for one participant: the QP structure and its
/// symbolic factorisation are built once and reused across ADMM rounds.
class LocalSolver {
 public:
  explicit LocalSolver(ParticipantModel participant);
  ~LocalSolver();
  LocalSolver(LocalSolver&&) noexcept;
  LocalSolver& operator=(LocalSolver&&) noexcept;

  const ParticipantModel& participant() const;

  /// Minimises price.net + discomfort + rho/2 |net - target + dual|^2.
  /// rho == 0 gives the plain price response.
  Schedule solve(const Profile& price, const Profile& target, const Profile& dual, double rho);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Schedule local_optimize(const ParticipantModel& p, const Profile& price, const Profile& consensus_target,
                        const Profile& dual, double rho);

/// rho -> 0 limit of local_optimize.
Schedule price_response(const ParticipantModel& p, const Profile& price);

struct PopulationSpec {
  int evs = 215;
  int pvs = 221;
  int batteries = 217;
  double flex_share = 0.05;
  double discomfort_coeff = kDefaultDiscomfort;
  double wear_coeff = kDefaultWear;
  int max_devices_per_bus = 64;
};

/// One participant per load bus, devices placed uniformly at random (seeded).
std::vector<ParticipantModel> generate_population(const FeederModel& feeder, const PopulationSpec& spec,
                                                  std::uint64_t seed);

/// Normalised bundled PV output shape (peak 1.0 at 13 h, zero at night).
const Profile& pv_shape();

}  // namespace lemsim
