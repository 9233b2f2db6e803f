#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lemsim/comms.hpp"
#include "lemsim/distflow.hpp"
#include "lemsim/feeder.hpp"
#include "lemsim/participant.hpp"

namespace lemsim {

/// Wholesale price shape used when a scenario does not give explicit values
/// ($/kWh, evening peak at 19 h).
const Profile& default_wholesale();

struct AdmmConfig {
  double rho = 0.2;
  int max_iters = 500;
  double eps_primal = 0.1;  // kW, per-participant rms
  double eps_dual = 1e-4;   // $/kWh, per-participant rms
  enum class Acceleration { None, Nesterov, Anderson };
  /// Extrapolation of the operator state (z, u) between rounds.
  Acceleration acceleration = Acceleration::Anderson;
  int anderson_memory = 8;
  void validate() const;
};

struct ResidualRecord {
  int iter = 0;
  double r_primal = 0.0;
  double r_dual = 0.0;
};

struct AdmmState {
  int iter = 0;
  std::vector<Profile> z;  // per participant
  std::vector<Profile> u;  // per participant, scaled ($/kWh / rho)
  double r_primal = 0.0;
  double r_dual = 0.0;
  std::vector<ResidualRecord> trace;
};

struct DlmpVector {
  std::vector<BusId> bus_ids;  // feeder order
  std::vector<Profile> price;  // per bus, $/kWh
  Profile wholesale{};
  std::vector<int> degenerate_hours;  // hours where the reported duals are one of several optima

  const Profile& at(BusId bus) const;
  /// price - wholesale; the loss component is identically zero in the lossless model.
  Profile congestion(BusId bus) const;
  bool degenerate() const { return !degenerate_hours.empty(); }
};

struct ClearingResult {
  std::vector<ParticipantId> participant_ids;
  std::vector<BusId> participant_bus;
  std::vector<Schedule> schedules;    // what each participant actually does
  std::vector<Profile> reported_kw;   // what the operator last received
  DlmpVector dlmp;
  NetInjection nodal;                 // physical bus demand from the schedules
  FlowState flow;
  Profile root_import_kw{};
  double energy_cost = 0.0;           // wholesale cost of root import
  double discomfort_cost = 0.0;
  double operational_cost = 0.0;      // energy + discomfort
  bool converged = false;
  std::optional<AdmmState> admm;      // absent for the centralised oracle
  std::uint64_t provenance = 0;

  int participant_index(const ParticipantId& id) const;
};

/// Fingerprint of the clearing inputs; impact() refuses to compare results
/// with different fingerprints.
std::uint64_t provenance_fingerprint(const FeederModel& feeder, const std::vector<ParticipantModel>& pop,
                                     const Profile& wholesale);

/// Exogenous reactive demand per bus (nominal kvar at load buses).
NetInjection nodal_injection(const FeederModel& feeder, const std::vector<BusId>& participant_bus,
                             const std::vector<Profile>& net_kw);

/// Single welfare problem over all devices and the linearised network.
ClearingResult central_clear(const FeederModel& feeder, const std::vector<ParticipantModel>& pop,
                             const Profile& wholesale);

// ---------------------------------------------------------------------------
// Operator-side network subproblem.

struct NetworkHourSolution {
  std::vector<double> z;        // per participant
  std::vector<double> uplift;   // per bus, (G' mu)
  Eigen::VectorXd mu;           // per kept constraint row
  std::vector<int> active_rows;
  bool degenerate = false;
};

struct NetworkSolution {
  Profile wholesale{};
  std::vector<BusId> bus_ids;
  std::array<NetworkHourSolution, kHours> hours;
};

/// z-step of the consensus iteration: projects a = x + u onto the
/// network-feasible set, priced at wholesale. Solved hour by hour as the
/// dual non-negative QP over constraint multipliers.
class NetworkStep {
 public:
  NetworkStep(const FeederModel& feeder, std::vector<BusId> participant_bus, const Profile& wholesale, double rho);

  NetworkSolution solve(const std::vector<Profile>& a) const;
  int rows() const { return static_cast<int>(rhs_.size()); }

 private:
  const FeederModel* feeder_;
  std::vector<int> part_bus_idx_;
  std::vector<double> bus_count_;
  Profile wholesale_;
  double rho_;
  Eigen::MatrixXd g_;  // rows x buses
  Eigen::MatrixXd q_;
  std::vector<Profile> rhs_;  // per row, per hour
};

DlmpVector extract_dlmp(const NetworkSolution& solution);

// ---------------------------------------------------------------------------
// Distributed clearing.

/// Operator state to resume from instead of the price-response start.
struct AdmmWarmStart {
  std::vector<Profile> z;
  std::vector<Profile> u;
  std::vector<Profile> reported;
  DlmpVector dlmp;

  static AdmmWarmStart from(const ClearingResult& converged);
};

/// Participant-side hooks. on_prices sees the verified incoming Signal3
/// payload and may rewrite it; on_offer rewrites the outgoing schedule before
/// the participant tags it with its own key.
struct AgentHooks {
  std::function<void(const ParticipantModel&, std::int64_t round, PricePayload&)> on_prices;
  std::function<void(const ParticipantModel&, std::int64_t round, bool final_round, OfferPayload&)> on_offer;
};

/// The operator side of the consensus iteration. It is built from the public
/// roster (participant id and bus) and only ever consumes Signal1b envelopes,
/// so no device data can reach it.
class MarketOperator {
 public:
  MarketOperator(const FeederModel& feeder, std::vector<std::pair<ParticipantId, BusId>> roster,
                 const Profile& wholesale, const AdmmConfig& cfg, KeyRing keys);

  /// Skips the price-response round and continues from a previous state.
  void resume(const AdmmWarmStart& warm);

  /// Tagged Signal3 envelopes for the current round.
  std::vector<SignalEnvelope> broadcast(bool final_round) const;
  /// Consumes the round's delivered offers and advances the iteration. A
  /// participant without an offer keeps its previous report. Offers answering
  /// the final broadcast are only recorded.
  void receive(const std::vector<SignalEnvelope>& offers, bool final_round = false);

  int round() const { return round_; }
  bool converged() const;
  const AdmmState& state() const { return state_; }
  const DlmpVector& dlmp() const { return dlmp_; }
  const std::vector<Profile>& reported() const { return reported_; }

 private:
  std::vector<std::pair<ParticipantId, BusId>> roster_;
  Profile wholesale_;
  AdmmConfig cfg_;
  KeyRing keys_;
  NetworkStep network_;
  int round_ = 0;
  AdmmState state_;
  std::vector<Profile> z_hat_, u_hat_;  // extrapolated point actually sent out
  double momentum_ = 1.0;
  double combined_prev_ = 0.0;
  std::vector<Eigen::VectorXd> aa_df_, aa_dg_;  // Anderson history
  Eigen::VectorXd aa_f_, aa_g_;

  void extrapolate(const std::vector<Profile>& z_old, const std::vector<Profile>& u_old, double combined);
  DlmpVector dlmp_;
  std::vector<Profile> reported_;
};

ClearingResult admm_clear(const FeederModel& feeder, const std::vector<ParticipantModel>& pop,
                          const Profile& wholesale, const AdmmConfig& cfg, MessageBus& bus,
                          const AgentHooks& hooks = {}, const AdmmWarmStart* warm = nullptr);

/// payment = sum_h dlmp[bus][h] * net_kw[h], per participant.
std::vector<double> settle(const ClearingResult& result);

/// Total participant payments minus the wholesale cost of root import.
double congestion_rent(const ClearingResult& result);

}  // namespace lemsim
