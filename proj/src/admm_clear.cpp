#include <cmath>
#include <set>
#include <unordered_map>

#include "clearing_detail.hpp"
#include "lemsim/parallel.hpp"

namespace lemsim {

namespace {

std::vector<BusId> roster_buses(const std::vector<std::pair<ParticipantId, BusId>>& roster) {
  std::vector<BusId> out;
  for (const auto& r : roster) out.push_back(r.second);
  return out;
}

DlmpVector flat_prices(const FeederModel& feeder, const Profile& wholesale) {
  DlmpVector d;
  d.wholesale = wholesale;
  for (const auto& b : feeder.buses) {
    d.bus_ids.push_back(b.id);
    d.price.push_back(wholesale);
  }
  return d;
}

}  // namespace

MarketOperator::MarketOperator(const FeederModel& feeder, std::vector<std::pair<ParticipantId, BusId>> roster,
                               const Profile& wholesale, const AdmmConfig& cfg, KeyRing keys)
    : roster_(std::move(roster)),
      wholesale_(wholesale),
      cfg_(cfg),
      keys_(keys),
      network_(feeder, roster_buses(roster_), wholesale, cfg.rho),
      dlmp_(flat_prices(feeder, wholesale)) {
  const std::size_t n = roster_.size();
  state_.z.assign(n, Profile{});
  state_.u.assign(n, Profile{});
  reported_.assign(n, Profile{});
}

void MarketOperator::resume(const AdmmWarmStart& warm) {
  const std::size_t n = roster_.size();
  if (warm.z.size() != n || warm.u.size() != n || warm.reported.size() != n) {
    throw Error(ErrorKind::InvalidArgument, "warm start does not match the participant roster");
  }
  if (warm.dlmp.bus_ids != dlmp_.bus_ids) throw Error(ErrorKind::InvalidArgument, "warm start is for another feeder");
  state_.z = warm.z;
  state_.u = warm.u;
  reported_ = warm.reported;
  dlmp_ = warm.dlmp;
  dlmp_.wholesale = wholesale_;
  z_hat_ = state_.z;
  u_hat_ = state_.u;
  momentum_ = 1.0;
  combined_prev_ = 0.0;
  aa_df_.clear();
  aa_dg_.clear();
  aa_f_.resize(0);
  round_ = 1;
}

AdmmWarmStart AdmmWarmStart::from(const ClearingResult& converged) {
  if (!converged.admm) throw Error(ErrorKind::InvalidArgument, "warm start needs a distributed clearing result");
  return {converged.admm->z, converged.admm->u, converged.reported_kw, converged.dlmp};
}

bool MarketOperator::converged() const {
  return state_.iter > 0 && state_.r_primal <= cfg_.eps_primal && state_.r_dual <= cfg_.eps_dual;
}

std::vector<SignalEnvelope> MarketOperator::broadcast(bool final_round) const {
  std::vector<SignalEnvelope> out;
  for (std::size_t p = 0; p < roster_.size(); ++p) {
    SignalEnvelope env;
    env.kind = SignalKind::Signal3;
    env.sender = kOperatorId;
    env.receiver = roster_[p].first;
    env.round = round_;
    PricePayload pp;
    pp.bus = roster_[p].second;
    pp.dlmp = dlmp_.at(pp.bus);
    pp.final_round = final_round;
    if (round_ > 0) {
      pp.consensus = z_hat_[p];
      for (int h = 0; h < kHours; ++h) pp.dual[h] = u_hat_[p][h] - pp.dlmp[h] / cfg_.rho;
    }
    env.payload = pp;
    out.push_back(tag_integrity(std::move(env), keys_.key_for(roster_[p].first)));
  }
  return out;
}

void MarketOperator::receive(const std::vector<SignalEnvelope>& offers, bool final_round) {
  std::unordered_map<std::string, const SignalEnvelope*> by_sender;
  for (const auto& env : offers) {
    if (env.kind != SignalKind::Signal1b) throw Error(ErrorKind::InvalidArgument, "operator accepts Signal1b only");
    by_sender[env.sender] = &env;
  }
  const std::size_t n = roster_.size();
  for (std::size_t p = 0; p < n; ++p) {
    auto it = by_sender.find(roster_[p].first);
    if (it == by_sender.end()) {
      if (round_ == 0) throw Error(ErrorKind::BusFailure, "no initial offer from " + roster_[p].first);
      continue;
    }
    reported_[p] = it->second->offer().net_kw;
  }
  if (final_round) return;

  if (round_ == 0) {
    state_.z = reported_;
    for (std::size_t p = 0; p < n; ++p) {
      for (int h = 0; h < kHours; ++h) state_.u[p][h] = wholesale_[h] / cfg_.rho;
    }
    z_hat_ = state_.z;
    u_hat_ = state_.u;
    ++round_;
    return;
  }

  std::vector<Profile> a(n);
  for (std::size_t p = 0; p < n; ++p) {
    for (int h = 0; h < kHours; ++h) a[p][h] = reported_[p][h] + u_hat_[p][h];
  }
  const NetworkSolution sol = network_.solve(a);
  const auto z_old = state_.z;
  const auto u_old = state_.u;
  double primal = 0.0, dual = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    for (int h = 0; h < kHours; ++h) {
      const double z = sol.hours[h].z[p];
      const double r = reported_[p][h] - z;
      const double dz = z - z_hat_[p][h];
      primal += r * r;
      dual += dz * dz;
      state_.z[p][h] = z;
      state_.u[p][h] = u_hat_[p][h] + r;
    }
  }
  const double scale = n ? std::sqrt(static_cast<double>(n)) : 1.0;
  state_.r_primal = std::sqrt(primal) / scale;
  state_.r_dual = cfg_.rho * std::sqrt(dual) / scale;
  ++state_.iter;
  state_.trace.push_back({state_.iter, state_.r_primal, state_.r_dual});
  dlmp_ = extract_dlmp(sol);

  extrapolate(z_old, u_old, cfg_.rho * (primal + dual));
  ++round_;
}

void MarketOperator::extrapolate(const std::vector<Profile>& z_old, const std::vector<Profile>& u_old,
                                 double combined) {
  const std::size_t n = roster_.size();
  constexpr double kRestart = 0.999;
  const bool improving = state_.iter > 1 && combined < kRestart * combined_prev_;
  combined_prev_ = combined;

  if (cfg_.acceleration == AdmmConfig::Acceleration::Nesterov && improving) {
    const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum_ * momentum_));
    const double beta = (momentum_ - 1.0) / next;
    for (std::size_t p = 0; p < n; ++p) {
      for (int h = 0; h < kHours; ++h) {
        z_hat_[p][h] = state_.z[p][h] + beta * (state_.z[p][h] - z_old[p][h]);
        u_hat_[p][h] = state_.u[p][h] + beta * (state_.u[p][h] - u_old[p][h]);
      }
    }
    momentum_ = next;
    return;
  }
  momentum_ = 1.0;

  if (cfg_.acceleration == AdmmConfig::Acceleration::Anderson) {
    // Type-II Anderson mixing on the map (z_hat, u_hat) -> (z, u). The
    // history is dropped whenever the fixed-point residual grows.
    const Eigen::Index dim = static_cast<Eigen::Index>(2 * n * kHours);
    Eigen::VectorXd f(dim), g(dim);
    Eigen::Index k = 0;
    for (std::size_t p = 0; p < n; ++p) {
      for (int h = 0; h < kHours; ++h, k += 2) {
        f[k] = state_.z[p][h];
        f[k + 1] = state_.u[p][h];
        g[k] = state_.z[p][h] - z_hat_[p][h];
        g[k + 1] = state_.u[p][h] - u_hat_[p][h];
      }
    }
    if (!improving) {
      aa_df_.clear();
      aa_dg_.clear();
    } else if (aa_f_.size() == dim) {
      aa_df_.push_back(f - aa_f_);
      aa_dg_.push_back(g - aa_g_);
      if (static_cast<int>(aa_df_.size()) > cfg_.anderson_memory) {
        aa_df_.erase(aa_df_.begin());
        aa_dg_.erase(aa_dg_.begin());
      }
    }
    aa_f_ = f;
    aa_g_ = g;
    Eigen::VectorXd next = f;
    if (!aa_dg_.empty()) {
      const Eigen::Index mem = static_cast<Eigen::Index>(aa_dg_.size());
      Eigen::MatrixXd dg(dim, mem), df(dim, mem);
      for (Eigen::Index j = 0; j < mem; ++j) {
        dg.col(j) = aa_dg_[j];
        df.col(j) = aa_df_[j];
      }
      Eigen::MatrixXd gram = dg.transpose() * dg;
      gram.diagonal().array() += 1e-10 * (1.0 + gram.diagonal().maxCoeff());
      const Eigen::VectorXd gamma = gram.ldlt().solve(dg.transpose() * g);
      if (gamma.allFinite()) next = f - df * gamma;
    }
    k = 0;
    for (std::size_t p = 0; p < n; ++p) {
      for (int h = 0; h < kHours; ++h, k += 2) {
        z_hat_[p][h] = next[k];
        u_hat_[p][h] = next[k + 1];
      }
    }
    return;
  }
  z_hat_ = state_.z;
  u_hat_ = state_.u;
}


namespace {

class ParticipantAgent {
 public:
  ParticipantAgent(const ParticipantModel& p, Bytes key) : model_(&p), solver_(p), key_(std::move(key)) {}

  SignalEnvelope respond(const SignalEnvelope& signal, const AgentHooks& hooks, double rho) {
    PricePayload pp = signal.prices();
    if (hooks.on_prices) hooks.on_prices(*model_, signal.round, pp);
    if (signal.round == 0) {
      schedule_ = solver_.solve(pp.dlmp, Profile{}, Profile{}, 0.0);
    } else {
      schedule_ = solver_.solve(pp.dlmp, pp.consensus, pp.dual, rho);
    }
    SignalEnvelope env;
    env.kind = SignalKind::Signal1b;
    env.sender = model_->id;
    env.receiver = kOperatorId;
    env.round = signal.round;
    OfferPayload offer{model_->id, model_->bus, schedule_.net_kw};
    if (hooks.on_offer) hooks.on_offer(*model_, signal.round, pp.final_round, offer);
    env.payload = std::move(offer);
    return tag_integrity(std::move(env), key_);
  }

  const Schedule& schedule() const { return schedule_; }

 private:
  const ParticipantModel* model_;
  LocalSolver solver_;
  Bytes key_;
  Schedule schedule_;
};

}  // namespace

ClearingResult admm_clear(const FeederModel& feeder, const std::vector<ParticipantModel>& pop,
                          const Profile& wholesale, const AdmmConfig& cfg, MessageBus& bus, const AgentHooks& hooks,
                          const AdmmWarmStart* warm) {
  cfg.validate();
  std::set<ParticipantId> ids;
  std::vector<std::pair<ParticipantId, BusId>> roster;
  for (const auto& p : pop) {
    feeder.bus_index(p.bus);
    if (!ids.insert(p.id).second) throw Error(ErrorKind::InvalidArgument, "duplicate participant id " + p.id);
    roster.emplace_back(p.id, p.bus);
  }

  std::vector<ParticipantAgent> agents;
  agents.reserve(pop.size());
  for (const auto& p : pop) agents.emplace_back(p, bus.keys().key_for(p.id));
  MarketOperator lmo(feeder, roster, wholesale, cfg, bus.keys());

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < pop.size(); ++i) index[pop[i].id] = i;
  std::vector<std::optional<SignalEnvelope>> inbox(pop.size());

  auto exchange = [&](bool final_round) {
    for (auto& env : lmo.broadcast(final_round)) bus.submit(std::move(env));
    for (auto& env : bus.deliver()) {
      auto it = index.find(env.receiver);
      if (env.kind == SignalKind::Signal3 && it != index.end()) inbox[it->second] = std::move(env);
    }
    for (std::size_t i = 0; i < pop.size(); ++i) {
      if (!inbox[i]) throw Error(ErrorKind::BusFailure, "participant " + pop[i].id + " never received prices");
    }
    std::vector<SignalEnvelope> offers(pop.size());
    parallel_for(pop.size(), [&](std::size_t i) { offers[i] = agents[i].respond(*inbox[i], hooks, cfg.rho); });
    for (auto& env : offers) bus.submit(std::move(env));
    lmo.receive(bus.deliver(), final_round);
  };

  if (warm) {
    lmo.resume(*warm);
  } else {
    exchange(false);
  }
  for (int k = 0; k < cfg.max_iters && !lmo.converged(); ++k) exchange(false);
  const bool converged = lmo.converged();
  exchange(true);

  ClearingResult r;
  r.converged = converged;
  for (const auto& a : agents) r.schedules.push_back(a.schedule());
  r.reported_kw = lmo.reported();
  r.dlmp = lmo.dlmp();
  r.admm = lmo.state();
  detail::finish_result(feeder, pop, wholesale, r);
  return r;
}

}  // namespace lemsim
