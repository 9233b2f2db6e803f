#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "lemsim/participant.hpp"
#include "participant_block.hpp"

namespace lemsim {

namespace detail {

namespace {

StorageBlock append_storage(QpBuilder& qp, ParticipantBlock& block, const std::vector<int>& hours,
                            double capacity, double max_ch, double max_dis, double efficiency, double soc0,
                            double final_min, double hess) {
  StorageBlock s;
  s.charge.fill(-1);
  s.discharge.fill(-1);
  s.soc.fill(-1);
  const double leg = std::sqrt(efficiency);
  int prev = -1;
  for (std::size_t k = 0; k < hours.size(); ++k) {
    const int h = hours[k];
    const int ch = qp.add_var(hess, 0.0, 0.0, max_ch);
    block.terms[h].push_back({ch, 1.0});
    s.charge[h] = ch;
    int dis = -1;
    if (max_dis > 0.0) {
      dis = qp.add_var(hess, 0.0, 0.0, max_dis);
      block.terms[h].push_back({dis, -1.0});
      s.discharge[h] = dis;
    }
    const double lo = (k + 1 == hours.size()) ? std::max(0.0, final_min) : 0.0;
    const int soc = qp.add_var(0.0, 0.0, lo, capacity);
    s.soc[h] = soc;
    const int row = qp.add_row(k == 0 ? soc0 : 0.0);
    qp.coef(row, soc, 1.0);
    if (prev >= 0) qp.coef(row, prev, -1.0);
    qp.coef(row, ch, -leg);
    if (dis >= 0) qp.coef(row, dis, 1.0 / leg);
    prev = soc;
  }
  return s;
}

}  // namespace

ParticipantBlock append_participant(QpBuilder& qp, const ParticipantModel& p, bool with_net) {
  ParticipantBlock block;
  block.flex.fill(-1);
  block.net.fill(-1);
  block.net_row.fill(-1);
  const double hess = 2.0 * p.discomfort_coeff;
  const double wear = 2.0 * p.wear_coeff;
  for (int h = 0; h < kHours; ++h) {
    double pv = 0.0;
    for (const auto& unit : p.pvs) pv += unit.profile_kw[h];
    block.base[h] = p.fixed.profile_kw[h] - pv;
  }
  if (p.flex && !p.flex->window.empty()) {
    const auto uniform = p.flex->uniform_allocation();
    const int energy_row = qp.add_row(p.flex->energy_kwh);
    for (int h : p.flex->window) {
      const int v = qp.add_var(hess, -hess * uniform[h], 0.0, p.flex->max_kw);
      block.flex[h] = v;
      block.terms[h].push_back({v, 1.0});
      qp.coef(energy_row, v, 1.0);
    }
  }
  for (const auto& ev : p.evs) {
    block.evs.push_back(append_storage(qp, block, ev.plugged_hours(), ev.capacity_kwh, ev.max_charge_kw,
                                       ev.max_discharge_kw, ev.efficiency, ev.soc0_kwh, ev.required_kwh, wear));
  }
  std::vector<int> all_hours(kHours);
  for (int h = 0; h < kHours; ++h) all_hours[h] = h;
  for (const auto& b : p.batteries) {
    block.batteries.push_back(append_storage(qp, block, all_hours, b.capacity_kwh, b.max_charge_kw,
                                             b.max_discharge_kw, b.efficiency, b.soc0_kwh, b.soc_final_min_kwh, wear));
  }
  if (with_net) {
    for (int h = 0; h < kHours; ++h) {
      block.net[h] = qp.add_var(0.0, 0.0, -kInf, kInf);
      block.net_row[h] = qp.add_row(block.base[h]);
      qp.coef(block.net_row[h], block.net[h], 1.0);
      for (const auto& t : block.terms[h]) qp.coef(block.net_row[h], t.var, -t.coef);
    }
  }
  return block;
}

namespace {

DeviceTrace read_storage(const StorageBlock& s, const Eigen::VectorXd& x, double& sum_sq) {
  DeviceTrace t;
  for (int h = 0; h < kHours; ++h) {
    if (s.charge[h] >= 0) t.charge_kw[h] = x[s.charge[h]];
    if (s.discharge[h] >= 0) t.discharge_kw[h] = x[s.discharge[h]];
    if (s.soc[h] >= 0) t.soc_kwh[h] = x[s.soc[h]];
    sum_sq += t.charge_kw[h] * t.charge_kw[h] + t.discharge_kw[h] * t.discharge_kw[h];
  }
  return t;
}

}  // namespace

Schedule extract_schedule(const ParticipantModel& p, const ParticipantBlock& block, const Eigen::VectorXd& x) {
  Schedule s;
  double sum_sq = 0.0, wear_sq = 0.0;
  s.fixed_kw = p.fixed.profile_kw;
  for (const auto& unit : p.pvs) {
    for (int h = 0; h < kHours; ++h) s.pv_kw[h] += unit.profile_kw[h];
  }
  if (p.flex) {
    const auto uniform = p.flex->uniform_allocation();
    for (int h = 0; h < kHours; ++h) {
      if (block.flex[h] < 0) continue;
      s.flex_kw[h] = x[block.flex[h]];
      const double dev = s.flex_kw[h] - uniform[h];
      sum_sq += dev * dev;
    }
  }
  for (const auto& ev : block.evs) s.evs.push_back(read_storage(ev, x, wear_sq));
  for (const auto& b : block.batteries) s.batteries.push_back(read_storage(b, x, wear_sq));
  for (int h = 0; h < kHours; ++h) {
    double net = s.fixed_kw[h] - s.pv_kw[h] + s.flex_kw[h];
    for (const auto& t : s.evs) net += t.charge_kw[h] - t.discharge_kw[h];
    for (const auto& t : s.batteries) net += t.charge_kw[h] - t.discharge_kw[h];
    s.net_kw[h] = net;
  }
  s.discomfort = p.discomfort_coeff * sum_sq + p.wear_coeff * wear_sq;
  return s;
}

}  // namespace detail

struct LocalSolver::Impl {
  // Two layouts: with rho > 0 the proximal term sits on explicit net
  // variables; the plain price response prices the device terms directly.
  struct Layout {
    detail::ParticipantBlock block;
    qp::BoxQp problem;
    Eigen::VectorXd base_linear;
    std::unique_ptr<qp::InteriorPointSolver> solver;
  };

  ParticipantModel participant;
  std::optional<Layout> proximal;
  std::optional<Layout> price_only;

  explicit Impl(ParticipantModel p) : participant(std::move(p)) { check_device_feasibility(participant); }

  Layout& layout(bool with_net) {
    auto& slot = with_net ? proximal : price_only;
    if (!slot) {
      detail::QpBuilder builder;
      Layout l;
      l.block = detail::append_participant(builder, participant, with_net);
      l.problem = builder.build();
      l.base_linear = l.problem.linear;
      l.solver = std::make_unique<qp::InteriorPointSolver>(l.problem);
      slot = std::move(l);
    }
    return *slot;
  }
};

LocalSolver::LocalSolver(ParticipantModel participant) : impl_(std::make_unique<Impl>(std::move(participant))) {}
LocalSolver::~LocalSolver() = default;
LocalSolver::LocalSolver(LocalSolver&&) noexcept = default;
LocalSolver& LocalSolver::operator=(LocalSolver&&) noexcept = default;

const ParticipantModel& LocalSolver::participant() const { return impl_->participant; }

Schedule LocalSolver::solve(const Profile& price, const Profile& target, const Profile& dual, double rho) {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw Error(ErrorKind::InvalidArgument, "rho must be finite and >= 0");
  for (int h = 0; h < kHours; ++h) {
    if (!std::isfinite(price[h]) || !std::isfinite(target[h]) || !std::isfinite(dual[h])) {
      throw Error(ErrorKind::InvalidArgument, "non-finite price or coordination signal");
    }
  }
  auto& l = impl_->layout(rho > 0.0);
  auto& prob = l.problem;
  if (rho > 0.0) {
    for (int h = 0; h < kHours; ++h) {
      const int v = l.block.net[h];
      prob.hessian_diag[v] = rho;
      prob.linear[v] = price[h] - rho * (target[h] - dual[h]);
    }
  } else {
    prob.linear = l.base_linear;
    for (int h = 0; h < kHours; ++h) {
      for (const auto& t : l.block.terms[h]) prob.linear[t.var] += price[h] * t.coef;
    }
  }
  const auto res = l.solver->solve(prob);
  if (!res.converged) {
    throw Error(ErrorKind::NoConvergence, "local solve for participant " + impl_->participant.id + " stalled (residual " +
                                              std::to_string(std::max(res.primal_residual, res.dual_residual)) + ")");
  }
  return detail::extract_schedule(impl_->participant, l.block, res.x);
}

Schedule local_optimize(const ParticipantModel& p, const Profile& price, const Profile& consensus_target,
                        const Profile& dual, double rho) {
  if (!(rho > 0.0)) throw Error(ErrorKind::InvalidArgument, "local_optimize requires rho > 0");
  LocalSolver solver(p);
  return solver.solve(price, consensus_target, dual, rho);
}

Schedule price_response(const ParticipantModel& p, const Profile& price) {
  LocalSolver solver(p);
  return solver.solve(price, Profile{}, Profile{}, 0.0);
}

}  // namespace lemsim
