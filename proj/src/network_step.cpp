#include <algorithm>
#include <cmath>

#include "lemsim/market.hpp"
#include "lemsim/parallel.hpp"
#include "lemsim/qp.hpp"
#include "network_model.hpp"

namespace lemsim {

NetworkStep::NetworkStep(const FeederModel& feeder, std::vector<BusId> participant_bus, const Profile& wholesale,
                         double rho)
    : feeder_(&feeder), wholesale_(wholesale), rho_(rho) {
  if (!(rho > 0.0)) throw Error(ErrorKind::InvalidArgument, "rho must be positive");
  const int nb = static_cast<int>(feeder.bus_count());
  bus_count_.assign(nb, 0.0);
  for (BusId b : participant_bus) {
    const int i = feeder.bus_index(b);
    part_bus_idx_.push_back(i);
    bus_count_[i] += 1.0;
  }

  const auto sens = detail::network_sensitivity(feeder, detail::reactive_injection(feeder));
  const double k = 2.0 * detail::kVoltageScale / feeder.kw_base();

  std::vector<Eigen::RowVectorXd> rows;
  std::vector<Profile> rhs;
  for (std::size_t l = 0; l < feeder.line_count(); ++l) {
    const double cap = feeder.lines[l].capacity_kw;
    rows.push_back(sens.subtree.row(l));
    rhs.push_back(constant_profile(cap));
    rows.push_back(-sens.subtree.row(l));
    rhs.push_back(constant_profile(cap));
  }
  for (int b = 0; b < nb; ++b) {
    if (b == feeder.root_index()) continue;
    Profile lo{}, hi{};
    for (int h = 0; h < kHours; ++h) {
      lo[h] = detail::kVoltageScale * (1.0 - feeder.vmin_pu - sens.q_drop[b][h]);
      hi[h] = detail::kVoltageScale * (feeder.vmax_pu - 1.0 + sens.q_drop[b][h]);
    }
    rows.push_back(k * sens.resistance.row(b));
    rhs.push_back(lo);
    rows.push_back(-k * sens.resistance.row(b));
    rhs.push_back(hi);
  }

  // Only columns carrying participants can move a constraint; rows that are
  // empty there never bind and rows that repeat another one (same pattern,
  // same limits) add nothing but a degenerate multiplier.
  std::vector<int> keep;
  std::vector<Eigen::RowVectorXd> seen;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Eigen::RowVectorXd active = rows[r];
    for (int b = 0; b < nb; ++b) {
      if (bus_count_[b] == 0.0) active[b] = 0.0;
    }
    if (active.isZero(0.0)) continue;
    bool duplicate = false;
    for (std::size_t s = 0; s < keep.size() && !duplicate; ++s) {
      duplicate = seen[s] == active && rhs[keep[s]] == rhs[r];
    }
    if (duplicate) continue;
    keep.push_back(static_cast<int>(r));
    seen.push_back(active);
  }
  g_.resize(static_cast<Eigen::Index>(keep.size()), nb);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    g_.row(static_cast<Eigen::Index>(i)) = rows[keep[i]];
    rhs_.push_back(rhs[keep[i]]);
  }
  const Eigen::VectorXd n = Eigen::Map<const Eigen::VectorXd>(bus_count_.data(), nb);
  q_ = g_ * n.asDiagonal() * g_.transpose() / rho_;
}

NetworkSolution NetworkStep::solve(const std::vector<Profile>& a) const {
  if (a.size() != part_bus_idx_.size()) throw Error(ErrorKind::InvalidArgument, "one proposal per participant");
  const int nb = static_cast<int>(feeder_->bus_count());
  const int m = rows();
  NetworkSolution out;
  out.wholesale = wholesale_;
  for (const auto& bus : feeder_->buses) out.bus_ids.push_back(bus.id);

  parallel_for(kHours, [&](std::size_t hh) {
    const int h = static_cast<int>(hh);
    const double w = wholesale_[h];
    Eigen::VectorXd d0 = Eigen::VectorXd::Zero(nb);
    for (std::size_t p = 0; p < a.size(); ++p) d0[part_bus_idx_[p]] += a[p][h] - w / rho_;
    Eigen::VectorXd c(m);
    for (int r = 0; r < m; ++r) c[r] = rhs_[r][h];
    c -= g_ * d0;
    const auto res = qp::solve_nonnegative_qp(q_, c);
    if (!res.converged) {
      throw Error(ErrorKind::NoConvergence, "network subproblem did not converge at hour " + std::to_string(h));
    }
    auto& sol = out.hours[h];
    sol.mu = res.solution;
    sol.active_rows = res.free_set;
    sol.degenerate = res.degenerate;
    const Eigen::VectorXd uplift = g_.transpose() * res.solution;
    sol.uplift.assign(uplift.data(), uplift.data() + nb);
    sol.z.resize(a.size());
    for (std::size_t p = 0; p < a.size(); ++p) sol.z[p] = a[p][h] - (w + uplift[part_bus_idx_[p]]) / rho_;
  });
  return out;
}

DlmpVector extract_dlmp(const NetworkSolution& solution) {
  DlmpVector d;
  d.bus_ids = solution.bus_ids;
  d.wholesale = solution.wholesale;
  d.price.assign(d.bus_ids.size(), Profile{});
  for (int h = 0; h < kHours; ++h) {
    const auto& hs = solution.hours[h];
    for (std::size_t b = 0; b < d.bus_ids.size(); ++b) {
      const double up = b < hs.uplift.size() ? hs.uplift[b] : 0.0;
      d.price[b][h] = solution.wholesale[h] + up;
    }
    if (hs.degenerate) d.degenerate_hours.push_back(h);
  }
  return d;
}

}  // namespace lemsim
