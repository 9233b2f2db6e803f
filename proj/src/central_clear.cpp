#include <cmath>

#include "clearing_detail.hpp"
#include "lemsim/qp.hpp"
#include "network_model.hpp"
#include "participant_block.hpp"

namespace lemsim {

ClearingResult central_clear(const FeederModel& feeder, const std::vector<ParticipantModel>& pop,
                             const Profile& wholesale) {
  for (const auto& p : pop) {
    feeder.bus_index(p.bus);
    check_device_feasibility(p);
  }
  const int nb = static_cast<int>(feeder.bus_count());
  const int nl = static_cast<int>(feeder.line_count());
  const int root = feeder.root_index();
  const double base = feeder.kw_base();
  const double s = detail::kVoltageScale;
  const FlowState reactive = lindistflow(feeder, detail::reactive_injection(feeder));

  // Root import is eliminated: it equals the flow out of the root plus any
  // demand sitting at the root, so its price is the wholesale price.
  detail::QpBuilder qp;
  std::vector<detail::ParticipantBlock> blocks;
  for (const auto& p : pop) blocks.push_back(detail::append_participant(qp, p, false));

  std::vector<std::vector<int>> balance(kHours, std::vector<int>(nb, -1));
  for (int h = 0; h < kHours; ++h) {
    std::vector<int> flow(nl), drop(nb, -1);
    for (int l = 0; l < nl; ++l) {
      const double cap = feeder.lines[l].capacity_kw;
      const bool from_root = feeder.parent_bus[feeder.bus_index(feeder.lines[l].to_bus)] == root;
      flow[l] = qp.add_var(0.0, from_root ? wholesale[h] : 0.0, -cap, cap);
    }
    for (int b = 0; b < nb; ++b) {
      if (b != root) drop[b] = qp.add_var(0.0, 0.0, s * (1.0 - feeder.vmax_pu), s * (1.0 - feeder.vmin_pu));
    }
    for (int b = 0; b < nb; ++b) {
      if (b == root) continue;
      const int row = qp.add_row(0.0);
      balance[h][b] = row;
      qp.coef(row, flow[feeder.parent_line[b]], 1.0);
      for (int l : feeder.child_lines[b]) qp.coef(row, flow[l], -1.0);
    }
    for (int b = 0; b < nb; ++b) {
      if (b == root) continue;
      const int l = feeder.parent_line[b];
      const auto& line = feeder.lines[l];
      const int row = qp.add_row(2.0 * s * line.x * reactive.q_flow[l][h] / base);
      qp.coef(row, drop[b], 1.0);
      if (feeder.parent_bus[b] != root) qp.coef(row, drop[feeder.parent_bus[b]], -1.0);
      qp.coef(row, flow[l], -2.0 * s * line.r / base);
    }
  }
  for (std::size_t p = 0; p < pop.size(); ++p) {
    const int b = feeder.bus_index(pop[p].bus);
    for (int h = 0; h < kHours; ++h) {
      const auto& blk = blocks[p];
      if (b == root) {
        for (const auto& t : blk.terms[h]) qp.set_linear(t.var, qp.linear(t.var) + wholesale[h] * t.coef);
        continue;
      }
      const int row = balance[h][b];
      qp.set_rhs(row, qp.rhs(row) + blk.base[h]);
      for (const auto& t : blk.terms[h]) qp.coef(row, t.var, -t.coef);
    }
  }

  const auto problem = qp.build();
  qp::IpmOptions opt;
  opt.max_iterations = 150;
  const auto res = qp::solve_box_qp(problem, opt);
  if (!res.converged) {
    if (!std::isfinite(res.primal_residual) || res.primal_residual > 1e-6 * (1.0 + problem.eq_rhs.lpNorm<Eigen::Infinity>())) {
      throw Error(ErrorKind::Infeasible, "central clearing: network and device limits cannot be met together");
    }
    throw Error(ErrorKind::NoConvergence, "central clearing stalled (gap " + std::to_string(res.gap) + ")");
  }

  ClearingResult r;
  r.converged = true;
  for (std::size_t p = 0; p < pop.size(); ++p) {
    r.schedules.push_back(detail::extract_schedule(pop[p], blocks[p], res.x));
    r.reported_kw.push_back(r.schedules.back().net_kw);
  }
  r.dlmp.wholesale = wholesale;
  for (const auto& bus : feeder.buses) r.dlmp.bus_ids.push_back(bus.id);
  r.dlmp.price.assign(nb, Profile{});
  for (int h = 0; h < kHours; ++h) {
    for (int b = 0; b < nb; ++b) r.dlmp.price[b][h] = b == root ? wholesale[h] : res.eq_dual[balance[h][b]];
  }
  detail::finish_result(feeder, pop, wholesale, r);
  return r;
}

}  // namespace lemsim
