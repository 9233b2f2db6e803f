#include "network_model.hpp"

namespace lemsim::detail {

NetInjection reactive_injection(const FeederModel& feeder) {
  NetInjection inj = NetInjection::zeros(feeder);
  for (std::size_t b = 0; b < feeder.bus_count(); ++b) inj.q_kvar[b] = feeder.buses[b].nominal_kvar;
  return inj;
}

NetworkSensitivity network_sensitivity(const FeederModel& feeder, const NetInjection& reactive) {
  const int nb = static_cast<int>(feeder.bus_count());
  const int nl = static_cast<int>(feeder.line_count());
  NetworkSensitivity s;
  s.subtree = Eigen::MatrixXd::Zero(nl, nb);
  for (int b = 0; b < nb; ++b) {
    for (int k = b; feeder.parent_line[k] >= 0; k = feeder.parent_bus[k]) s.subtree(feeder.parent_line[k], b) = 1.0;
  }
  s.resistance = Eigen::MatrixXd::Zero(nb, nb);
  for (int b = 0; b < nb; ++b) {
    for (int k = b; feeder.parent_line[k] >= 0; k = feeder.parent_bus[k]) {
      const int l = feeder.parent_line[k];
      s.resistance.row(b) += feeder.lines[l].r * s.subtree.row(l);
    }
  }
  const FlowState q_only = lindistflow(feeder, reactive);
  s.q_drop.assign(nb, Profile{});
  for (int b = 0; b < nb; ++b) {
    for (int h = 0; h < kHours; ++h) s.q_drop[b][h] = 1.0 - q_only.v_sq[b][h];
  }
  return s;
}

}  // namespace lemsim::detail
