#include "lemsim/distflow.hpp"

#include <algorithm>
#include <cmath>

namespace lemsim {

NetInjection NetInjection::zeros(const FeederModel& feeder) {
  NetInjection inj;
  inj.p_kw.assign(feeder.bus_count(), Profile{});
  inj.q_kvar.assign(feeder.bus_count(), Profile{});
  return inj;
}

NetInjection NetInjection::nominal(const FeederModel& feeder, double scale) {
  NetInjection inj = zeros(feeder);
  for (std::size_t b = 0; b < feeder.bus_count(); ++b) {
    for (int h = 0; h < kHours; ++h) {
      inj.p_kw[b][h] = scale * feeder.buses[b].nominal_kw[h];
      inj.q_kvar[b][h] = scale * feeder.buses[b].nominal_kvar[h];
    }
  }
  return inj;
}

namespace {

void check_shape(const FeederModel& feeder, const NetInjection& inj) {
  if (inj.p_kw.size() != feeder.bus_count() || inj.q_kvar.size() != feeder.bus_count()) {
    throw Error(ErrorKind::InvalidArgument, "injection must cover every bus of the feeder");
  }
}

FlowState empty_state(const FeederModel& feeder) {
  FlowState s;
  s.v_sq.assign(feeder.bus_count(), constant_profile(1.0));
  s.p_flow.assign(feeder.line_count(), Profile{});
  s.q_flow.assign(feeder.line_count(), Profile{});
  return s;
}

}  // namespace

FlowState lindistflow(const FeederModel& feeder, const NetInjection& inj) {
  check_shape(feeder, inj);
  FlowState s = empty_state(feeder);
  const double base = feeder.kw_base();
  const int root = feeder.root_index();

  for (int h = 0; h < kHours; ++h) {
    for (auto it = feeder.bfs_order.rbegin(); it != feeder.bfs_order.rend(); ++it) {
      const int b = *it;
      double p = inj.p_kw[b][h];
      double q = inj.q_kvar[b][h];
      for (int l : feeder.child_lines[b]) {
        p += s.p_flow[l][h];
        q += s.q_flow[l][h];
      }
      if (b == root) {
        s.p_root[h] = p;
      } else {
        s.p_flow[feeder.parent_line[b]][h] = p;
        s.q_flow[feeder.parent_line[b]][h] = q;
      }
    }
    for (int b : feeder.bfs_order) {
      if (b == root) continue;
      const int l = feeder.parent_line[b];
      const auto& line = feeder.lines[l];
      s.v_sq[b][h] = s.v_sq[feeder.parent_bus[b]][h] - 2.0 * (line.r * s.p_flow[l][h] + line.x * s.q_flow[l][h]) / base;
    }
  }
  return s;
}

FlowState nonlinear_distflow_oracle(const FeederModel& feeder, const NetInjection& inj, double tolerance,
                                    int max_iterations) {
  check_shape(feeder, inj);
  FlowState s = empty_state(feeder);
  const double base = feeder.kw_base();
  const int root = feeder.root_index();
  const auto nb = feeder.bus_count();
  const auto nl = feeder.line_count();

  // Work in per-unit internally.
  std::vector<double> P(nl), Q(nl), loss(nl), v(nb);
  for (int h = 0; h < kHours; ++h) {
    std::fill(loss.begin(), loss.end(), 0.0);
    std::fill(v.begin(), v.end(), 1.0);
    double p_root = 0.0;
    double residual = 0.0;
    int it = 0;
    bool converged = false;
    for (; it < max_iterations; ++it) {
      for (auto bi = feeder.bfs_order.rbegin(); bi != feeder.bfs_order.rend(); ++bi) {
        const int b = *bi;
        double p = inj.p_kw[b][h] / base;
        double q = inj.q_kvar[b][h] / base;
        for (int l : feeder.child_lines[b]) {
          p += P[l];
          q += Q[l];
        }
        if (b == root) {
          p_root = p;
        } else {
          const int l = feeder.parent_line[b];
          P[l] = p + feeder.lines[l].r * loss[l];
          Q[l] = q + feeder.lines[l].x * loss[l];
        }
      }
      double change = 0.0;
      for (int b : feeder.bfs_order) {
        if (b == root) continue;
        const int l = feeder.parent_line[b];
        const auto& line = feeder.lines[l];
        const double vp = v[feeder.parent_bus[b]];
        loss[l] = (P[l] * P[l] + Q[l] * Q[l]) / vp;
        const double vb = vp - 2.0 * (line.r * P[l] + line.x * Q[l]) + (line.r * line.r + line.x * line.x) * loss[l];
        if (!std::isfinite(vb) || vb <= 0.0) {
          throw Error(ErrorKind::NoConvergence, "voltage collapse at bus " + std::to_string(feeder.buses[b].id) +
                                                    ", hour " + std::to_string(h));
        }
        change = std::max(change, std::abs(vb - v[b]));
        v[b] = vb;
      }

      // Residual of the DistFlow equations at the current iterate.
      residual = 0.0;
      for (int b : feeder.bfs_order) {
        if (b == root) continue;
        const int l = feeder.parent_line[b];
        const auto& line = feeder.lines[l];
        const double vp = v[feeder.parent_bus[b]];
        const double ell = (P[l] * P[l] + Q[l] * Q[l]) / vp;
        double p = inj.p_kw[b][h] / base + line.r * ell;
        double q = inj.q_kvar[b][h] / base + line.x * ell;
        for (int c : feeder.child_lines[b]) {
          p += P[c];
          q += Q[c];
        }
        const double vb = vp - 2.0 * (line.r * P[l] + line.x * Q[l]) + (line.r * line.r + line.x * line.x) * ell;
        residual = std::max({residual, std::abs(P[l] - p), std::abs(Q[l] - q), std::abs(v[b] - vb)});
      }
      if (residual < tolerance && change < tolerance) {
        converged = true;
        ++it;
        break;
      }
    }
    if (!converged) {
      throw Error(ErrorKind::NoConvergence, "backward-forward sweep did not converge at hour " + std::to_string(h) +
                                                " (residual " + std::to_string(residual) + ")");
    }
    s.p_root[h] = p_root * base;
    for (std::size_t l = 0; l < nl; ++l) {
      s.p_flow[l][h] = P[l] * base;
      s.q_flow[l][h] = Q[l] * base;
    }
    for (std::size_t b = 0; b < nb; ++b) s.v_sq[b][h] = v[b];
    s.residual = std::max(s.residual, residual);
    s.iterations = std::max(s.iterations, it);
  }
  return s;
}

std::string to_string(Violation::Quantity q) {
  switch (q) {
    case Violation::Quantity::VoltageLow: return "voltage_low";
    case Violation::Quantity::VoltageHigh: return "voltage_high";
    case Violation::Quantity::LineFlow: return "line_flow";
  }
  return "unknown";
}

std::vector<Violation> check_limits(const FeederModel& feeder, const FlowState& state, double tolerance) {
  std::vector<Violation> out;
  for (int h = 0; h < kHours; ++h) {
    for (std::size_t b = 0; b < feeder.bus_count(); ++b) {
      const double v = state.v_sq[b][h];
      if (v < feeder.vmin_pu - tolerance) {
        out.push_back({Violation::Quantity::VoltageLow, feeder.buses[b].id, h, v, feeder.vmin_pu});
      } else if (v > feeder.vmax_pu + tolerance) {
        out.push_back({Violation::Quantity::VoltageHigh, feeder.buses[b].id, h, v, feeder.vmax_pu});
      }
    }
    for (std::size_t l = 0; l < feeder.line_count(); ++l) {
      const double p = std::abs(state.p_flow[l][h]);
      if (p > feeder.lines[l].capacity_kw + tolerance) {
        out.push_back({Violation::Quantity::LineFlow, static_cast<int>(l), h, p, feeder.lines[l].capacity_kw});
      }
    }
  }
  return out;
}

}  // namespace lemsim
