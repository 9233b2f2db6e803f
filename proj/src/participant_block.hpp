#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "lemsim/participant.hpp"
#include "qp_builder.hpp"

namespace lemsim::detail {

struct StorageBlock {
  std::array<int, kHours> charge;     // -1 when the device is unavailable
  std::array<int, kHours> discharge;
  std::array<int, kHours> soc;
};

struct Term {
  int var;
  double coef;
};

/// Variable/row indices of one participant inside a larger QP. The block owns
/// device constraints only. Net demand is the affine expression
/// base + sum(terms); with_net adds an explicit net variable tied to it by an
/// equality row, for callers that put curvature on net itself.
struct ParticipantBlock {
  Profile base{};                              // fixed - pv
  std::array<std::vector<Term>, kHours> terms;
  std::array<int, kHours> net{};               // -1 without an explicit net variable
  std::array<int, kHours> net_row{};
  std::array<int, kHours> flex{};              // -1 outside the flexible window
  std::vector<StorageBlock> evs;
  std::vector<StorageBlock> batteries;
};

ParticipantBlock append_participant(QpBuilder& qp, const ParticipantModel& p, bool with_net);

Schedule extract_schedule(const ParticipantModel& p, const ParticipantBlock& block, const Eigen::VectorXd& x);

}  // namespace lemsim::detail
