#pragma once

#include <vector>

#include "lemsim/market.hpp"

namespace lemsim::detail {

/// Fills the physical side of a result (nodal demand, flows, costs,
/// provenance) from the participant schedules already stored in it.
void finish_result(const FeederModel& feeder, const std::vector<ParticipantModel>& pop, const Profile& wholesale,
                   ClearingResult& result);

}  // namespace lemsim::detail
