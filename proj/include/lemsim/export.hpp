#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lemsim/analysis.hpp"
#include "lemsim/market.hpp"

namespace lemsim {

/// Shortest decimal text that reads back to the same double; -0 prints as 0.
std::string format_number(double value);

/// dlmp.csv, schedules.csv, residuals.csv and summary.json.
void write_clearing(const std::filesystem::path& dir, const ClearingResult& result);

/// impact.json, impact_dlmp.csv and impact_shift.csv.
void write_impact(const std::filesystem::path& dir, const ImpactReport& report, const ClearingResult& baseline,
                  const ClearingResult& attacked);

/// sensitivity.csv: rank, bus, score.
void write_sensitivity(const std::filesystem::path& dir, const std::vector<SensitivityEntry>& ranking);

}  // namespace lemsim
