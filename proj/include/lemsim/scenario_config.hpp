#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "lemsim/analysis.hpp"
#include "lemsim/attack.hpp"
#include "lemsim/market.hpp"

namespace lemsim {

struct ScenarioConfig {
  std::string name;
  std::filesystem::path feeder_path;  // resolved against the config file's directory
  PopulationSpec population;
  std::uint64_t seed = 0;
  Profile wholesale{};
  std::string wholesale_source;  // shape name, or "explicit"
  AdmmConfig admm;
  bool enforce_integrity = false;
  std::optional<AttackScenario> attack;
  std::vector<BusId> attack_buses;  // insider targets given by bus, resolved after population generation
  SensitivityProbe sensitivity;
  std::filesystem::path output_dir;

  /// Generates the population and fills insider targets given by bus.
  std::vector<ParticipantModel> build_population(const FeederModel& feeder) const;
  AttackScenario resolved_attack(const std::vector<ParticipantModel>& pop) const;
  RunOptions run_options() const;
};

/// Parses and validates a scenario file. Every problem is reported as a
/// Config error naming the offending field or path.
ScenarioConfig load_scenario_config(const std::filesystem::path& path);
ScenarioConfig parse_scenario_config(const std::string& text, const std::filesystem::path& base_dir);

}  // namespace lemsim
