#include "lemsim/scenario_config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace lemsim {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorKind::Config, msg); }

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!ok.count(item.key())) fail("unknown field " + where + "." + item.key());
  }
}

double number(const json& obj, const char* key, const std::string& where, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) fail(where + "." + key + " must be a number");
  return v.get<double>();
}

long long integer(const json& obj, const char* key, const std::string& where, long long fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) fail(where + "." + key + " must be an integer");
  return v.get<long long>();
}

bool boolean(const json& obj, const char* key, const std::string& where, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_boolean()) fail(where + "." + key + " must be true or false");
  return v.get<bool>();
}

std::vector<int> int_list(const json& obj, const char* key, const std::string& where) {
  std::vector<int> out;
  if (!obj.contains(key)) return out;
  const auto& v = obj.at(key);
  if (!v.is_array()) fail(where + "." + key + " must be an array of integers");
  for (const auto& e : v) {
    if (!e.is_number_integer()) fail(where + "." + key + " must be an array of integers");
    out.push_back(e.get<int>());
  }
  return out;
}

PopulationSpec parse_population(const json& j, std::uint64_t& seed) {
  const std::string w = "population";
  only_keys(j, w, {"seed", "evs", "pvs", "batteries", "flex_share", "discomfort_coeff", "wear_coeff",
                   "max_devices_per_bus"});
  PopulationSpec p;
  const long long s = integer(j, "seed", w, 0);
  if (s < 0) fail("population.seed must be non-negative");
  seed = static_cast<std::uint64_t>(s);
  p.evs = static_cast<int>(integer(j, "evs", w, p.evs));
  p.pvs = static_cast<int>(integer(j, "pvs", w, p.pvs));
  p.batteries = static_cast<int>(integer(j, "batteries", w, p.batteries));
  p.flex_share = number(j, "flex_share", w, p.flex_share);
  p.discomfort_coeff = number(j, "discomfort_coeff", w, p.discomfort_coeff);
  p.wear_coeff = number(j, "wear_coeff", w, p.wear_coeff);
  p.max_devices_per_bus = static_cast<int>(integer(j, "max_devices_per_bus", w, p.max_devices_per_bus));
  return p;
}

AdmmConfig parse_admm(const json& j) {
  const std::string w = "admm";
  only_keys(j, w, {"rho", "max_iters", "eps_primal", "eps_dual", "acceleration", "anderson_memory"});
  AdmmConfig c;
  c.rho = number(j, "rho", w, c.rho);
  c.max_iters = static_cast<int>(integer(j, "max_iters", w, c.max_iters));
  c.eps_primal = number(j, "eps_primal", w, c.eps_primal);
  c.eps_dual = number(j, "eps_dual", w, c.eps_dual);
  c.anderson_memory = static_cast<int>(integer(j, "anderson_memory", w, c.anderson_memory));
  if (j.contains("acceleration")) {
    const auto& v = j.at("acceleration");
    const std::string a = v.is_string() ? v.get<std::string>() : "";
    if (a == "none") {
      c.acceleration = AdmmConfig::Acceleration::None;
    } else if (a == "nesterov") {
      c.acceleration = AdmmConfig::Acceleration::Nesterov;
    } else if (a == "anderson") {
      c.acceleration = AdmmConfig::Acceleration::Anderson;
    } else {
      fail("admm.acceleration must be one of none, nesterov, anderson");
    }
  }
  try {
    c.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
  return c;
}

void parse_attack(const json& j, ScenarioConfig& cfg) {
  const std::string w = "attack";
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) fail("attack.kind must be insider or external");
  const std::string kind = j.at("kind").get<std::string>();
  AttackScenario s;
  s.seed = cfg.seed;
  if (kind == "insider") {
    only_keys(j, w, {"kind", "participants", "buses", "hours", "alpha", "every_iteration"});
    s.kind = AttackKind::InsiderDemandInflation;
    if (j.contains("participants")) {
      const auto& v = j.at("participants");
      if (!v.is_array()) fail("attack.participants must be an array of ids");
      for (const auto& e : v) {
        if (!e.is_string()) fail("attack.participants must be an array of ids");
        s.participants.push_back(e.get<std::string>());
      }
    }
    cfg.attack_buses = int_list(j, "buses", w);
    if (s.participants.empty() == cfg.attack_buses.empty()) {
      fail("attack needs exactly one of participants or buses");
    }
    s.hours = int_list(j, "hours", w);
    s.alpha = number(j, "alpha", w, s.alpha);
  } else if (kind == "external") {
    only_keys(j, w, {"kind", "buses", "rule", "every_iteration"});
    s.kind = AttackKind::ExternalDlmpTamper;
    s.buses = int_list(j, "buses", w);
    if (!j.contains("rule")) fail("attack.rule is required for an external attack");
    const auto& r = j.at("rule");
    only_keys(r, "attack.rule", {"valley_hours", "valley_factor", "peak_factor"});
    s.rule.valley_hours = int_list(r, "valley_hours", "attack.rule");
    s.rule.valley_factor = number(r, "valley_factor", "attack.rule", 1.0);
    s.rule.peak_factor = number(r, "peak_factor", "attack.rule", 1.0);
  } else {
    fail("attack.kind must be insider or external");
  }
  s.tamper_every_iteration = boolean(j, "every_iteration", w, true);
  AttackScenario shape = s;
  if (shape.participants.empty() && !cfg.attack_buses.empty()) shape.participants.assign(cfg.attack_buses.size(), "");
  try {
    shape.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
  cfg.attack = s;
}

SensitivityProbe parse_sensitivity(const json& j) {
  const std::string w = "sensitivity";
  only_keys(j, w, {"alpha", "hours", "buses", "warm_start"});
  SensitivityProbe p;
  p.alpha = number(j, "alpha", w, p.alpha);
  if (j.contains("hours")) p.hours = int_list(j, "hours", w);
  p.buses = int_list(j, "buses", w);
  p.warm_start = boolean(j, "warm_start", w, p.warm_start);
  if (!(p.alpha >= 1.0 && p.alpha <= kMaxInflation)) fail("sensitivity.alpha must lie in [1, 3]");
  if (p.hours.empty()) fail("sensitivity.hours must not be empty");
  for (int h : p.hours) {
    if (h < 0 || h >= kHours) fail("sensitivity.hours out of range");
  }
  return p;
}

}  // namespace

ScenarioConfig parse_scenario_config(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("scenario is not valid JSON: ") + e.what());
  }
  only_keys(j, "scenario", {"name", "feeder", "population", "wholesale", "wholesale_prices", "admm", "integrity",
                            "attack", "sensitivity", "output"});
  ScenarioConfig cfg;
  if (j.contains("name")) {
    if (!j.at("name").is_string()) fail("name must be a string");
    cfg.name = j.at("name").get<std::string>();
  }
  if (!j.contains("feeder") || !j.at("feeder").is_string()) fail("feeder must name a feeder file");
  cfg.feeder_path = base_dir / j.at("feeder").get<std::string>();
  if (!std::filesystem::is_regular_file(cfg.feeder_path)) {
    fail("feeder file not found: " + cfg.feeder_path.lexically_normal().string());
  }

  cfg.population = parse_population(j.contains("population") ? j.at("population") : json::object(), cfg.seed);

  const bool shape = j.contains("wholesale");
  const bool values = j.contains("wholesale_prices");
  if (shape == values) fail("give exactly one of wholesale (shape name) or wholesale_prices (24 values)");
  if (shape) {
    const auto& v = j.at("wholesale");
    if (!v.is_string() || v.get<std::string>() != "default") fail("unknown wholesale shape; the bundled shape is \"default\"");
    cfg.wholesale = default_wholesale();
    cfg.wholesale_source = "default";
  } else {
    const auto& v = j.at("wholesale_prices");
    if (!v.is_array() || v.size() != static_cast<std::size_t>(kHours)) fail("wholesale_prices must hold 24 numbers");
    for (int h = 0; h < kHours; ++h) {
      if (!v[h].is_number()) fail("wholesale_prices must hold 24 numbers");
      cfg.wholesale[h] = v[h].get<double>();
      if (!std::isfinite(cfg.wholesale[h])) fail("wholesale_prices must be finite");
    }
    cfg.wholesale_source = "explicit";
  }

  if (j.contains("admm")) cfg.admm = parse_admm(j.at("admm"));
  if (j.contains("integrity")) {
    only_keys(j.at("integrity"), "integrity", {"enforce"});
    cfg.enforce_integrity = boolean(j.at("integrity"), "enforce", "integrity", false);
  }
  if (j.contains("attack")) parse_attack(j.at("attack"), cfg);
  if (j.contains("sensitivity")) cfg.sensitivity = parse_sensitivity(j.at("sensitivity"));
  if (j.contains("output")) {
    if (!j.at("output").is_string()) fail("output must be a directory path");
    cfg.output_dir = base_dir / j.at("output").get<std::string>();
  } else {
    cfg.output_dir = std::filesystem::path("out") / (cfg.name.empty() ? "run" : cfg.name);
  }
  return cfg;
}

ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open scenario file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_config(ss.str(), path.parent_path());
}

std::vector<ParticipantModel> ScenarioConfig::build_population(const FeederModel& feeder) const {
  return generate_population(feeder, population, seed);
}

AttackScenario ScenarioConfig::resolved_attack(const std::vector<ParticipantModel>& pop) const {
  if (!attack) throw Error(ErrorKind::Config, "scenario has no attack block");
  AttackScenario s = *attack;
  s.seed = seed;
  if (!attack_buses.empty()) {
    s.participants = participants_at(pop, attack_buses);
    if (s.participants.size() != attack_buses.size()) {
      throw Error(ErrorKind::Config, "attack.buses must each host exactly one participant");
    }
  }
  return s;
}

RunOptions ScenarioConfig::run_options() const {
  RunOptions o;
  o.enforce_integrity = enforce_integrity;
  o.key_seed = seed;
  return o;
}

}  // namespace lemsim
