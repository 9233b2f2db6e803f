#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lemsim/analysis.hpp"
#include "lemsim/attack.hpp"
#include "lemsim/export.hpp"
#include "lemsim/market.hpp"
#include "lemsim/scenario_config.hpp"

using namespace lemsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNoConvergence = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool oracle = false;
  bool wire_dump = false;
};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NoConvergence:
    case ErrorKind::BusFailure:
      return kExitNoConvergence;
    case ErrorKind::Infeasible:
      return kExitInfeasible;
    default:
      return kExitConfig;
  }
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

ScenarioConfig load(const Options& o) {
  ScenarioConfig cfg = load_scenario_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.output_dir = o.out;
  return cfg;
}

int cmd_clear(const Options& o) {
  const ScenarioConfig cfg = load(o);
  if (cfg.attack) throw Error(ErrorKind::Config, "clear takes a scenario without an attack block");
  const FeederModel feeder = load_feeder(cfg.feeder_path.string());
  const auto pop = cfg.build_population(feeder);
  ClearingResult r;
  if (o.oracle) {
    r = central_clear(feeder, pop, cfg.wholesale);
  } else {
    MessageBus bus(KeyRing(cfg.seed), cfg.enforce_integrity);
    std::ofstream wire;
    if (o.wire_dump) {
      std::filesystem::create_directories(cfg.output_dir);
      wire.open(cfg.output_dir / "wire.ndjson", std::ios::binary);
      bus.set_wire_dump(&wire);
    }
    r = admm_clear(feeder, pop, cfg.wholesale, cfg.admm, bus);
  }
  write_clearing(cfg.output_dir, r);
  if (!r.converged) {
    std::cerr << "lemsim: error: NoConvergence: stopped after " << r.admm->iter << " iterations (r_primal "
              << format_number(r.admm->r_primal) << ", r_dual " << format_number(r.admm->r_dual) << ")\n";
    return kExitNoConvergence;
  }
  return kExitOk;
}

int cmd_attack(const Options& o) {
  const ScenarioConfig cfg = load(o);
  if (!cfg.attack) throw Error(ErrorKind::Config, "attack needs a scenario with an attack block");
  const FeederModel feeder = load_feeder(cfg.feeder_path.string());
  const auto pop = cfg.build_population(feeder);
  const AttackScenario scenario = cfg.resolved_attack(pop);
  RunOptions opts = cfg.run_options();
  std::ofstream wire;
  if (o.wire_dump) {
    std::filesystem::create_directories(cfg.output_dir);
    wire.open(cfg.output_dir / "wire.ndjson", std::ios::binary);
    opts.wire_dump = &wire;
  }
  const ScenarioOutcome outcome = run_scenario(feeder, pop, cfg.wholesale, cfg.admm, scenario, opts);
  const ImpactReport report = impact(feeder, outcome.baseline, outcome.attacked);
  write_clearing(cfg.output_dir / "baseline", outcome.baseline);
  write_clearing(cfg.output_dir / "attacked", outcome.attacked);
  write_impact(cfg.output_dir, report, outcome.baseline, outcome.attacked);

  nlohmann::ordered_json meta;
  meta["kind"] = to_string(scenario.kind);
  meta["participants"] = scenario.participants;
  meta["buses"] = scenario.kind == AttackKind::ExternalDlmpTamper ? scenario.buses : cfg.attack_buses;
  meta["every_iteration"] = scenario.tamper_every_iteration;
  meta["enforce_integrity"] = cfg.enforce_integrity;
  meta["modified_envelopes"] = outcome.modified;
  meta["rejected_envelopes"] = outcome.rejected;
  std::ofstream(cfg.output_dir / "attack.json", std::ios::binary) << meta.dump(2) << '\n';

  if (!outcome.baseline.converged || !outcome.attacked.converged) {
    std::cerr << "lemsim: error: NoConvergence: " << (outcome.baseline.converged ? "attacked" : "baseline")
              << " clearing hit the iteration limit\n";
    return kExitNoConvergence;
  }
  return kExitOk;
}

int cmd_sensitivity(const Options& o) {
  const ScenarioConfig cfg = load(o);
  const FeederModel feeder = load_feeder(cfg.feeder_path.string());
  const auto pop = cfg.build_population(feeder);
  SensitivityProbe probe = cfg.sensitivity;
  probe.run = cfg.run_options();
  const auto ranking = sensitivity_scan(feeder, pop, cfg.wholesale, cfg.admm, probe);
  write_sensitivity(cfg.output_dir, ranking);
  for (const auto& e : ranking) {
    if (!e.converged) {
      std::cerr << "lemsim: error: NoConvergence: probe at bus " << e.bus << " hit the iteration limit\n";
      return kExitNoConvergence;
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local energy market clearing and false-data-injection scenarios"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "scenario file")->required();
    sub->add_option("--out", o.out, "output directory (overrides the scenario)");
    sub->add_option("--seed", seed, "population and key seed (overrides the scenario)")
        ->each([&](const std::string&) { o.seed = seed; });
  };
  auto* clear = app.add_subcommand("clear", "clear the market and export prices and schedules");
  add_common(clear);
  clear->add_flag("--oracle", o.oracle, "use the centralised solver instead of the distributed one");
  clear->add_flag("--wire-dump", o.wire_dump, "write every delivered envelope to wire.ndjson");
  auto* attack = app.add_subcommand("attack", "run a baseline and an attacked clearing and compare them");
  add_common(attack);
  attack->add_flag("--wire-dump", o.wire_dump, "write every envelope of the attacked run to wire.ndjson");
  auto* sens = app.add_subcommand("sensitivity", "rank buses by the price impact of a small insider probe");
  add_common(sens);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "lemsim: error: Usage: " << one_line(e.what()) << "\n";
    return kExitConfig;
  }

  try {
    if (clear->parsed()) return cmd_clear(o);
    if (attack->parsed()) return cmd_attack(o);
    return cmd_sensitivity(o);
  } catch (const Error& e) {
    std::cerr << "lemsim: error: " << one_line(e.what()) << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "lemsim: error: Internal: " << one_line(e.what()) << "\n";
    return kExitConfig;
  }
}
