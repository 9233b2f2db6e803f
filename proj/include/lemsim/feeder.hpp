#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lemsim/common.hpp"

namespace lemsim {

struct BusRecord {
  BusId id = 0;
  bool has_load = false;
  Profile nominal_kw{};
  Profile nominal_kvar{};
};

/// r and x are per-unit on the feeder base; capacity is an active-power limit.
struct LineRecord {
  BusId from_bus = 0;
  BusId to_bus = 0;
  double r = 0.0;
  double x = 0.0;
  double capacity_kw = 0.0;
};

/// Radial distribution feeder. Instances returned by build_feeder() and
/// parse_feeder() are validated, every line is oriented parent -> child and
/// the derived topology vectors are populated. Treat as immutable afterwards.
struct FeederModel {
  std::string name;
  std::vector<BusRecord> buses;
  std::vector<LineRecord> lines;
  BusId root = 1;
  double base_kv = 12.66;
  double base_mva = 10.0;
  double vmin_pu = 0.81;  // squared-voltage bounds
  double vmax_pu = 1.1025;
  Profile load_shape = constant_profile(1.0);

  // Derived topology, indexed by position in `buses` / `lines`.
  std::vector<int> parent_bus;    // -1 at the root
  std::vector<int> parent_line;   // line feeding each bus, -1 at the root
  std::vector<int> bfs_order;     // root first
  std::vector<std::vector<int>> child_lines;
  std::unordered_map<BusId, int> index_of;

  int bus_index(BusId id) const;
  int root_index() const { return bus_index(root); }
  std::size_t bus_count() const { return buses.size(); }
  std::size_t line_count() const { return lines.size(); }
  /// kW per unit of per-unit active power.
  double kw_base() const { return 1000.0 * base_mva; }
  std::vector<BusId> load_buses() const;
  /// Bus indices on the path from `bus_idx` up to (and including) the root.
  std::vector<int> root_path(int bus_idx) const;
};

/// Breadth-first orientation from the root: child bus id -> parent bus id.
std::map<BusId, BusId> validate_radial(const FeederModel& model);

/// Validates a raw model (ids, radiality, device-independent invariants),
/// orients its lines and fills the derived topology.
FeederModel build_feeder(FeederModel raw);

FeederModel parse_feeder(std::string_view json_text);
FeederModel load_feeder(const std::filesystem::path& path);

/// Uniform chain 1-2-...-n with identical lines and identical loads on every
/// non-root bus. Handy for structural tests.
FeederModel path_feeder(int n_buses, double r_pu, double x_pu, double load_kw,
                        double capacity_kw, const Profile& shape = constant_profile(1.0));

}  // namespace lemsim
