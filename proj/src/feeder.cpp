#include "lemsim/feeder.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

namespace lemsim {

using nlohmann::json;

int FeederModel::bus_index(BusId id) const {
  auto it = index_of.find(id);
  if (it == index_of.end()) {
    throw Error(ErrorKind::UnknownBus, "bus " + std::to_string(id) + " is not part of feeder '" + name + "'");
  }
  return it->second;
}

std::vector<BusId> FeederModel::load_buses() const {
  std::vector<BusId> out;
  for (const auto& b : buses) {
    if (b.has_load) out.push_back(b.id);
  }
  return out;
}

std::vector<int> FeederModel::root_path(int bus_idx) const {
  std::vector<int> path;
  for (int b = bus_idx; b >= 0; b = parent_bus[b]) path.push_back(b);
  return path;
}

namespace {

std::unordered_map<BusId, int> index_buses(const std::vector<BusRecord>& buses) {
  std::unordered_map<BusId, int> index;
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (!index.emplace(buses[i].id, static_cast<int>(i)).second) {
      throw Error(ErrorKind::DuplicateBusId, "bus id " + std::to_string(buses[i].id) + " appears more than once");
    }
  }
  return index;
}

}  // namespace

std::map<BusId, BusId> validate_radial(const FeederModel& model) {
  const auto index = index_buses(model.buses);
  const auto n = model.buses.size();
  if (n == 0) throw Error(ErrorKind::MalformedDocument, "feeder has no buses");
  if (!index.count(model.root)) {
    throw Error(ErrorKind::MalformedDocument, "root bus " + std::to_string(model.root) + " is not defined");
  }
  if (model.lines.size() != n - 1) {
    throw Error(ErrorKind::NonRadial, "feeder with " + std::to_string(n) + " buses needs " + std::to_string(n - 1) +
                                          " lines, found " + std::to_string(model.lines.size()));
  }

  std::vector<std::vector<int>> adjacent(n);
  for (const auto& line : model.lines) {
    auto f = index.find(line.from_bus);
    auto t = index.find(line.to_bus);
    if (f == index.end() || t == index.end()) {
      throw Error(ErrorKind::MalformedDocument, "line " + std::to_string(line.from_bus) + "-" +
                                                    std::to_string(line.to_bus) + " references an unknown bus");
    }
    if (f->second == t->second) throw Error(ErrorKind::NonRadial, "self-loop at bus " + std::to_string(line.from_bus));
    adjacent[f->second].push_back(t->second);
    adjacent[t->second].push_back(f->second);
  }

  std::map<BusId, BusId> parent;
  std::vector<int> parent_idx(n, -2);
  std::queue<int> frontier;
  const int root = index.at(model.root);
  parent_idx[root] = -1;
  frontier.push(root);
  std::size_t visited = 1;
  while (!frontier.empty()) {
    const int b = frontier.front();
    frontier.pop();
    for (int c : adjacent[b]) {
      if (c == parent_idx[b]) continue;
      if (parent_idx[c] != -2) {
        throw Error(ErrorKind::NonRadial, "cycle through bus " + std::to_string(model.buses[c].id));
      }
      parent_idx[c] = b;
      parent[model.buses[c].id] = model.buses[b].id;
      frontier.push(c);
      ++visited;
    }
  }
  if (visited != n) throw Error(ErrorKind::NonRadial, "feeder is not connected to the root");
  return parent;
}

FeederModel build_feeder(FeederModel model) {
  const auto parent = validate_radial(model);
  model.index_of = index_buses(model.buses);

  for (auto& bus : model.buses) {
    for (int h = 0; h < kHours; ++h) {
      if (bus.nominal_kw[h] < 0.0 || bus.nominal_kvar[h] < 0.0) {
        throw Error(ErrorKind::MalformedDocument, "negative nominal demand at bus " + std::to_string(bus.id));
      }
    }
    bus.has_load = std::any_of(bus.nominal_kw.begin(), bus.nominal_kw.end(), [](double v) { return v > 0.0; });
  }

  const auto n = model.buses.size();
  model.parent_bus.assign(n, -1);
  model.parent_line.assign(n, -1);
  model.child_lines.assign(n, {});
  for (std::size_t l = 0; l < model.lines.size(); ++l) {
    auto& line = model.lines[l];
    if (line.r < 0.0 || line.x < 0.0 || !(line.capacity_kw > 0.0)) {
      throw Error(ErrorKind::MalformedDocument, "line " + std::to_string(line.from_bus) + "-" +
                                                    std::to_string(line.to_bus) + " needs r,x >= 0 and capacity > 0");
    }
    const auto up = parent.find(line.to_bus);
    if (up == parent.end() || up->second != line.from_bus) std::swap(line.from_bus, line.to_bus);
    const int child = model.index_of.at(line.to_bus);
    const int par = model.index_of.at(line.from_bus);
    model.parent_bus[child] = par;
    model.parent_line[child] = static_cast<int>(l);
    model.child_lines[par].push_back(static_cast<int>(l));
  }

  model.bfs_order.clear();
  model.bfs_order.push_back(model.root_index());
  for (std::size_t i = 0; i < model.bfs_order.size(); ++i) {
    for (int l : model.child_lines[model.bfs_order[i]]) {
      model.bfs_order.push_back(model.index_of.at(model.lines[l].to_bus));
    }
  }
  if (!(model.vmin_pu > 0.0) || !(model.vmax_pu > model.vmin_pu)) {
    throw Error(ErrorKind::MalformedDocument, "voltage bounds must satisfy 0 < vmin_pu < vmax_pu");
  }
  return model;
}

namespace {

double number(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw Error(ErrorKind::MalformedDocument, std::string("missing numeric field '") + key + "'");
  }
  return j[key].get<double>();
}

Profile profile_field(const json& j, const char* key, const Profile& shape) {
  if (!j.contains(key)) return Profile{};
  const auto& v = j[key];
  Profile out{};
  if (v.is_number()) {
    for (int h = 0; h < kHours; ++h) out[h] = v.get<double>() * shape[h];
  } else if (v.is_array() && v.size() == kHours) {
    for (int h = 0; h < kHours; ++h) {
      if (!v[h].is_number()) throw Error(ErrorKind::MalformedDocument, std::string("non-numeric entry in '") + key + "'");
      out[h] = v[h].get<double>();
    }
  } else {
    throw Error(ErrorKind::MalformedDocument, std::string("'") + key + "' must be a number or a 24-entry array");
  }
  return out;
}

}  // namespace

FeederModel parse_feeder(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::MalformedDocument, e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::MalformedDocument, "feeder document must be a JSON object");
  for (const char* key : {"buses", "lines"}) {
    if (!doc.contains(key) || !doc[key].is_array()) {
      throw Error(ErrorKind::MalformedDocument, std::string("missing array '") + key + "'");
    }
  }

  FeederModel model;
  model.name = doc.value("name", std::string("feeder"));
  model.base_kv = number(doc, "base_kv");
  model.base_mva = number(doc, "base_mva");
  model.vmin_pu = number(doc, "vmin_pu");
  model.vmax_pu = number(doc, "vmax_pu");
  model.root = doc.value("root", 1);
  if (!(model.base_kv > 0.0) || !(model.base_mva > 0.0)) {
    throw Error(ErrorKind::MalformedDocument, "base_kv and base_mva must be positive");
  }
  if (!doc.contains("load_shape") || !doc["load_shape"].is_array() || doc["load_shape"].size() != kHours) {
    throw Error(ErrorKind::MalformedDocument, "load_shape must hold 24 values");
  }
  for (int h = 0; h < kHours; ++h) model.load_shape[h] = doc["load_shape"][h].get<double>();

  for (const auto& jb : doc["buses"]) {
    if (!jb.is_object() || !jb.contains("id") || !jb["id"].is_number_integer()) {
      throw Error(ErrorKind::MalformedDocument, "bus entries need an integer 'id'");
    }
    BusRecord bus;
    bus.id = jb["id"].get<int>();
    bus.nominal_kw = profile_field(jb, "p_kw", model.load_shape);
    bus.nominal_kvar = profile_field(jb, "q_kvar", model.load_shape);
    model.buses.push_back(bus);
  }
  for (const auto& jl : doc["lines"]) {
    if (!jl.is_object() || !jl.contains("from") || !jl.contains("to")) {
      throw Error(ErrorKind::MalformedDocument, "line entries need 'from' and 'to'");
    }
    LineRecord line;
    line.from_bus = jl["from"].get<int>();
    line.to_bus = jl["to"].get<int>();
    line.r = number(jl, "r");
    line.x = number(jl, "x");
    line.capacity_kw = number(jl, "capacity_kw");
    model.lines.push_back(line);
  }
  return build_feeder(std::move(model));
}

FeederModel load_feeder(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open feeder file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_feeder(buffer.str());
}

FeederModel path_feeder(int n_buses, double r_pu, double x_pu, double load_kw, double capacity_kw,
                        const Profile& shape) {
  FeederModel model;
  model.name = "path" + std::to_string(n_buses);
  model.load_shape = shape;
  for (int i = 1; i <= n_buses; ++i) {
    BusRecord bus;
    bus.id = i;
    if (i > 1) {
      for (int h = 0; h < kHours; ++h) bus.nominal_kw[h] = load_kw * shape[h];
    }
    model.buses.push_back(bus);
  }
  for (int i = 1; i < n_buses; ++i) model.lines.push_back({i, i + 1, r_pu, x_pu, capacity_kw});
  return build_feeder(std::move(model));
}

}  // namespace lemsim
