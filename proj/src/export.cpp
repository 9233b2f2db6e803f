#include "lemsim/export.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace lemsim {

namespace {

using nlohmann::ordered_json;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Config, "cannot write " + path.string());
  return out;
}

void prepare(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Config, "cannot create output directory " + dir.string() + ": " + ec.message());
}

ordered_json num(double v) { return v == 0.0 ? 0.0 : v; }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_json(const std::filesystem::path& path, const ordered_json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace

std::string format_number(double value) {
  if (value == 0.0) return "0";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

void write_clearing(const std::filesystem::path& dir, const ClearingResult& r) {
  prepare(dir);
  {
    auto out = open_out(dir / "dlmp.csv");
    out << "bus,hour,price\n";
    for (std::size_t b = 0; b < r.dlmp.bus_ids.size(); ++b) {
      for (int h = 0; h < kHours; ++h) {
        out << r.dlmp.bus_ids[b] << ',' << h << ',' << format_number(r.dlmp.price[b][h]) << '\n';
      }
    }
  }
  {
    auto out = open_out(dir / "schedules.csv");
    out << "participant,hour,net_kw\n";
    for (std::size_t p = 0; p < r.schedules.size(); ++p) {
      for (int h = 0; h < kHours; ++h) {
        out << r.participant_ids[p] << ',' << h << ',' << format_number(r.schedules[p].net_kw[h]) << '\n';
      }
    }
  }
  {
    auto out = open_out(dir / "residuals.csv");
    out << "iter,r_primal,r_dual\n";
    if (r.admm) {
      for (const auto& t : r.admm->trace) {
        out << t.iter << ',' << format_number(t.r_primal) << ',' << format_number(t.r_dual) << '\n';
      }
    }
  }
  const auto payments = settle(r);
  ordered_json settlement = ordered_json::array();
  double total = 0.0;
  for (std::size_t p = 0; p < payments.size(); ++p) {
    settlement.push_back({{"participant", r.participant_ids[p]}, {"bus", r.participant_bus[p]}, {"payment", num(payments[p])}});
    total += payments[p];
  }
  ordered_json j;
  j["mode"] = r.admm ? "admm" : "central";
  j["objective"] = num(r.operational_cost);
  j["energy_cost"] = num(r.energy_cost);
  j["discomfort_cost"] = num(r.discomfort_cost);
  j["converged"] = r.converged;
  j["iterations"] = r.admm ? r.admm->iter : 0;
  if (r.admm) {
    j["r_primal"] = num(r.admm->r_primal);
    j["r_dual"] = num(r.admm->r_dual);
  }
  j["degenerate_hours"] = r.dlmp.degenerate_hours;
  j["provenance"] = hex64(r.provenance);
  j["settlement"] = {{"total", num(total)}, {"congestion_rent", num(congestion_rent(r))}, {"participants", settlement}};
  write_json(dir / "summary.json", j);
}

void write_impact(const std::filesystem::path& dir, const ImpactReport& rep, const ClearingResult& baseline,
                  const ClearingResult& attacked) {
  prepare(dir);
  {
    auto out = open_out(dir / "impact_dlmp.csv");
    out << "bus,hour,baseline,attacked,dev_pct,absolute\n";
    for (std::size_t b = 0; b < rep.bus_ids.size(); ++b) {
      for (int h = 0; h < kHours; ++h) {
        out << rep.bus_ids[b] << ',' << h << ',' << format_number(baseline.dlmp.price[b][h]) << ','
            << format_number(attacked.dlmp.price[b][h]) << ',' << format_number(rep.dlmp_dev_pct[b][h]) << ','
            << (rep.absolute[b][h] ? 1 : 0) << '\n';
      }
    }
  }
  {
    auto out = open_out(dir / "impact_shift.csv");
    out << "bus,hour,shift_kw\n";
    for (std::size_t b = 0; b < rep.bus_ids.size(); ++b) {
      for (int h = 0; h < kHours; ++h) {
        out << rep.bus_ids[b] << ',' << h << ',' << format_number(rep.demand_shift_kw[b][h]) << '\n';
      }
    }
  }
  ordered_json j;
  j["max_dev_pct"] = num(rep.max_dev_pct);
  j["argmax"] = {{"bus", rep.argmax_bus}, {"hour", rep.argmax_hour}};
  j["mean_abs_dev_pct"] = num(rep.mean_abs_dev_pct);
  ordered_json nodes = ordered_json::array();
  for (std::size_t b = 0; b < rep.bus_ids.size(); ++b) {
    nodes.push_back({{"bus", rep.bus_ids[b]}, {"max_dev_pct", num(rep.node_max_dev_pct[b])}});
  }
  j["node_max_dev_pct"] = nodes;
  ordered_json total = ordered_json::array();
  for (const double v : demand_shift_profile(rep, rep.bus_ids)) total.push_back(num(v));
  j["demand_shift_total_kw"] = total;
  j["cost_delta"] = num(rep.cost_delta);
  ordered_json viol = ordered_json::array();
  for (const auto& v : rep.new_violations) {
    viol.push_back({{"quantity", to_string(v.quantity)},
                    {"element", v.element},
                    {"hour", v.hour},
                    {"value", num(v.value)},
                    {"bound", num(v.bound)}});
  }
  j["new_violations"] = viol;
  ordered_json pay = ordered_json::array();
  for (std::size_t p = 0; p < rep.participant_ids.size(); ++p) {
    pay.push_back({{"participant", rep.participant_ids[p]}, {"delta", num(rep.payment_delta[p])}});
  }
  j["payment_delta"] = pay;
  j["zero"] = rep.zero();
  write_json(dir / "impact.json", j);
}

void write_sensitivity(const std::filesystem::path& dir, const std::vector<SensitivityEntry>& ranking) {
  prepare(dir);
  auto out = open_out(dir / "sensitivity.csv");
  out << "rank,bus,score\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    out << i + 1 << ',' << ranking[i].bus << ',' << format_number(ranking[i].score) << '\n';
  }
}

}  // namespace lemsim
