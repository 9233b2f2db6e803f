#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "audit.hpp"
#include "instances.hpp"
#include "lemsim/market.hpp"

using namespace lemsim;

namespace {

struct Mini {
  FeederModel feeder = lemtest::mini5();
  std::vector<ParticipantModel> pop = lemtest::mini5_population();
  nlohmann::json ref = lemtest::read_json(lemtest::test_data_dir() / "mini5_reference.json");
};

const Mini& mini() {
  static const Mini m;
  return m;
}

const ClearingResult& central() {
  static const ClearingResult r = central_clear(mini().feeder, mini().pop, default_wholesale());
  return r;
}

const ClearingResult& distributed() {
  static const ClearingResult r = [] {
    MessageBus bus(KeyRing(5));
    return admm_clear(mini().feeder, mini().pop, default_wholesale(), AdmmConfig{}, bus);
  }();
  return r;
}

bool network_binds(const FeederModel& f, const FlowState& s, int h, double tol) {
  for (std::size_t l = 0; l < f.line_count(); ++l) {
    if (std::abs(s.p_flow[l][h]) >= f.lines[l].capacity_kw - tol) return true;
  }
  for (std::size_t b = 0; b < f.bus_count(); ++b) {
    if (s.v_sq[b][h] <= f.vmin_pu + 1e-9 || s.v_sq[b][h] >= f.vmax_pu - 1e-9) return true;
  }
  return false;
}

}  // namespace

TEST_SUITE("market") {
  TEST_CASE("central clearing reproduces the reference optimum") {
    const auto& r = central();
    const auto& ref = mini().ref;
    REQUIRE(r.converged);
    CHECK(r.operational_cost == doctest::Approx(ref["objective"].get<double>()).epsilon(1e-8));
    CHECK(r.energy_cost == doctest::Approx(ref["energy_cost"].get<double>()).epsilon(1e-7));
    for (int h = 0; h < kHours; ++h) {
      CHECK(r.root_import_kw[h] == doctest::Approx(ref["root_import"][h].get<double>()).epsilon(1e-7));
      CHECK(r.dlmp.at(1)[h] == default_wholesale()[h]);
      for (BusId b : {2, 3, 4, 5}) {
        INFO("bus " << b << " hour " << h);
        const double want = ref["dlmp"][std::to_string(b)][h].get<double>();
        CHECK(std::abs(r.dlmp.at(b)[h] - want) < 1e-6 * std::max(1.0, std::abs(want)));
      }
    }
    const auto findings = lemtest::audit_schedules(mini().pop, r);
    CHECK_MESSAGE(findings.empty(), lemtest::describe(findings));
  }

  TEST_CASE("reference instance prices") {
    // spot values of the reference: voltage-bound hour 19 at the far end,
    // lateral congestion at 16, root congestion at 20
    const auto& r = central();
    CHECK(r.dlmp.at(4)[19] == doctest::Approx(7.2076).epsilon(1e-4));
    CHECK(r.dlmp.at(5)[16] == doctest::Approx(0.0848).epsilon(1e-3));
    CHECK(r.dlmp.at(2)[20] == doctest::Approx(0.3235).epsilon(1e-3));
    CHECK(r.dlmp.at(3)[12] == doctest::Approx(0.098).epsilon(1e-9));
  }

  TEST_CASE("distributed clearing converges to the same optimum") {
    const auto& d = distributed();
    const auto& c = central();
    REQUIRE(d.converged);
    CHECK(std::abs(d.operational_cost - c.operational_cost) / c.operational_cost < 1e-3);
    for (std::size_t p = 0; p < c.schedules.size(); ++p) {
      for (int h = 0; h < kHours; ++h) CHECK(std::abs(d.schedules[p].net_kw[h] - c.schedules[p].net_kw[h]) < 0.5);
    }
    for (BusId b : {2, 4, 5}) {
      for (int h : {16, 19, 20}) CHECK(std::abs(d.dlmp.at(b)[h] - c.dlmp.at(b)[h]) < 0.02 * std::abs(c.dlmp.at(b)[h]));
    }
    const auto findings = lemtest::audit_schedules(mini().pop, d);
    CHECK_MESSAGE(findings.empty(), lemtest::describe(findings));
  }

  TEST_CASE("prices equal the wholesale price in unconstrained hours") {
    for (const ClearingResult* r : {&central(), &distributed()}) {
      const auto& f = mini().feeder;
      const FlowState operator_view =
          r->admm ? lindistflow(f, nodal_injection(f, r->participant_bus, r->admm->z)) : r->flow;
      int free_hours = 0;
      for (int h = 0; h < kHours; ++h) {
        if (network_binds(f, operator_view, h, 1e-6)) continue;
        ++free_hours;
        for (std::size_t b = 0; b < f.bus_count(); ++b) CHECK(std::abs(r->dlmp.price[b][h] - default_wholesale()[h]) < 1e-6);
      }
      CHECK(free_hours >= 18);
    }
  }

  TEST_CASE("settlement identities") {
    const auto& r = central();
    const auto pay = settle(r);
    REQUIRE(pay.size() == 3);
    double total = 0.0, expected = 0.0, wholesale = 0.0;
    for (std::size_t p = 0; p < pay.size(); ++p) {
      total += pay[p];
      for (int h = 0; h < kHours; ++h) expected += r.dlmp.at(r.participant_bus[p])[h] * r.schedules[p].net_kw[h];
    }
    for (int h = 0; h < kHours; ++h) wholesale += default_wholesale()[h] * r.root_import_kw[h];
    CHECK(total == doctest::Approx(expected).epsilon(1e-12));
    CHECK(congestion_rent(r) == doctest::Approx(total - wholesale).epsilon(1e-9));
    CHECK(congestion_rent(r) >= -1e-6);
    CHECK(r.dlmp.congestion(4)[19] == doctest::Approx(r.dlmp.at(4)[19] - default_wholesale()[19]));
  }

  TEST_CASE("residual trace and final state") {
    const auto& d = distributed();
    REQUIRE(d.admm);
    CHECK(d.admm->trace.size() == static_cast<std::size_t>(d.admm->iter));
    CHECK(d.admm->r_primal <= AdmmConfig{}.eps_primal);
    CHECK(d.admm->r_dual <= AdmmConfig{}.eps_dual);
    CHECK(d.provenance == central().provenance);
  }

  TEST_CASE("resuming from a converged state stops at once") {
    const auto warm = AdmmWarmStart::from(distributed());
    MessageBus bus(KeyRing(5));
    const auto again = admm_clear(mini().feeder, mini().pop, default_wholesale(), AdmmConfig{}, bus, {}, &warm);
    REQUIRE(again.converged);
    CHECK(again.admm->iter <= 2);
    for (int h = 0; h < kHours; ++h) CHECK(again.dlmp.at(4)[h] == doctest::Approx(distributed().dlmp.at(4)[h]).epsilon(1e-3));
    CHECK_THROWS_AS(AdmmWarmStart::from(central()), Error);
  }

  TEST_CASE("iteration cap is reported, not hidden") {
    AdmmConfig cfg;
    cfg.max_iters = 3;
    MessageBus bus(KeyRing(5));
    const auto r = admm_clear(mini().feeder, mini().pop, default_wholesale(), cfg, bus);
    CHECK_FALSE(r.converged);
    CHECK(r.admm->iter == 3);
  }

  TEST_CASE("same inputs give identical runs") {
    MessageBus a(KeyRing(5)), b(KeyRing(5));
    std::ostringstream wa, wb;
    a.set_wire_dump(&wa);
    b.set_wire_dump(&wb);
    AdmmConfig cfg;
    cfg.max_iters = 10;
    admm_clear(mini().feeder, mini().pop, default_wholesale(), cfg, a);
    admm_clear(mini().feeder, mini().pop, default_wholesale(), cfg, b);
    CHECK(wa.str() == wb.str());
    CHECK_FALSE(wa.str().empty());
  }

  TEST_CASE("only net schedules reach the operator") {
    MessageBus bus(KeyRing(5));
    std::ostringstream wire;
    bus.set_wire_dump(&wire);
    AdmmConfig cfg;
    cfg.max_iters = 2;
    admm_clear(mini().feeder, mini().pop, default_wholesale(), cfg, bus);
    std::istringstream lines(wire.str());
    std::string line;
    int offers = 0;
    while (std::getline(lines, line)) {
      const auto j = nlohmann::json::parse(line);
      if (j["kind"] != "Signal1b") continue;
      ++offers;
      std::set<std::string> keys;
      for (const auto& item : j.items()) keys.insert(item.key());
      CHECK(keys == std::set<std::string>{"kind", "sender", "receiver", "round", "participant", "bus", "net_kw", "tag"});
    }
    CHECK(offers > 0);
  }

  TEST_CASE("configuration and input errors") {
    AdmmConfig cfg;
    cfg.rho = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = AdmmConfig{};
    cfg.anderson_memory = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);

    auto pop = mini().pop;
    pop[1].bus = 42;
    MessageBus bus;
    CHECK_THROWS_AS(admm_clear(mini().feeder, pop, default_wholesale(), AdmmConfig{}, bus), Error);
    CHECK_THROWS_AS(central_clear(mini().feeder, pop, default_wholesale()), Error);

    auto dup = mini().pop;
    dup[2].id = dup[0].id;
    CHECK_THROWS_AS(admm_clear(mini().feeder, dup, default_wholesale(), AdmmConfig{}, bus), Error);
  }

  TEST_CASE("a feeder that cannot carry its fixed load is infeasible") {
    auto pop = mini().pop;
    for (auto& p : pop) {
      for (double& v : p.fixed.profile_kw) v *= 4.0;
    }
    try {
      central_clear(mini().feeder, pop, default_wholesale());
      FAIL("cleared an impossible instance");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Infeasible);
    }
  }

  TEST_CASE("acceleration variants agree") {
    for (auto acc : {AdmmConfig::Acceleration::None, AdmmConfig::Acceleration::Nesterov}) {
      AdmmConfig cfg;
      cfg.acceleration = acc;
      cfg.max_iters = 2000;
      MessageBus bus(KeyRing(5));
      const auto r = admm_clear(mini().feeder, mini().pop, default_wholesale(), cfg, bus);
      REQUIRE(r.converged);
      CHECK(std::abs(r.operational_cost - central().operational_cost) / central().operational_cost < 1e-3);
    }
  }
}
