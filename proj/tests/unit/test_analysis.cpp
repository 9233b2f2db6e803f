#include <doctest.h>

#include "instances.hpp"
#include "lemsim/analysis.hpp"

using namespace lemsim;

namespace {

ClearingResult fake(const FeederModel& f, const Profile& price) {
  ClearingResult r;
  r.participant_ids = {"A"};
  r.participant_bus = {2};
  Schedule s;
  s.net_kw = constant_profile(10.0);
  r.schedules = {s};
  r.reported_kw = {s.net_kw};
  r.dlmp.wholesale = price;
  for (const auto& b : f.buses) {
    r.dlmp.bus_ids.push_back(b.id);
    r.dlmp.price.push_back(price);
  }
  r.nodal = nodal_injection(f, r.participant_bus, {s.net_kw});
  r.flow = lindistflow(f, r.nodal);
  r.provenance = 99;
  return r;
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("identical results give an all-zero report") {
    const auto f = path_feeder(3, 0.001, 0.001, 10.0, 500.0);
    const auto a = fake(f, default_wholesale());
    const auto rep = impact(f, a, a);
    CHECK(rep.zero());
    CHECK(rep.max_dev_pct == 0.0);
    CHECK(rep.new_violations.empty());
  }

  TEST_CASE("deviation is signed, relative, and located") {
    const auto f = path_feeder(3, 0.001, 0.001, 10.0, 500.0);
    const auto a = fake(f, constant_profile(0.1));
    auto b = a;
    b.dlmp.price[2][16] = 0.103;
    b.dlmp.price[1][5] = 0.098;
    const auto rep = impact(f, a, b);
    CHECK(rep.max_dev_pct == doctest::Approx(3.0));
    CHECK(rep.argmax_bus == 3);
    CHECK(rep.argmax_hour == 16);
    CHECK(rep.node_max_dev_pct[1] == doctest::Approx(-2.0));
    CHECK(rep.mean_abs_dev_pct == doctest::Approx(5.0 / (3 * kHours)));
    CHECK_FALSE(rep.zero());

    auto c = a;
    c.dlmp.price[2][16] = 0.095;
    CHECK(impact(f, a, c).max_dev_pct == doctest::Approx(-5.0));
  }

  TEST_CASE("near-zero baseline prices are compared in absolute terms") {
    const auto f = path_feeder(2, 0.001, 0.001, 10.0, 500.0);
    auto a = fake(f, constant_profile(0.1));
    a.dlmp.price[1][7] = 0.0;
    auto b = a;
    b.dlmp.price[1][7] = 0.002;
    const auto rep = impact(f, a, b);
    CHECK(rep.absolute[1][7]);
    CHECK(rep.dlmp_dev_pct[1][7] == doctest::Approx(0.002));
    CHECK_FALSE(rep.absolute[1][6]);
  }

  TEST_CASE("demand shift, payments and new violations") {
    const auto f = path_feeder(2, 0.001, 0.001, 10.0, 15.0);
    const auto a = fake(f, constant_profile(0.1));
    auto b = a;
    b.schedules[0].net_kw[19] = 20.0;
    b.nodal = nodal_injection(f, b.participant_bus, {b.schedules[0].net_kw});
    b.flow = lindistflow(f, b.nodal);
    const auto rep = impact(f, a, b);
    CHECK(demand_shift_profile(rep, {2})[19] == doctest::Approx(10.0));
    CHECK(demand_shift_profile(rep, {1, 2})[18] == 0.0);
    CHECK_THROWS_AS(demand_shift_profile(rep, {9}), Error);
    REQUIRE(rep.new_violations.size() == 1);
    CHECK(rep.new_violations[0].hour == 19);
    CHECK(rep.payment_delta[0] == doctest::Approx(1.0));
  }

  TEST_CASE("results from different inputs are not compared") {
    const auto f = path_feeder(3, 0.001, 0.001, 10.0, 500.0);
    const auto a = fake(f, default_wholesale());
    auto b = a;
    b.provenance = 100;
    try {
      impact(f, a, b);
      FAIL("compared mismatched results");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::MismatchedProvenance);
    }
    CHECK_THROWS_AS(impact(path_feeder(4, 0.001, 0.001, 10.0, 500.0), a, a), Error);
  }

  TEST_CASE("scan with a unit probe scores zero everywhere") {
    const auto f = lemtest::mini5();
    const auto pop = lemtest::mini5_population();
    SensitivityProbe probe;
    probe.alpha = 1.0;
    probe.hours = {19};
    const auto ranking = sensitivity_scan(f, pop, default_wholesale(), AdmmConfig{}, probe);
    REQUIRE(ranking.size() == 3);
    for (const auto& e : ranking) {
      CHECK(e.score == 0.0);
      CHECK(e.converged);
    }
    CHECK(ranking[0].bus == 2);
    CHECK(ranking[2].bus == 5);
  }

  TEST_CASE("scan ranks and rejects unknown buses") {
    const auto f = lemtest::mini5();
    const auto pop = lemtest::mini5_population();
    SensitivityProbe probe;
    probe.alpha = 1.2;
    probe.hours = {19};
    const auto ranking = sensitivity_scan(f, pop, default_wholesale(), AdmmConfig{}, probe);
    REQUIRE(ranking.size() == 3);
    for (std::size_t i = 1; i < ranking.size(); ++i) CHECK(ranking[i - 1].score >= ranking[i].score);
    CHECK(ranking[0].score > 0.0);

    probe.buses = {3};
    CHECK_THROWS_AS(sensitivity_scan(f, pop, default_wholesale(), AdmmConfig{}, probe), Error);
    probe.buses = {42};
    try {
      sensitivity_scan(f, pop, default_wholesale(), AdmmConfig{}, probe);
      FAIL("scanned an unknown bus");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::UnknownBus);
    }
  }
}
