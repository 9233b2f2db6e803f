#include <doctest.h>

#include <cmath>

#include "instances.hpp"
#include "lemsim/distflow.hpp"

using namespace lemsim;

namespace {

FeederModel two_bus() { return path_feeder(2, 0.01, 0.0, 0.0, 5000.0); }

}  // namespace

TEST_SUITE("distflow") {
  TEST_CASE("zero injection leaves a flat profile") {
    const auto f = lemtest::mini5();
    const auto zero = NetInjection::zeros(f);
    const auto lin = lindistflow(f, zero);
    const auto nl = nonlinear_distflow_oracle(f, zero);
    for (std::size_t b = 0; b < f.bus_count(); ++b) {
      for (int h = 0; h < kHours; ++h) {
        CHECK(lin.v_sq[b][h] == 1.0);
        CHECK(nl.v_sq[b][h] == doctest::Approx(1.0).epsilon(1e-14));
      }
    }
    for (const auto& p : lin.p_flow) CHECK(p == Profile{});
    CHECK(check_limits(f, lin).empty());
  }

  TEST_CASE("two-bus recursion by hand") {
    const auto f = two_bus();
    auto inj = NetInjection::zeros(f);
    inj.p_kw[1].fill(0.1 * f.kw_base());
    const auto lin = lindistflow(f, inj);
    CHECK(lin.p_flow[0][5] == doctest::Approx(0.1 * f.kw_base()));
    CHECK(lin.v_sq[1][5] == doctest::Approx(0.998).epsilon(1e-12));
    CHECK(lin.p_root[5] == doctest::Approx(1000.0));

    const auto nl = nonlinear_distflow_oracle(f, inj);
    CHECK(nl.v_sq[1][5] < 0.998);
    CHECK(0.998 - nl.v_sq[1][5] < 1e-3);
    CHECK(nl.residual < 1e-8);
    CHECK(nl.p_root[5] > 1000.0);
  }

  TEST_CASE("mini feeder matches the independent nonlinear solution") {
    const auto f = lemtest::mini5();
    const auto ref = lemtest::read_json(lemtest::test_data_dir() / "mini5_powerflow.json");
    const auto nl = nonlinear_distflow_oracle(f, NetInjection::nominal(f), 1e-12);
    CHECK(nl.residual < 1e-12);
    for (int h : {3, 19}) {
      const auto& r = ref[std::to_string(h)];
      for (std::size_t b = 0; b < f.bus_count(); ++b) {
        CHECK(nl.v_sq[b][h] == doctest::Approx(r["v_sq"][b].get<double>()).epsilon(1e-9));
      }
      CHECK(nl.p_root[h] == doctest::Approx(r["p_root_kw"].get<double>()).epsilon(1e-9));
    }
  }

  TEST_CASE("linear model stays within 1% of the nonlinear one at nominal loading") {
    const auto f = lemtest::ieee69();
    const auto inj = NetInjection::nominal(f);
    const auto lin = lindistflow(f, inj);
    const auto nl = nonlinear_distflow_oracle(f, inj);
    double worst = 0.0;
    for (std::size_t b = 0; b < f.bus_count(); ++b) {
      for (int h = 0; h < kHours; ++h) {
        worst = std::max(worst, std::abs(std::sqrt(lin.v_sq[b][h]) - std::sqrt(nl.v_sq[b][h])) / std::sqrt(nl.v_sq[b][h]));
      }
    }
    CHECK(worst < 0.01);
    CHECK(nl.residual < 1e-8);
  }

  TEST_CASE("flow conservation of the linear model") {
    const auto f = lemtest::ieee69();
    const auto inj = NetInjection::nominal(f);
    const auto lin = lindistflow(f, inj);
    for (int h = 0; h < kHours; ++h) {
      double total = 0.0;
      for (std::size_t b = 0; b < f.bus_count(); ++b) total += inj.p_kw[b][h];
      CHECK(lin.p_root[h] == doctest::Approx(total).epsilon(1e-12));
      for (std::size_t b = 0; b < f.bus_count(); ++b) {
        if (static_cast<int>(b) == f.root_index()) continue;
        double out = 0.0;
        for (int l : f.child_lines[b]) out += lin.p_flow[l][h];
        CHECK(lin.p_flow[f.parent_line[b]][h] - out == doctest::Approx(inj.p_kw[b][h]).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("overload diverges") {
    const auto f = lemtest::ieee69();
    CHECK_THROWS_AS(nonlinear_distflow_oracle(f, NetInjection::nominal(f, 10.0)), Error);
    try {
      nonlinear_distflow_oracle(f, NetInjection::nominal(f, 10.0));
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NoConvergence);
    }
  }

  TEST_CASE("limit check reports the offending line and hour") {
    const auto f = path_feeder(2, 0.0001, 0.0, 0.0, 100.0);
    auto inj = NetInjection::zeros(f);
    inj.p_kw[1][19] = 120.0;
    const auto v = check_limits(f, lindistflow(f, inj));
    REQUIRE(v.size() == 1);
    CHECK(v[0].quantity == Violation::Quantity::LineFlow);
    CHECK(v[0].element == 0);
    CHECK(v[0].hour == 19);
    CHECK(v[0].value == doctest::Approx(120.0));
    CHECK(v[0].bound == doctest::Approx(100.0));
  }
}
