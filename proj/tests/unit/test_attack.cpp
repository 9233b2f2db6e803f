#include <doctest.h>

#include "instances.hpp"
#include "lemsim/analysis.hpp"
#include "lemsim/attack.hpp"

using namespace lemsim;

namespace {

const FeederModel& feeder() {
  static const FeederModel f = lemtest::mini5();
  return f;
}

const std::vector<ParticipantModel>& pop() {
  static const auto p = lemtest::mini5_population();
  return p;
}

const ClearingResult& baseline() {
  static const ClearingResult r = [] {
    MessageBus bus(KeyRing(11));
    return admm_clear(feeder(), pop(), default_wholesale(), AdmmConfig{}, bus);
  }();
  return r;
}

RunOptions keyed(bool enforce = false) {
  RunOptions o;
  o.key_seed = 11;
  o.enforce_integrity = enforce;
  return o;
}

AttackScenario insider(double alpha, std::vector<int> hours = {19}) {
  AttackScenario s;
  s.kind = AttackKind::InsiderDemandInflation;
  s.participants = {"P4"};
  s.hours = std::move(hours);
  s.alpha = alpha;
  return s;
}

AttackScenario external(double valley, double peak) {
  AttackScenario s;
  s.kind = AttackKind::ExternalDlmpTamper;
  s.buses = {4, 5};
  s.rule = {{16}, valley, peak};
  return s;
}

bool identical(const ClearingResult& a, const ClearingResult& b) {
  if (a.dlmp.price != b.dlmp.price || a.admm->iter != b.admm->iter) return false;
  for (std::size_t p = 0; p < a.schedules.size(); ++p) {
    if (a.schedules[p].net_kw != b.schedules[p].net_kw || a.reported_kw[p] != b.reported_kw[p]) return false;
  }
  return a.operational_cost == b.operational_cost;
}

}  // namespace

TEST_SUITE("attack") {
  TEST_CASE("tamper rule arithmetic") {
    const TamperRule rule{{16, 17}, 0.8, 1.05};
    const auto out = rule.apply(constant_profile(0.1));
    CHECK(out[16] == doctest::Approx(0.08));
    CHECK(out[17] == doctest::Approx(0.08));
    CHECK(out[3] == doctest::Approx(0.105));
    CHECK(rule.factor(20) == 1.05);
    CHECK(TamperRule{{}, 1.0, 1.0}.apply(default_wholesale()) == default_wholesale());

    CHECK_THROWS_AS((TamperRule{{16}, 0.0, 1.0}.validate()), Error);
    CHECK_THROWS_AS((TamperRule{{16}, 1.2, 1.0}.validate()), Error);
    CHECK_THROWS_AS((TamperRule{{16}, 0.8, 0.9}.validate()), Error);
    CHECK_THROWS_AS((TamperRule{{24}, 0.8, 1.0}.validate()), Error);
    CHECK_THROWS_AS((TamperRule{{5, 5}, 0.8, 1.0}.validate()), Error);
  }

  TEST_CASE("scenario validation") {
    CHECK_NOTHROW(insider(1.4).validate_against(feeder(), pop()));
    CHECK_THROWS_AS(insider(0.9).validate(), Error);
    CHECK_THROWS_AS(insider(3.5).validate(), Error);
    CHECK_THROWS_AS(insider(1.2, {}).validate(), Error);
    CHECK_THROWS_AS(insider(1.2, {-1}).validate(), Error);
    auto ghost = insider(1.2);
    ghost.participants = {"P9"};
    CHECK_THROWS_AS(ghost.validate_against(feeder(), pop()), Error);
    auto far = external(0.8, 1.0);
    far.buses = {77};
    CHECK_THROWS_AS(far.validate_against(feeder(), pop()), Error);
    CHECK(participants_at(pop(), {5, 2}) == std::vector<ParticipantId>{"P2", "P5"});
    CHECK(participants_at(pop(), {3}).empty());
  }

  TEST_CASE("insider inflation touches only consumption at the chosen hours") {
    const Bytes key = KeyRing(11).key_for("P4");
    Schedule s;
    for (int h = 0; h < kHours; ++h) s.net_kw[h] = h % 2 ? 10.0 : -4.0;
    const auto env = build_offer(pop()[1], s, key);
    auto sc = insider(1.5, {3, 4, 19});
    const auto out = insider_inflate(sc, env, key);
    CHECK(out.offer().net_kw[3] == 15.0);
    CHECK(out.offer().net_kw[4] == -4.0);
    CHECK(out.offer().net_kw[19] == 15.0);
    CHECK(out.offer().net_kw[5] == 10.0);
    CHECK(verify_integrity(out, key));

    auto other = build_offer(pop()[0], s, KeyRing(11).key_for("P2"));
    CHECK_THROWS_AS(insider_inflate(sc, other, key), Error);
    CHECK_THROWS_AS(insider_inflate(external(0.8, 1.0), env, key), Error);
  }

  TEST_CASE("external tampering leaves the tag stale") {
    const Bytes key = KeyRing(11).key_for("P4");
    SignalEnvelope env;
    env.kind = SignalKind::Signal3;
    env.sender = kOperatorId;
    env.receiver = "P4";
    PricePayload pp;
    pp.bus = 4;
    pp.dlmp = constant_profile(0.1);
    env.payload = pp;
    env = tag_integrity(env, key);
    const auto out = external_tamper(external(0.5, 1.0), env);
    CHECK(out.prices().dlmp[16] == 0.05);
    CHECK(out.prices().dlmp[15] == 0.1);
    CHECK(out.integrity_tag == env.integrity_tag);
    CHECK_FALSE(verify_integrity(out, key));

    auto elsewhere = env;
    elsewhere.prices().bus = 2;
    CHECK_THROWS_AS(external_tamper(external(0.5, 1.0), elsewhere), Error);
  }

  TEST_CASE("identity attacks reproduce the baseline bit for bit") {
    const auto a = run_attacked(feeder(), pop(), default_wholesale(), AdmmConfig{}, insider(1.0), keyed());
    CHECK(identical(a.result, baseline()));
    CHECK(impact(feeder(), baseline(), a.result).zero());

    const auto b = run_attacked(feeder(), pop(), default_wholesale(), AdmmConfig{}, external(1.0, 1.0), keyed());
    CHECK(identical(b.result, baseline()));
    CHECK(b.modified == 0);
  }

  TEST_CASE("inflating a consumer at a stressed hour raises prices") {
    // line 2-5 is at its limit at hour 16
    auto sc = insider(1.3, {16});
    sc.participants = {"P5"};
    const auto run = run_attacked(feeder(), pop(), default_wholesale(), AdmmConfig{}, sc, keyed());
    REQUIRE(run.result.converged);
    const auto rep = impact(feeder(), baseline(), run.result);
    CHECK(rep.max_dev_pct > 0.0);
    CHECK(rep.argmax_bus == 5);
    CHECK(run.result.dlmp.at(5)[16] > baseline().dlmp.at(5)[16]);
    CHECK(run.rejected == 0);
  }

  TEST_CASE("an inflated report the network cannot carry never clears") {
    // P4 sits on the voltage floor at hour 19 with mostly fixed load
    const auto run = run_attacked(feeder(), pop(), default_wholesale(), AdmmConfig{}, insider(1.3), keyed());
    CHECK_FALSE(run.result.converged);
    CHECK(run.result.admm->r_primal > AdmmConfig{}.eps_primal);
    CHECK(run.result.dlmp.at(4)[19] > 10.0 * baseline().dlmp.at(4)[19]);
  }

  TEST_CASE("enforcement cancels the external attack but not the insider") {
    const auto ext = run_scenario(feeder(), pop(), default_wholesale(), AdmmConfig{}, external(0.7, 1.1), keyed(true));
    CHECK(ext.rejected > 0);
    CHECK(ext.rejected == ext.modified);
    CHECK(identical(ext.attacked, ext.baseline));
    CHECK(impact(feeder(), ext.baseline, ext.attacked).zero());

    const auto open = run_scenario(feeder(), pop(), default_wholesale(), AdmmConfig{}, external(0.7, 1.1), keyed(false));
    CHECK(open.rejected == 0);
    CHECK(open.modified > 0);
    CHECK_FALSE(impact(feeder(), open.baseline, open.attacked).zero());

    const auto ins_on = run_attacked(feeder(), pop(), default_wholesale(), AdmmConfig{}, insider(1.3), keyed(true));
    const auto ins_off = run_attacked(feeder(), pop(), default_wholesale(), AdmmConfig{}, insider(1.3), keyed(false));
    CHECK(ins_on.rejected == 0);
    CHECK(identical(ins_on.result, ins_off.result));
  }

  TEST_CASE("one-shot variants tamper only the final exchange") {
    auto sc = external(0.7, 1.1);
    sc.tamper_every_iteration = false;
    const auto run = run_attacked(feeder(), pop(), default_wholesale(), AdmmConfig{}, sc, keyed());
    CHECK(run.modified == 2);
    auto ins = insider(1.3);
    ins.tamper_every_iteration = false;
    const auto late = run_attacked(feeder(), pop(), default_wholesale(), AdmmConfig{}, ins, keyed());
    const int p4 = late.result.participant_index("P4");
    CHECK(late.result.reported_kw[p4][19] == doctest::Approx(1.3 * late.result.schedules[p4].net_kw[19]));
  }
}
