#include <doctest.h>

#include <sstream>

#include "instances.hpp"
#include "lemsim/comms.hpp"

using namespace lemsim;

namespace {

std::string hex(const Bytes& b) {
  static const char* d = "0123456789abcdef";
  std::string s;
  for (auto v : b) {
    s.push_back(d[v >> 4]);
    s.push_back(d[v & 15]);
  }
  return s;
}

SignalEnvelope sample_offer() {
  SignalEnvelope env;
  env.kind = SignalKind::Signal1b;
  env.sender = "P012";
  env.receiver = kOperatorId;
  env.round = 3;
  OfferPayload o{"P012", 12, {}};
  for (int h = 0; h < kHours; ++h) o.net_kw[h] = 10.0 + 0.5 * h;
  env.payload = o;
  return env;
}

SignalEnvelope sample_prices() {
  SignalEnvelope env;
  env.kind = SignalKind::Signal3;
  env.sender = kOperatorId;
  env.receiver = "P012";
  env.round = 4;
  PricePayload p;
  p.bus = 12;
  for (int h = 0; h < kHours; ++h) {
    p.dlmp[h] = 0.05 + 0.001 * h;
    p.consensus[h] = -2.0 + 0.25 * h;
    p.dual[h] = 0.125 * ((h % 5) - 2);
  }
  p.final_round = true;
  env.payload = p;
  return env;
}

}  // namespace

TEST_SUITE("comms") {
  // Vectors from tests/oracles/integrity_vectors.py.
  TEST_CASE("keys and tags match the reference implementation") {
    const KeyRing keys(7);
    CHECK(hex(keys.key_for("P012")) == "2d4a74beea71dbef1d8af37e429ec0e7a6c342f21bd2356c6e36f61c71329289");
    CHECK(hex(KeyRing(0).key_for("P001")) == "33b379fdf3f7719b455a932f6a80ce28519c2badb8be8fff6f6f5d9c69e1e523");

    const auto offer = tag_integrity(sample_offer(), keys.key_for("P012"));
    CHECK(payload_digest(offer) == "7f186e56c0445c133a881788395cdbfe50036090b6165a2f01b19fd6f1a47f29");
    CHECK(hex(offer.integrity_tag) == "0ec6bf19b361253838afac0f23fd44bd76ccb8e152d06d47fb87f62b35c4c307");

    const auto prices = tag_integrity(sample_prices(), keys.key_for("P012"));
    CHECK(payload_digest(prices) == "b8ead4020ad603c8bb67c743394d2a206491e8db7c6a52c11d30d95a1aea3ee7");
    CHECK(hex(prices.integrity_tag) == "860a74681162d3b9308e83f5cb6f57e556f6df2696a55d5f71a5c22b458fee72");
  }

  TEST_CASE("any change to a tagged envelope breaks verification") {
    const Bytes key = KeyRing(7).key_for("P012");
    const auto good = tag_integrity(sample_prices(), key);
    CHECK(verify_integrity(good, key));
    CHECK_FALSE(verify_integrity(good, KeyRing(8).key_for("P012")));

    auto a = good;
    a.prices().dlmp[16] *= 0.8;
    CHECK_FALSE(verify_integrity(a, key));
    auto b = good;
    b.round += 1;
    CHECK_FALSE(verify_integrity(b, key));
    auto c = good;
    c.prices().final_round = false;
    CHECK_FALSE(verify_integrity(c, key));
    auto d = good;
    d.receiver = "P013";
    CHECK_FALSE(verify_integrity(d, key));
    auto e = good;
    e.integrity_tag.pop_back();
    CHECK_FALSE(verify_integrity(e, key));

    CHECK_THROWS_AS(tag_integrity(sample_offer(), Bytes{}), Error);
  }

  TEST_CASE("offer built from a schedule carries only the net profile") {
    const auto pop = lemtest::mini5_population();
    Schedule s;
    s.net_kw = constant_profile(3.0);
    s.flex_kw = constant_profile(1234.5678);
    const auto env = build_offer(pop[0], s, KeyRing(1).key_for(pop[0].id), 5);
    CHECK(env.kind == SignalKind::Signal1b);
    CHECK(env.sender == "P2");
    CHECK(env.receiver == kOperatorId);
    CHECK(env.round == 5);
    CHECK(env.offer().net_kw == constant_profile(3.0));
    CHECK(verify_integrity(env, KeyRing(1).key_for("P2")));
    CHECK(to_ndjson(env).find("1234.5678") == std::string::npos);
  }

  TEST_CASE("routing logs digests and drops") {
    const auto env = tag_integrity(sample_offer(), KeyRing(7).key_for("P012"));
    const auto pass = route(env, {});
    REQUIRE(pass.delivered);
    CHECK_FALSE(pass.log.modified());

    InterceptorChain edit{only_kind(SignalKind::Signal1b, [](SignalEnvelope e) -> std::optional<SignalEnvelope> {
      e.offer().net_kw[0] += 1.0;
      return e;
    })};
    const auto changed = route(env, edit);
    CHECK(changed.log.modified());
    CHECK(changed.log.pre_digest != changed.log.post_digest);

    InterceptorChain ignore_offers{only_kind(SignalKind::Signal3, [](SignalEnvelope) -> std::optional<SignalEnvelope> {
      return std::nullopt;
    })};
    CHECK_FALSE(route(env, ignore_offers).log.modified());
    const auto dropped = route(tag_integrity(sample_prices(), KeyRing(7).key_for("P012")), ignore_offers);
    CHECK_FALSE(dropped.delivered);
    CHECK(dropped.log.dropped);
    CHECK(dropped.log.post_digest.empty());
  }

  TEST_CASE("enforcing bus rejects tampering and delivers the original") {
    const KeyRing keys(7);
    MessageBus bus(keys, true);
    bus.set_chain({only_kind(SignalKind::Signal3, [](SignalEnvelope e) -> std::optional<SignalEnvelope> {
      e.prices().dlmp[16] = 9.0;
      return e;
    })});
    const auto original = tag_integrity(sample_prices(), keys.key_for("P012"));
    bus.submit(original);
    bus.submit(tag_integrity(sample_offer(), keys.key_for("P012")));
    const auto out = bus.deliver();
    REQUIRE(out.size() == 2);
    CHECK(bus.rejected_count() == 1);
    CHECK(bus.modified_count() == 1);
    for (const auto& e : out) {
      if (e.kind == SignalKind::Signal3) CHECK(e.prices().dlmp == original.prices().dlmp);
    }

    MessageBus open(keys, false);
    open.set_chain({only_kind(SignalKind::Signal3, [](SignalEnvelope e) -> std::optional<SignalEnvelope> {
      e.prices().dlmp[16] = 9.0;
      return e;
    })});
    open.submit(original);
    const auto got = open.deliver();
    REQUIRE(got.size() == 1);
    CHECK(got[0].prices().dlmp[16] == 9.0);
    CHECK(open.rejected_count() == 0);
  }

  TEST_CASE("delivery order does not depend on submission order") {
    const KeyRing keys(3);
    auto offer_from = [&](const std::string& id) {
      auto e = sample_offer();
      e.sender = id;
      e.offer().participant = id;
      return tag_integrity(e, keys.key_for(id));
    };
    MessageBus a(keys), b(keys);
    std::ostringstream wa, wb;
    a.set_wire_dump(&wa);
    b.set_wire_dump(&wb);
    for (const char* id : {"P3", "P1", "P2"}) a.submit(offer_from(id));
    for (const char* id : {"P2", "P3", "P1"}) b.submit(offer_from(id));
    a.deliver();
    b.deliver();
    CHECK(wa.str() == wb.str());
    CHECK(wa.str().find("\"sender\":\"P1\"") < wa.str().find("\"sender\":\"P2\""));
  }
}
