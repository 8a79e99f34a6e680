#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "sybilwatch/error.hpp"
#include "sybilwatch/features.hpp"
#include "sybilwatch/simulator.hpp"

using namespace sybilwatch;

namespace {

AccountId id(int i) { return AccountId("n" + std::to_string(i)); }

}  // namespace

TEST_CASE("feature names round-trip") {
  for (auto f : kAllFeatures) CHECK(parse_feature(to_string(f)) == f);
  CHECK_FALSE(parse_feature("nope").has_value());
}

TEST_CASE("window boundaries") {
  FeatureState st({3600, 2});
  st.apply_event(Event::account_created(0, id(0)));
  st.apply_event(Event::account_created(0, id(1)));
  st.apply_event(Event::request_sent(100, id(0), id(1)));
  st.apply_event(Event::request_sent(200, id(0), id(1)));
  CHECK(st.snapshot(id(0), 200).invite_rate == 2.0);
  CHECK(st.snapshot(id(0), 3699).invite_rate == 2.0);
  CHECK(st.snapshot(id(0), 3700).invite_rate == 1.0);  // (now - W, now]
  CHECK(st.snapshot(id(1), 3700).incoming_request_count == 1);
  CHECK(st.snapshot(id(0), 3800).invite_rate == 0.0);
  CHECK(st.snapshot(id(0), 3800).outgoing_sent_total == 2);
}

TEST_CASE("accept ratio is defined from min_sent") {
  FeatureState st({3600, 3});
  st.apply_event(Event::account_created(0, id(0)));
  st.apply_event(Event::account_created(0, id(1)));
  st.apply_event(Event::account_created(0, id(2)));
  st.apply_event(Event::request_sent(1, id(0), id(1)));
  st.apply_event(Event::request_accepted(2, id(0), id(1)));
  st.apply_event(Event::request_sent(3, id(0), id(2)));
  CHECK_FALSE(st.snapshot(id(0), 3).outgoing_accept_ratio.has_value());
  st.apply_event(Event::request_sent(4, id(0), id(2)));
  CHECK(st.snapshot(id(0), 4).outgoing_accept_ratio == doctest::Approx(1.0 / 3.0));
  CHECK(st.accepted_total(*st.find(id(0))) == 1);
}

TEST_CASE("event errors leave the state untouched") {
  FeatureState st;
  st.apply_event(Event::account_created(10, id(0)));
  st.apply_event(Event::account_created(10, id(1)));
  st.apply_event(Event::request_sent(20, id(0), id(1)));
  const FeatureState before = st;
  auto expect = [&](const Event& e, Errc code) {
    try {
      st.apply_event(e);
      FAIL("expected an error");
    } catch (const Error& err) {
      CHECK(err.code() == code);
    }
    CHECK(st == before);
  };
  expect(Event::request_sent(5, id(0), id(1)), Errc::out_of_order_event);
  expect(Event::request_sent(30, id(0), id(7)), Errc::unknown_account);
  expect(Event::request_accepted(30, id(1), id(0)), Errc::unmatched_response);
  expect(Event::request_sent(30, id(0), id(0)), Errc::self_loop);
  expect(Event::account_created(30, id(0)), Errc::duplicate_account);
  CHECK_THROWS_AS((void)st.snapshot(id(0), 19), Error);
  CHECK_THROWS_AS((void)st.snapshot(id(5), 30), Error);
}

TEST_CASE("incremental features equal batch recomputation") {
  std::mt19937_64 rng(2024);
  const FeatureConfig cfg{1800, 3};
  for (int trial = 0; trial < 6; ++trial) {
    const auto ev = oracle::random_stream(rng, 600);
    FeatureState st(cfg);
    std::vector<Event> prefix;
    for (const auto& e : ev) {
      st.apply_event(e);
      prefix.push_back(e);
      if (e.type == EventType::account_created) continue;
      for (const auto& who : {e.actor, *e.target}) {
        REQUIRE(st.snapshot(who, e.ts) == oracle::batch_features(prefix, who, e.ts, cfg));
      }
    }
  }
}

TEST_CASE("simulated stream: spot checks against batch recomputation") {
  SimConfig c;
  c.n_normal = 80;
  c.n_sybil = 8;
  c.duration_hours = 12;
  const auto out = generate(c);
  FeatureState st;
  std::vector<Event> prefix;
  std::size_t k = 0;
  for (const auto& e : out.events) {
    st.apply_event(e);
    prefix.push_back(e);
    if (e.type == EventType::request_sent && ++k % 50 == 0) {
      REQUIRE(st.snapshot(e.actor, e.ts) == oracle::batch_features(prefix, e.actor, e.ts, {}));
    }
  }
}
