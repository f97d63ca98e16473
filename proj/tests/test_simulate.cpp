#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "opidyn/simulate.hpp"
#include "oracles.hpp"

using namespace opidyn;

namespace {

ModelParams poisson_params(int n, double mu) {
  ModelParams p;
  p.omega = 1.0;
  p.nu = 1.0;
  p.alpha = Vec::Zero(n);
  p.mu = Vec::Constant(n, mu);
  p.sigma = Vec::Constant(n, 0.2);
  p.A = SparseMat(n, n);
  p.B = SparseMat(n, n);
  return p;
}

}  // namespace

TEST_CASE("thinning: degenerate rates") {
  Rng rng = make_stream(1, 0);
  // nothing can ever fire
  CHECK_FALSE(sample_next_event_time(0.0, 0.0, 1.0, 0.0, 100.0, rng).has_value());
  // next arrival beyond the horizon
  CHECK_FALSE(sample_next_event_time(1e-12, 1e-12, 1.0, 0.0, 1.0, rng).has_value());
  // in range when it does fire
  for (int i = 0; i < 200; ++i) {
    const auto s = sample_next_event_time(2.0, 1.0, 0.5, 3.0, 8.0, rng);
    if (s) {
      CHECK(*s > 3.0);
      CHECK(*s < 8.0);
    }
  }
}

TEST_CASE("thinning: constant rate draws are exponential") {
  Rng rng = make_stream(2, 0);
  const double mu = 1.5;
  std::vector<double> gaps;
  for (int i = 0; i < 20000; ++i) {
    const auto s = sample_next_event_time(mu, mu, 1.0, 0.0, 1e18, rng);
    REQUIRE(s.has_value());
    gaps.push_back(*s);
  }
  // transform exp(mu) -> U(0,1) and run a KS test
  std::vector<double> u;
  for (double g : gaps) u.push_back(-std::expm1(-mu * g));
  CHECK(oracle::ks_uniform_pvalue(u) > 0.001);
}

TEST_CASE("simulation is reproducible and well formed") {
  const Network net = fixtures::random_network(30, 0.1, 5);
  const ModelParams p = fixtures::random_params(net, 6, 0.2, 0.15);
  SimConfig cfg;
  cfg.horizon = 40.0;
  cfg.rng_seed = 77;

  const EventLog a = simulate(net, p, cfg);
  const EventLog b = simulate(net, p, cfg);
  REQUIRE(a.size() == b.size());
  CHECK(a.size() > 50);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.events[i].t == b.events[i].t);
    CHECK(a.events[i].u == b.events[i].u);
    CHECK(a.events[i].m == b.events[i].m);
  }
  CHECK_NOTHROW(a.validate(net.n_users()));  // sorted, distinct, inside [0, T)

  cfg.rng_seed = 78;
  const EventLog c = simulate(net, p, cfg);
  REQUIRE(c.size() > 0);
  CHECK(a.events[0].t != c.events[0].t);
}

TEST_CASE("event budget trips a truncation error carrying the prefix") {
  const Network net = fixtures::random_network(10, 0.2, 8);
  const ModelParams p = fixtures::random_params(net, 9, 0.2, 0.1);
  SimConfig cfg;
  cfg.horizon = 200.0;
  cfg.rng_seed = 3;
  cfg.max_events = 25;
  try {
    simulate(net, p, cfg);
    FAIL("budget should have tripped");
  } catch (const truncation_error& ex) {
    CHECK(ex.partial.size() == 25);
    CHECK_NOTHROW(ex.partial.validate(net.n_users()));
    CHECK(ex.partial.horizon > ex.partial.events.back().t);
  }

  // a loose budget never trips
  cfg.max_events = 1u << 30;
  CHECK_NOTHROW(simulate(net, p, cfg));
}

TEST_CASE("after each event only the poster and followers are re-keyed") {
  const Network net = fixtures::random_network(25, 0.15, 14);
  const ModelParams p = fixtures::random_params(net, 15, 0.2, 0.1);
  SimConfig cfg;
  cfg.horizon = 30.0;
  cfg.rng_seed = 21;
  SimStats stats;
  const EventLog log = simulate(net, p, cfg, &stats);
  REQUIRE(stats.n_events == log.size());

  std::uint64_t expect = 0;
  for (const Event& e : log.events)
    expect += net.followers(e.u).size() + 1;  // +1: the poster's own re-draw
  CHECK(stats.n_rekeys == expect);
}

TEST_CASE("homogeneous no-excitation traffic matches the Poisson law") {
  const int n = 20;
  const double mu = 1.0, T = 50.0;
  const Network net = fixtures::random_network(n, 0.1, 30);
  const ModelParams p = poisson_params(n, mu);
  SimConfig cfg;
  cfg.horizon = T;
  cfg.rng_seed = 9001;
  const EventLog log = simulate(net, p, cfg);

  const double expect = n * mu * T;
  const double sd = std::sqrt(expect);
  CHECK(std::abs(static_cast<double>(log.size()) - expect) < 3 * sd);

  // per-user event times are conditionally uniform on [0, T)
  std::vector<std::vector<double>> times(n);
  for (const Event& e : log.events) times[e.u].push_back(e.t / T);
  int ok = 0, tested = 0;
  for (int u = 0; u < n; ++u) {
    if (times[u].size() < 5) continue;
    ++tested;
    ok += oracle::ks_uniform_pvalue(times[u]) > 0.01;
  }
  CHECK(tested >= 15);
  CHECK(ok >= tested - 1);
}

TEST_CASE("single-user self-excited rate approaches mu / (1 - b/nu)") {
  const Network net(1, {});
  ModelParams p = poisson_params(1, 1.0);
  p.B.insert(0, 0) = 0.5;
  SimConfig cfg;
  cfg.horizon = 100.0;

  double total = 0.0;
  const int runs = 40;
  for (int r = 0; r < runs; ++r) {
    cfg.rng_seed = 500 + r;
    total += static_cast<double>(simulate(net, p, cfg).size());
  }
  const double rate = total / (runs * cfg.horizon);
  CHECK(rate == doctest::Approx(2.0).epsilon(0.10));
}

TEST_CASE("warm continuation stays consistent with the prefix state") {
  const Network net = fixtures::random_network(12, 0.2, 51);
  const ModelParams p = fixtures::random_params(net, 52, 0.2, 0.15);
  SimConfig cfg;
  cfg.horizon = 20.0;
  cfg.rng_seed = 4;
  const EventLog full = simulate(net, p, cfg);
  REQUIRE(full.size() > 10);

  const double t0 = 10.0;
  MarkovState st = state_at(full, p, net, t0);
  SimConfig tail_cfg;
  tail_cfg.horizon = 20.0;
  tail_cfg.rng_seed = 99;
  const EventLog tail = simulate_from(st, net, p, tail_cfg);
  CHECK_NOTHROW(tail.validate(net.n_users()));
  for (const Event& e : tail.events) {
    CHECK(e.t > t0);
    CHECK(e.t < 20.0);
  }
  CHECK(st.t_now <= 20.0);
}

TEST_CASE("sentiment marks are drawn from the poster's decayed opinion") {
  // one speaker with a fixed opinion, tiny noise: every mark ~= alpha
  const Network net(1, {});
  ModelParams p = poisson_params(1, 2.0);
  p.alpha[0] = 0.9;
  p.sigma[0] = 1e-9;
  SimConfig cfg;
  cfg.horizon = 50.0;
  cfg.rng_seed = 123;
  const EventLog log = simulate(net, p, cfg);
  REQUIRE(log.size() > 50);
  for (const Event& e : log.events)
    CHECK(e.m == doctest::Approx(0.9).epsilon(1e-6));
}
