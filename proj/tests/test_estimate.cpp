#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "opidyn/estimate.hpp"
#include "opidyn/simulate.hpp"
#include "oracles.hpp"

using namespace opidyn;

namespace {

// brute-force feature recomputation straight from the definitions
double g_direct(const EventLog& log, int source, double omega, double t) {
  double s = 0.0;
  for (const Event& e : log.events)
    if (e.u == source && e.t < t) s += e.m * std::exp(-omega * (t - e.t));
  return s;
}

double h_direct(const EventLog& log, int source, double nu, double t) {
  double s = 0.0;
  for (const Event& e : log.events)
    if (e.u == source && e.t < t) s += std::exp(-nu * (t - e.t));
  return s;
}

double compensator_direct(const EventLog& log, int source, double nu) {
  double s = 0.0;
  for (const Event& e : log.events)
    if (e.u == source) s += -std::expm1(-nu * (log.horizon - e.t)) / nu;
  return s;
}

}  // namespace

TEST_CASE("feature pass equals the brute-force definitions") {
  const Network net = fixtures::random_network(18, 0.15, 61);
  const EventLog log = fixtures::random_log(18, 350, 60.0, 62);
  const double omega = 1.3, nu = 0.7;
  const FeatureTable table = build_features(log, net, omega, nu);

  std::vector<int> seen(18, 0);
  for (const Event& e : log.events) {
    const UserFeatures& uf = table.users[e.u];
    const int j = seen[e.u]++;
    CHECK(uf.target[j] == e.m);
    for (std::size_t k = 0; k < uf.opinion_sources.size(); ++k)
      CHECK(uf.g(j, k) ==
            doctest::Approx(g_direct(log, uf.opinion_sources[k], omega, e.t))
                .epsilon(1e-9));
    for (std::size_t k = 0; k < uf.intensity_sources.size(); ++k)
      CHECK(uf.h(j, k) ==
            doctest::Approx(h_direct(log, uf.intensity_sources[k], nu, e.t))
                .epsilon(1e-9));
  }
  for (int u = 0; u < 18; ++u) {
    const UserFeatures& uf = table.users[u];
    CHECK(uf.g.rows() == seen[u]);
    CHECK(uf.intensity_sources[0] == u);  // self first, then followees
    for (std::size_t k = 0; k < uf.intensity_sources.size(); ++k)
      CHECK(uf.compensator[k] ==
            doctest::Approx(compensator_direct(log, uf.intensity_sources[k], nu))
                .epsilon(1e-12));
  }
}

TEST_CASE("feature pass, tiny case by hand") {
  // user 1 follows 0; user 0 posts m=1 at t=1 and m=-2 at t=2; user 1 posts
  // at t=3. With omega = ln 2 the opinion feature halves per unit gap.
  const Network net = fixtures::chain2();
  EventLog log;
  log.horizon = 4.0;
  log.events = {{1.0, 0, 1.0}, {2.0, 0, -2.0}, {3.0, 1, 0.5}};
  const double ln2 = std::log(2.0);
  const FeatureTable t = build_features(log, net, ln2, ln2);

  const UserFeatures& u1 = t.users[1];
  REQUIRE(u1.g.rows() == 1);
  // 1 * 2^-2 + (-2) * 2^-1 = -0.75
  CHECK(u1.g(0, 0) == doctest::Approx(-0.75).epsilon(1e-12));
  // intensity sources are (self=1, followee=0)
  CHECK(u1.h(0, 0) == 0.0);
  CHECK(u1.h(0, 1) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(u1.target[0] == 0.5);

  const UserFeatures& u0 = t.users[0];
  REQUIRE(u0.g.rows() == 2);
  CHECK(u0.g.cols() == 0);  // user 0 follows nobody
  CHECK(u0.h(1, 0) == doctest::Approx(0.5).epsilon(1e-12));  // own prior post
}

TEST_CASE("empty log yields empty features") {
  const Network net = fixtures::chain2();
  EventLog log;
  log.horizon = 5.0;
  const FeatureTable t = build_features(log, net, 1.0, 1.0);
  CHECK(t.users[0].g.rows() == 0);
  CHECK(t.users[1].compensator.isZero());
}

TEST_CASE("opinion fit: closed-form checks and rank handling") {
  // no sources, marks {1, 0}: the fit is a (shrunken) mean
  UserFeatures uf;
  uf.g.resize(2, 0);
  uf.target.resize(2);
  uf.target << 1.0, 0.0;
  CHECK(estimate_opinion_params(uf, 0.0).first ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(estimate_opinion_params(uf, 1.0).first ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  // one event, two columns: rank-deficient without a ridge
  UserFeatures thin;
  thin.opinion_sources = {0};
  thin.g.resize(1, 1);
  thin.g << 2.0;
  thin.target.resize(1);
  thin.target << 1.0;
  CHECK_THROWS_WITH_AS(estimate_opinion_params(thin, 0.0).first,
                       doctest::Contains("ridge"), std::invalid_argument);
  CHECK_NOTHROW(estimate_opinion_params(thin, 1e-3));

  // exactly determined system is recovered without regularization
  UserFeatures full;
  full.opinion_sources = {0};
  full.g.resize(3, 1);
  full.g << 0.0, 1.0, 2.0;
  full.target.resize(3);
  full.target << 1.0, 1.5, 2.0;  // alpha = 1, a = 0.5
  const auto [alpha, a] = estimate_opinion_params(full, 0.0);
  CHECK(alpha == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(a[0] == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("intensity likelihood: frozen value, gradient, barrier") {
  // one user, own events at t=1 and t=3, T=5, nu=1
  const Network net(1, {});
  EventLog log;
  log.horizon = 5.0;
  log.events = {{1.0, 0, 0.1}, {3.0, 0, -0.2}};
  const FeatureTable t = build_features(log, net, 1.0, 1.0);
  const UserFeatures& uf = t.users[0];

  Vec x(2);
  x << 1.0, 0.0;
  Vec grad(2);
  const double f = hawkes_negloglik(x, uf, 5.0, &grad);
  CHECK(f == doctest::Approx(5.0).epsilon(1e-12));  // -2 log 1 + mu T
  CHECK(grad[0] == doctest::Approx(3.0).epsilon(1e-12));  // T - N / mu
  const double want_db =
      (2.0 - std::exp(-4.0) - std::exp(-2.0)) - std::exp(-2.0);
  CHECK(grad[1] == doctest::Approx(want_db).epsilon(1e-12));

  Vec zero(2);
  zero << 0.0, 0.0;
  CHECK(std::isinf(hawkes_negloglik(zero, uf, 5.0, nullptr)));

  // analytic gradient against central differences on feasible points
  Rng rng = make_stream(4242, 0);
  for (int trial = 0; trial < 5; ++trial) {
    Vec pt(2);
    pt << uniform_in(rng, 0.2, 3.0), uniform_in(rng, 0.0, 2.0);
    Vec g(2);
    hawkes_negloglik(pt, uf, 5.0, &g);
    const Vec fd = oracle::fd_gradient(
        [&](const Vec& y) { return hawkes_negloglik(y, uf, 5.0, nullptr); }, pt);
    for (int i = 0; i < 2; ++i)
      CHECK(g[i] == doctest::Approx(fd[i]).epsilon(1e-5));
  }
}

TEST_CASE("projected-gradient solver recovers a constant rate exactly") {
  // evenly spaced events leave no room for self-excitation: the optimum sits
  // on the boundary b = 0 with mu = N / T
  const Network net(1, {});
  EventLog log;
  log.horizon = 5.0;
  for (int k = 0; k < 10; ++k) log.events.push_back({0.25 + 0.5 * k, 0, 0.0});
  const FeatureTable t = build_features(log, net, 1.0, 1.0);
  const UserFeatures& uf = t.users[0];

  // boundary optimality: the b-gradient points into the constraint
  Vec x(2);
  x << 2.0, 0.0;
  Vec grad(2);
  hawkes_negloglik(x, uf, 5.0, &grad);
  CHECK(grad[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(grad[1] > 0.1);

  SpgConfig cfg;
  cfg.tol = 1e-9;
  const SpgResult res = spg_estimate_intensity(uf, 5.0, cfg);
  CHECK(res.converged);
  CHECK(res.mu == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(res.b[0] == 0.0);
  CHECK(res.pg_norm <= 1e-9);
}

TEST_CASE("projected-gradient solver on random data stays feasible") {
  const Network net = fixtures::random_network(10, 0.2, 71);
  const ModelParams truth = fixtures::random_params(net, 72, 0.2, 0.3);
  SimConfig sc;
  sc.horizon = 60.0;
  sc.rng_seed = 73;
  const EventLog log = simulate(net, truth, sc);
  const FeatureTable t = build_features(log, net, truth.omega, truth.nu);

  for (int u = 0; u < 10; ++u) {
    if (t.users[u].target.size() == 0) continue;
    const SpgResult res = spg_estimate_intensity(t.users[u], log.horizon, {});
    CHECK(res.mu >= 0.0);
    CHECK((res.b.array() >= 0.0).all());
    CHECK(std::isfinite(res.objective));
    // the returned point is no worse than the conventional start
    Vec x0 = Vec::Zero(t.users[u].h.cols() + 1);
    x0[0] = static_cast<double>(t.users[u].target.size()) / log.horizon;
    CHECK(res.objective <=
          hawkes_negloglik(x0, t.users[u], log.horizon, nullptr) + 1e-9);
  }
}

TEST_CASE("estimate_all: fallbacks, determinism across thread counts") {
  Network net(5, {{1, 0}, {2, 0}, {2, 1}});  // users 3, 4 are isolated
  ModelParams truth = fixtures::random_params(net, 81, 0.3, 0.2);
  truth.mu[3] = 0.0;
  truth.mu[4] = 0.0;  // never post
  SimConfig sc;
  sc.horizon = 400.0;
  sc.rng_seed = 82;
  const EventLog log = simulate(net, truth, sc);
  REQUIRE(log.size() > 200);

  EstimateConfig cfg;
  cfg.omega = truth.omega;
  cfg.nu = truth.nu;
  cfg.threads = 1;
  const EstimateResult r1 = estimate_all(log, net, cfg);
  cfg.threads = 4;
  const EstimateResult r4 = estimate_all(log, net, cfg);

  CHECK(r1.failures.empty());
  CHECK((r1.params.alpha - r4.params.alpha).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((r1.params.mu - r4.params.mu).lpNorm<Eigen::Infinity>() == 0.0);

  // silent users fall back to neutral values
  CHECK(r1.params.alpha[3] == 0.0);
  CHECK(r1.params.mu[3] == doctest::Approx(1e-9));
  CHECK(r1.params.sigma[3] == 1.0);

  // active baselines land near the truth
  for (int u = 0; u < 3; ++u) {
    CHECK(std::abs(r1.params.alpha[u] - truth.alpha[u]) < 0.3);
    CHECK(std::abs(r1.params.mu[u] - truth.mu[u]) < 0.4);
    CHECK(r1.params.sigma[u] > 0.0);
  }
  CHECK_NOTHROW(r1.params.validate(net));
}

TEST_CASE("kernel grid selection finds the generating decay rate") {
  const Network net = fixtures::random_network(12, 0.25, 91);
  ModelParams truth = fixtures::random_params(net, 92, 0.8, 0.15, 2.0, 1.0);
  SimConfig sc;
  sc.horizon = 150.0;
  sc.rng_seed = 93;
  const EventLog log = simulate(net, truth, sc);
  REQUIRE(log.size() > 400);

  EstimateConfig base;
  const KernelSelection sel =
      select_kernels(log, net, {0.25, 2.0, 16.0}, {1.0}, base);
  CHECK(sel.omega == 2.0);
  CHECK(sel.nu == 1.0);
  CHECK(std::isfinite(sel.mse));
}
