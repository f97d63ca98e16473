#pragma once
// Shared test instances.
#include <vector>

#include "opidyn/rng.hpp"
#include "opidyn/types.hpp"

namespace fixtures {

using namespace opidyn;

// user 1 follows user 0; A(1,0) = a. Baselines alpha = (0.5, 0).
inline Network chain2() { return Network(2, {{1, 0}}); }

inline ModelParams chain2_params(double a = 0.5, double omega = 1.0) {
  ModelParams p;
  p.omega = omega;
  p.nu = 1.0;
  p.alpha = Vec::Zero(2);
  p.alpha << 0.5, 0.0;
  p.mu = Vec::Ones(2);
  p.sigma = Vec::Constant(2, 0.1);
  p.A = SparseMat(2, 2);
  p.A.insert(1, 0) = a;
  p.A.makeCompressed();
  p.B = SparseMat(2, 2);
  return p;
}

// both users follow each other with coupling a
inline Network pair2() { return Network(2, {{0, 1}, {1, 0}}); }

inline ModelParams pair2_params(double a = 2.0) {
  ModelParams p;
  p.omega = 1.0;
  p.nu = 1.0;
  p.alpha = Vec::Constant(2, 0.1);
  p.mu = Vec::Ones(2);
  p.sigma = Vec::Constant(2, 0.1);
  p.A = SparseMat(2, 2);
  p.A.insert(0, 1) = a;
  p.A.insert(1, 0) = a;
  p.A.makeCompressed();
  p.B = SparseMat(2, 2);
  return p;
}

// directed Erdos-Renyi style graph, every ordered pair kept with prob p
inline Network random_network(int n, double p, std::uint64_t seed) {
  Rng rng = make_stream(seed, 17);
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (u != v && uniform01(rng) < p) edges.emplace_back(u, v);
  return Network(n, std::move(edges));
}

// random parameters over the graph; a_scale shrinks opinion couplings so the
// drift stays stable, b_scale < nu / (max in-degree + 1) keeps rates finite
inline ModelParams random_params(const Network& net, std::uint64_t seed,
                                 double a_scale = 0.3, double b_scale = 0.2,
                                 double omega = 1.0, double nu = 1.0) {
  const int n = net.n_users();
  Rng rng = make_stream(seed, 23);
  ModelParams p;
  p.omega = omega;
  p.nu = nu;
  p.alpha.resize(n);
  p.mu.resize(n);
  p.sigma.resize(n);
  for (int u = 0; u < n; ++u) {
    p.alpha[u] = normal01(rng);
    p.mu[u] = uniform_in(rng, 0.1, 1.0);
    p.sigma[u] = uniform_in(rng, 0.05, 0.5);
  }
  std::vector<Eigen::Triplet<double>> ta, tb;
  for (int u = 0; u < n; ++u) {
    tb.emplace_back(u, u, b_scale * uniform01(rng));
    for (int v : net.followees(u)) {
      ta.emplace_back(u, v, a_scale * normal01(rng));
      tb.emplace_back(u, v, b_scale * uniform01(rng));
    }
  }
  p.A = SparseMat(n, n);
  p.B = SparseMat(n, n);
  p.A.setFromTriplets(ta.begin(), ta.end());
  p.B.setFromTriplets(tb.begin(), tb.end());
  return p;
}

// synthetic log with sorted random times; exercises state machinery without
// needing the sampler
inline EventLog random_log(int n_users, int n_events, double T,
                           std::uint64_t seed) {
  Rng rng = make_stream(seed, 31);
  std::vector<double> times(n_events);
  for (auto& t : times) t = uniform_in(rng, 0.0, T);
  std::sort(times.begin(), times.end());
  EventLog log;
  log.horizon = T;
  double prev = -1.0;
  for (double t : times) {
    if (t <= prev) continue;  // drop collisions instead of perturbing
    Event e;
    e.t = t;
    e.u = static_cast<int>(uniform01(rng) * n_users);
    e.m = normal01(rng);
    log.events.push_back(e);
    prev = t;
  }
  return log;
}

}  // namespace fixtures
