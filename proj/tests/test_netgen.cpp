#include <doctest.h>

#include <cmath>
#include <set>

#include "opidyn/netgen.hpp"
#include "oracles.hpp"

using namespace opidyn;

TEST_CASE("kronecker generator: density, determinism, structure") {
  KroneckerSpec spec;
  spec.seed = {0.9, 0.4, 0.4, 0.7};
  spec.scale = 9;  // 512 nodes
  spec.rng_seed = 123;

  const Network a = kronecker_graph(spec);
  const Network b = kronecker_graph(spec);
  CHECK(a.n_users() == 512);
  REQUIRE(a.edges().size() == b.edges().size());
  CHECK(a.edges() == b.edges());

  spec.rng_seed = 124;
  const Network c = kronecker_graph(spec);
  CHECK(a.edges() != c.edges());

  for (const auto& [u, v] : a.edges()) CHECK(u != v);

  // realized edge count within 4 sigma of the analytic expectation
  const double mean = kronecker_expected_edges(spec);
  const double sd = std::sqrt(mean);  // Poisson-binomial, bounded by Poisson
  CHECK(std::abs(static_cast<double>(a.edges().size()) - mean) <= 4.0 * sd);

  // expectation formula itself: sum^k minus the skipped diagonal mass,
  // which factorizes over bit positions as (s00 + s11)^k
  const double s = 0.9 + 0.4 + 0.4 + 0.7;
  CHECK(mean ==
        doctest::Approx(std::pow(s, 9) - std::pow(0.9 + 0.7, 9)).epsilon(1e-12));
}

TEST_CASE("kronecker generator: degenerate scales and guards") {
  KroneckerSpec tiny;
  tiny.seed = {1.0, 1.0, 1.0, 1.0};
  tiny.scale = 1;
  tiny.rng_seed = 5;
  const Network full = kronecker_graph(tiny);
  CHECK(full.n_users() == 2);
  CHECK(full.edges().size() == 2);  // both off-diagonal pairs, no loops

  tiny.seed = {1.0, 0.0, 0.0, 1.0};
  CHECK(kronecker_graph(tiny).edges().empty());  // diagonal-only mass

  tiny.scale = 0;  // degenerate but legal: one node, nothing to wire
  const Network one = kronecker_graph(tiny);
  CHECK(one.n_users() == 1);
  CHECK(one.edges().empty());

  KroneckerSpec bad = tiny;
  bad.scale = -1;
  CHECK_THROWS_AS(kronecker_graph(bad), std::invalid_argument);
  bad.scale = 15;
  CHECK_THROWS_AS(kronecker_graph(bad), std::invalid_argument);
  bad.scale = 3;
  bad.seed[2] = 1.5;
  CHECK_THROWS_AS(kronecker_graph(bad), std::invalid_argument);
  bad.seed[2] = -0.1;
  CHECK_THROWS_AS(kronecker_graph(bad), std::invalid_argument);
}

TEST_CASE("kronecker edge probability separates in- and out-blocks") {
  // strongly assortative seed: sample correlation between "same high bit"
  // and adjacency should be positive
  KroneckerSpec spec;
  spec.seed = {0.95, 0.2, 0.2, 0.95};
  spec.scale = 8;
  spec.rng_seed = 77;
  const Network g = kronecker_graph(spec);
  const int half = g.n_users() / 2;
  std::size_t same = 0, cross = 0;
  for (const auto& [u, v] : g.edges())
    ((u < half) == (v < half) ? same : cross) += 1;
  // expected ratio (0.95+0.95)/(0.2+0.2) = 4.75, pulled down to ~3.5 by the
  // skipped diagonal, which lives entirely in the same-half blocks
  CHECK(same > 2.5 * cross);
}

TEST_CASE("parameter generator: ranges, masks, excited fraction") {
  KroneckerSpec gs;
  gs.seed = {0.9, 0.5, 0.5, 0.6};
  gs.scale = 7;
  gs.rng_seed = 31;
  const Network net = kronecker_graph(gs);

  ParamGenSpec ps;
  ps.rng_seed = 32;
  ps.hawkes_fraction = 0.25;
  const ModelParams p = gen_params(net, ps);
  CHECK_NOTHROW(p.validate(net));
  CHECK(p.omega == 100.0);
  CHECK(p.nu == 1.0);
  CHECK(p.n_users() == net.n_users());

  // baseline rates land inside the configured box
  CHECK((p.mu.array() >= ps.mu_lo).all());
  CHECK((p.mu.array() <= ps.mu_hi).all());

  // influence weights only where a follow edge exists, every edge populated
  std::size_t a_nnz = 0;
  for (int k = 0; k < p.A.outerSize(); ++k)
    for (SparseMat::InnerIterator it(p.A, k); it; ++it) {
      CHECK(net.has_edge(static_cast<int>(it.row()), static_cast<int>(it.col())));
      ++a_nnz;
    }
  CHECK(a_nnz == net.edges().size());

  // excitation: self-loops on round(frac * n) users plus their in-edges
  std::set<int> excited;
  std::size_t b_offdiag = 0;
  for (int k = 0; k < p.B.outerSize(); ++k)
    for (SparseMat::InnerIterator it(p.B, k); it; ++it) {
      CHECK(it.value() >= 0.0);
      if (it.row() == it.col())
        excited.insert(static_cast<int>(it.row()));
      else {
        CHECK(net.has_edge(static_cast<int>(it.row()),
                           static_cast<int>(it.col())));
        ++b_offdiag;
      }
    }
  const auto want =
      static_cast<std::size_t>(std::lround(0.25 * net.n_users()));
  CHECK(excited.size() == want);

  // same seed, same draw; different seed, different alpha
  const ModelParams q = gen_params(net, ps);
  CHECK((q.alpha - p.alpha).norm() == 0.0);
  CHECK((Eigen::MatrixXd(q.A) - Eigen::MatrixXd(p.A)).norm() == 0.0);
  ParamGenSpec ps2 = ps;
  ps2.rng_seed = 33;
  CHECK((gen_params(net, ps2).alpha - p.alpha).norm() != 0.0);
}

TEST_CASE("parameter generator: fraction edge cases and scaling knob") {
  const Network net(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});

  ParamGenSpec none;
  none.rng_seed = 9;
  none.hawkes_fraction = 0.0;
  const ModelParams p0 = gen_params(net, none);
  CHECK(p0.B.nonZeros() == 0);

  ParamGenSpec all;
  all.rng_seed = 9;
  all.hawkes_fraction = 1.0;
  all.b_scale = 0.5;
  const ModelParams p1 = gen_params(net, all);
  int self_loops = 0;
  for (int u = 0; u < 4; ++u)
    if (p1.B.coeff(u, u) > 0.0) ++self_loops;
  CHECK(self_loops == 4);
  CHECK((p1.B.coeffs().array() <= all.b_hi * all.b_scale + 1e-15).all());

  ParamGenSpec bad;
  bad.hawkes_fraction = 1.5;
  CHECK_THROWS_AS(gen_params(net, bad), std::invalid_argument);
  bad.hawkes_fraction = 0.5;
  bad.mu_lo = -1.0;
  CHECK_THROWS_AS(gen_params(net, bad), std::invalid_argument);
}
